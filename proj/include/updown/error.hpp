#pragma once

#include <stdexcept>
#include <string>

namespace updown {

// Precondition on an argument was not met (level out of range, overlapping
// node sets, malformed probability vector, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not produce a result (rank-deficient design,
// window too small, quadrature failure, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ContractViolation(what);
}

}  // namespace updown
