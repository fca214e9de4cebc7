#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "updown/error.hpp"

namespace updown {

enum class FitStatus {
    ok,
    boundary,        // valid fit with a variance/prevalence parameter on its boundary
    separation,      // no finite MLE; the slope or intercept diverges
    max_iterations,  // iteration cap reached; best iterate returned
    failed,
};

inline std::string_view to_string(FitStatus s) noexcept {
    switch (s) {
        case FitStatus::ok: return "ok";
        case FitStatus::boundary: return "boundary";
        case FitStatus::separation: return "separation";
        case FitStatus::max_iterations: return "max_iterations";
        case FitStatus::failed: return "failed";
    }
    return "?";
}

struct ParamEstimate {
    std::string name;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
};

struct FitResult {
    std::string estimator;
    std::vector<ParamEstimate> params;  // in reporting order
    double loglik = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iterations = 0;
    double gradient_norm = std::numeric_limits<double>::quiet_NaN();
    FitStatus status = FitStatus::failed;
    std::string diagnostic;

    void set(std::string name, double estimate, double se = std::numeric_limits<double>::quiet_NaN()) {
        for (auto& p : params)
            if (p.name == name) {
                p.estimate = estimate;
                p.se = se;
                return;
            }
        params.push_back({std::move(name), estimate, se});
    }

    [[nodiscard]] const ParamEstimate* find(std::string_view name) const noexcept {
        const auto it = std::find_if(params.begin(), params.end(), [&](const auto& p) { return p.name == name; });
        return it == params.end() ? nullptr : &*it;
    }

    [[nodiscard]] double estimate(std::string_view name) const {
        const auto* p = find(name);
        if (p == nullptr) throw ContractViolation("FitResult: no parameter '" + std::string(name) + "'");
        return p->estimate;
    }

    [[nodiscard]] double se(std::string_view name) const {
        const auto* p = find(name);
        if (p == nullptr) throw ContractViolation("FitResult: no parameter '" + std::string(name) + "'");
        return p->se;
    }
};

}  // namespace updown
