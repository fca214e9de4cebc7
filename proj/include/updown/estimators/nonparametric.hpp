#pragma once

#include <optional>
#include <vector>

#include "updown/sim.hpp"

namespace updown {

// Per-level proportion m_s / T_s; empty levels are inestimable (nullopt), not zero.
struct NonparametricFit {
    std::vector<std::optional<double>> pi_hat;  // index level-1

    [[nodiscard]] bool estimable(int level) const {
        return pi_hat.at(static_cast<std::size_t>(level - 1)).has_value();
    }
};

inline NonparametricFit fit_nonparametric(const LevelCounts& pooled) {
    NonparametricFit fit;
    fit.pi_hat.reserve(pooled.trials.size());
    for (std::size_t k = 0; k < pooled.trials.size(); ++k) {
        if (pooled.trials[k] > 0)
            fit.pi_hat.emplace_back(static_cast<double>(pooled.correct[k]) / static_cast<double>(pooled.trials[k]));
        else
            fit.pi_hat.emplace_back(std::nullopt);
    }
    return fit;
}

}  // namespace updown
