#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "updown/estimators/fit_result.hpp"
#include "updown/estimators/logistic.hpp"

namespace updown {

struct TwoStageResult {
    FitResult fit;      // means and their standard errors (sd / sqrt(n_used))
    int n_used = 0;
    int n_excluded = 0;  // per-subject fits that did not converge
};

// Mean of per-subject estimates over the converged fits, parameter by parameter.
inline TwoStageResult two_stage_estimate(const std::vector<FitResult>& per_subject) {
    TwoStageResult out;
    out.fit.estimator = "two-stage";
    std::vector<const FitResult*> used;
    for (const auto& f : per_subject) {
        if (f.converged)
            used.push_back(&f);
        else
            ++out.n_excluded;
    }
    out.n_used = static_cast<int>(used.size());
    if (used.empty()) {
        out.fit.status = FitStatus::failed;
        out.fit.diagnostic = "two-stage: no converged per-subject fit";
        return out;
    }
    for (const auto& p : used.front()->params) {
        double sum = 0.0;
        int n = 0;
        for (const auto* f : used) {
            const double v = f->estimate(p.name);
            if (std::isfinite(v)) {
                sum += v;
                ++n;
            }
        }
        const double mean = n > 0 ? sum / n : std::nan("");
        double ss = 0.0;
        for (const auto* f : used) {
            const double v = f->estimate(p.name);
            if (std::isfinite(v)) ss += (v - mean) * (v - mean);
        }
        out.fit.set(p.name, mean, n > 1 ? std::sqrt(ss / (n - 1) / n) : std::nan(""));
    }
    out.fit.converged = true;
    out.fit.status = FitStatus::ok;
    out.fit.iterations = out.n_used;
    out.fit.diagnostic = std::to_string(out.n_excluded) + " subject fit(s) excluded";
    return out;
}

inline TwoStageResult fit_two_stage(const Dataset& data) {
    std::vector<FitResult> fits;
    fits.reserve(data.size());
    for (const auto& subject : data) {
        try {
            fits.push_back(fit_logistic_mle(binomial_cells(subject)));
        } catch (const NumericalError& e) {
            FitResult failed;
            failed.status = FitStatus::failed;
            failed.diagnostic = e.what();
            fits.push_back(std::move(failed));
        }
    }
    return two_stage_estimate(fits);
}

}  // namespace updown
