#pragma once

// Fixed-effect logistic psychometric fit: log-likelihood, score and a
// Newton-Raphson MLE on binomial cells aggregated by intensity.

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "updown/core.hpp"
#include "updown/estimators/fit_result.hpp"
#include "updown/sim.hpp"

namespace updown {

// m successes out of n trials at intensity x.
struct BinomialCell {
    double x = 0.0;
    long n = 0;
    long m = 0;
};

inline std::vector<BinomialCell> binomial_cells(const std::vector<TrialRecord>& records) {
    std::map<double, BinomialCell> by_x;
    for (const auto& r : records) {
        auto& c = by_x[r.intensity];
        c.x = r.intensity;
        ++c.n;
        c.m += r.response;
    }
    std::vector<BinomialCell> out;
    out.reserve(by_x.size());
    for (const auto& [x, c] : by_x) out.push_back(c);
    return out;
}

inline std::vector<BinomialCell> binomial_cells(const SubjectData& subject) {
    return binomial_cells(subject.records);
}

inline std::vector<BinomialCell> binomial_cells(const Dataset& data) {
    std::vector<TrialRecord> all;
    for (const auto& s : data) all.insert(all.end(), s.records.begin(), s.records.end());
    return binomial_cells(all);
}

// log F and log(1 - F) at linear predictor eta, with 1 - F evaluated as F(-eta).
inline double log_success(double eta) noexcept { return std::log(logistic(eta)); }
inline double log_failure(double eta) noexcept { return std::log(logistic(-eta)); }

inline double loglik_logistic(const Theta& theta, const std::vector<BinomialCell>& cells) {
    double ll = 0.0;
    for (const auto& c : cells) {
        const double eta = theta.a + theta.b * c.x;
        if (c.m > 0) ll += static_cast<double>(c.m) * log_success(eta);
        if (c.n > c.m) ll += static_cast<double>(c.n - c.m) * log_failure(eta);
    }
    return ll;
}

inline std::array<double, 2> score_logistic(const Theta& theta, const std::vector<BinomialCell>& cells) {
    std::array<double, 2> g{0.0, 0.0};
    for (const auto& c : cells) {
        const double resid = static_cast<double>(c.m) - static_cast<double>(c.n) * logistic_prob(theta, 0.0, c.x);
        g[0] += resid;
        g[1] += resid * c.x;
    }
    return g;
}

inline double loglik_logistic(const Theta& theta, const Dataset& data) {
    return loglik_logistic(theta, binomial_cells(data));
}

inline std::array<double, 2> score_logistic(const Theta& theta, const Dataset& data) {
    return score_logistic(theta, binomial_cells(data));
}

struct LogisticOptions {
    int max_iterations = 100;
    double score_tolerance = 1e-8;
};

// Complete or quasi-complete separation for a single covariate with intercept.
inline bool is_separated(const std::vector<BinomialCell>& cells) {
    double min_s = std::numeric_limits<double>::infinity(), max_s = -min_s;
    double min_f = min_s, max_f = -min_s;
    for (const auto& c : cells) {
        if (c.m > 0) {
            min_s = std::min(min_s, c.x);
            max_s = std::max(max_s, c.x);
        }
        if (c.n > c.m) {
            min_f = std::min(min_f, c.x);
            max_f = std::max(max_f, c.x);
        }
    }
    if (!std::isfinite(min_s) || !std::isfinite(min_f)) return true;  // one outcome only
    return max_f <= min_s || max_s <= min_f;
}

inline void add_ed50(FitResult& fit, double a, double b, double var_a, double var_b, double cov_ab) {
    if (b == 0.0) {
        fit.set("ed50", std::numeric_limits<double>::quiet_NaN());
        return;
    }
    // Delta method with gradient (-1/b, a/b^2).
    const double ga = -1.0 / b;
    const double gb = a / (b * b);
    const double var = ga * ga * var_a + gb * gb * var_b + 2.0 * ga * gb * cov_ab;
    fit.set("ed50", -a / b, var >= 0.0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN());
}

inline FitResult fit_logistic_mle(const std::vector<BinomialCell>& cells, const LogisticOptions& opt = {}) {
    long total = 0;
    for (const auto& c : cells) total += c.n;
    require(total > 0, "fit_logistic_mle: no trials");
    int distinct = 0;
    for (const auto& c : cells) distinct += c.n > 0 ? 1 : 0;
    if (distinct < 2) throw NumericalError("fit_logistic_mle: rank deficient design (fewer than two intensities)");

    FitResult fit;
    fit.estimator = "logistic";
    const bool separated = is_separated(cells);

    long successes = 0;
    for (const auto& c : cells) successes += c.m;
    const double p0 = std::clamp(static_cast<double>(successes) / static_cast<double>(total), 0.01, 0.99);
    Theta theta{std::log(p0 / (1.0 - p0)), 0.0};
    double ll = loglik_logistic(theta, cells);
    std::array<double, 2> g = score_logistic(theta, cells);
    double h_aa = 0, h_ab = 0, h_bb = 0;  // observed information

    auto information = [&](const Theta& th) {
        h_aa = h_ab = h_bb = 0.0;
        for (const auto& c : cells) {
            const double p = logistic_prob(th, 0.0, c.x);
            const double w = static_cast<double>(c.n) * p * (1.0 - p);
            h_aa += w;
            h_ab += w * c.x;
            h_bb += w * c.x * c.x;
        }
    };

    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        if (std::max(std::abs(g[0]), std::abs(g[1])) < opt.score_tolerance) break;
        information(theta);
        const double det = h_aa * h_bb - h_ab * h_ab;
        if (!(det > 0.0) || !std::isfinite(det)) break;
        const double da = (h_bb * g[0] - h_ab * g[1]) / det;
        const double db = (h_aa * g[1] - h_ab * g[0]) / det;
        double step = 1.0;
        Theta next{};
        double ll_next = 0.0;
        for (int k = 0; k < 40; ++k) {
            next = {theta.a + step * da, theta.b + step * db};
            ll_next = loglik_logistic(next, cells);
            if (ll_next >= ll - 1e-12 * std::abs(ll)) break;
            step *= 0.5;
        }
        theta = next;
        ll = ll_next;
        g = score_logistic(theta, cells);
    }

    fit.iterations = it;
    fit.loglik = ll;
    fit.gradient_norm = std::max(std::abs(g[0]), std::abs(g[1]));
    information(theta);
    const double det = h_aa * h_bb - h_ab * h_ab;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double var_a = det > 0 ? h_bb / det : nan;
    const double var_b = det > 0 ? h_aa / det : nan;
    const double cov_ab = det > 0 ? -h_ab / det : nan;
    fit.set("a", theta.a, std::sqrt(var_a));
    fit.set("b", theta.b, std::sqrt(var_b));
    add_ed50(fit, theta.a, theta.b, var_a, var_b, cov_ab);

    if (separated) {
        fit.converged = false;
        fit.status = FitStatus::separation;
        fit.diagnostic = "separation: no finite MLE, |b| diverging (|b| = " + std::to_string(std::abs(theta.b)) +
                         " after " + std::to_string(it) + " iterations)";
    } else if (fit.gradient_norm < opt.score_tolerance) {
        fit.converged = true;
        fit.status = FitStatus::ok;
    } else {
        fit.converged = false;
        fit.status = FitStatus::max_iterations;
        fit.diagnostic = "Newton-Raphson did not reach the score tolerance";
    }
    return fit;
}

inline FitResult fit_logistic_mle(const Dataset& data, const LogisticOptions& opt = {}) {
    return fit_logistic_mle(binomial_cells(data), opt);
}

}  // namespace updown
