#pragma once

// Monte Carlo summary measures and the bias identities
//
//   E[pi_hat_s] - pi_s = -Cov(T_s, pi_hat_s) / E[T_s]
//
// for the per-level proportion, and its weighted analogue for the latent-class
// estimator with oracle posterior weights.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "updown/core.hpp"
#include "updown/estimators/latent_class.hpp"
#include "updown/parallel.hpp"
#include "updown/sim.hpp"

namespace updown {

struct SummaryStats {
    double absBias = std::numeric_limits<double>::quiet_NaN();
    double relBias = std::numeric_limits<double>::quiet_NaN();
    double SE = std::numeric_limits<double>::quiet_NaN();
    double RMSE = std::numeric_limits<double>::quiet_NaN();
    int R_effective = 0;
    bool relBias_defined = false;
};

// absBias = mean - truth, relBias = absBias / truth, SE = sample sd (R-1),
// RMSE = sqrt(SE^2 + absBias^2).
inline SummaryStats summarize(std::span<const double> estimates, double truth) {
    if (estimates.size() < 2) throw ContractViolation("summarize: need at least two estimates");
    const auto n = static_cast<double>(estimates.size());
    double mean = 0.0;
    for (double v : estimates) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : estimates) ss += (v - mean) * (v - mean);
    SummaryStats s;
    s.R_effective = static_cast<int>(estimates.size());
    s.absBias = mean - truth;
    s.SE = std::sqrt(ss / (n - 1.0));
    s.RMSE = std::sqrt(s.SE * s.SE + s.absBias * s.absBias);
    s.relBias_defined = truth != 0.0 && std::isfinite(truth);
    if (s.relBias_defined) s.relBias = s.absBias / truth;
    return s;
}

// Summary over the usable replications only (converged, finite estimate).
inline SummaryStats summarize_converged(std::span<const double> estimates, const std::vector<bool>& converged,
                                        double truth) {
    require(estimates.size() == converged.size(), "summarize_converged: size mismatch");
    std::vector<double> kept;
    kept.reserve(estimates.size());
    for (std::size_t r = 0; r < estimates.size(); ++r)
        if (converged[r] && std::isfinite(estimates[r])) kept.push_back(estimates[r]);
    return summarize(kept, truth);
}

// One draw of (total, successes) at a level: (T_s, m_s), or the weighted
// (sum_i w_i T_is, sum_i w_i m_is). `weight` is 1 for Monte Carlo draws and
// the outcome probability for exact enumeration.
struct IdentitySample {
    double weight = 1.0;
    double total = 0.0;
    double successes = 0.0;
};

struct BiasIdentity {
    int level = 0;
    double truth = std::numeric_limits<double>::quiet_NaN();
    double lhs = std::numeric_limits<double>::quiet_NaN();  // mean(pi_hat) - truth
    double rhs = std::numeric_limits<double>::quiet_NaN();  // -cov(T, pi_hat) / mean(T)
    double mc_se = std::numeric_limits<double>::quiet_NaN();
    double mean_total = 0.0;
    long used = 0;     // draws with a positive total
    long skipped = 0;  // draws where the level was never sampled

    [[nodiscard]] bool sampled() const noexcept { return used > 0; }
    [[nodiscard]] bool agree(double k = 3.0) const noexcept { return std::abs(lhs - rhs) < k * mc_se; }
};

// Both sides of the identity from draws conditioned on a positive total.
// lhs - rhs equals mean(m) / mean(T) - truth, whose Monte Carlo standard
// error is sd(m - truth * T) / (sqrt(n) * mean(T)).
inline BiasIdentity bias_identity_from_samples(std::span<const IdentitySample> samples, double truth) {
    BiasIdentity out;
    out.truth = truth;
    double wsum = 0.0;
    for (const auto& s : samples) {
        if (s.total > 0.0) {
            wsum += s.weight;
            ++out.used;
        } else {
            ++out.skipped;
        }
    }
    if (out.used == 0 || !(wsum > 0.0)) return out;
    double mean_t = 0.0, mean_p = 0.0, mean_tp = 0.0, mean_r = 0.0;
    for (const auto& s : samples) {
        if (!(s.total > 0.0)) continue;
        const double w = s.weight / wsum;
        const double p = s.successes / s.total;
        mean_t += w * s.total;
        mean_p += w * p;
        mean_tp += w * s.total * p;
        mean_r += w * (s.successes - truth * s.total);
    }
    double var_r = 0.0;
    for (const auto& s : samples) {
        if (!(s.total > 0.0)) continue;
        const double d = (s.successes - truth * s.total) - mean_r;
        var_r += (s.weight / wsum) * d * d;
    }
    const double cov = mean_tp - mean_t * mean_p;
    out.mean_total = mean_t;
    out.lhs = mean_p - truth;
    out.rhs = -cov / mean_t;
    out.mc_se = std::sqrt(var_r / static_cast<double>(out.used)) / mean_t;
    return out;
}

inline constexpr int kMinIdentityReplications = 1000;

namespace detail {

inline void require_identity_replications(int R) {
    require(R >= kMinIdentityReplications,
            "bias check: R must be >= " + std::to_string(kMinIdentityReplications));
}

inline BiasIdentity finish_level(std::vector<IdentitySample> samples, double truth, int level) {
    BiasIdentity b = bias_identity_from_samples(samples, truth);
    b.level = level;
    return b;
}

}  // namespace detail

// Identity for every level of a scheme without subject effects.
inline std::vector<BiasIdentity> bias_identity_scan(const ScenarioConfig& config, int R, int threads = 1) {
    config.validate();
    require(!has_random_effect(config.scheme), "bias_identity_check: scheme must have no random effect");
    detail::require_identity_replications(R);
    const auto L = static_cast<std::size_t>(config.L);
    std::vector<LevelCounts> per_rep(static_cast<std::size_t>(R));
    parallel_for(per_rep.size(), threads, [&](std::size_t r) {
        const Dataset data = simulate_dataset(config, StreamKey{config.seed, static_cast<std::uint32_t>(r)});
        per_rep[r] = sufficient_counts(data, config.L).pooled;
    });
    const IntensityGrid grid = config.grid();
    std::vector<BiasIdentity> out;
    out.reserve(L);
    for (std::size_t k = 0; k < L; ++k) {
        std::vector<IdentitySample> samples;
        samples.reserve(per_rep.size());
        for (const auto& c : per_rep)
            samples.push_back({1.0, static_cast<double>(c.trials[k]), static_cast<double>(c.correct[k])});
        const int level = static_cast<int>(k + 1);
        out.push_back(detail::finish_level(std::move(samples), logistic_prob(config.theta(), 0.0, grid.value(level)),
                                           level));
    }
    return out;
}

inline BiasIdentity bias_identity_check(const ScenarioConfig& config, int level, int R, int threads = 1) {
    require(config.grid().contains(level), "bias_identity_check: level out of range");
    auto scan = bias_identity_scan(config, R, threads);
    BiasIdentity b = scan[static_cast<std::size_t>(level - 1)];
    if (!b.sampled()) throw NumericalError("bias_identity_check: level " + std::to_string(level) + " never sampled");
    return b;
}

// Oracle class-A weights at the true parameters; the intensity ratio is 1
// under a fixed design.
inline std::vector<double> oracle_weights(const Dataset& data, const LatentClassParams& truth) {
    std::vector<double> w;
    w.reserve(data.size());
    for (const auto& s : data) {
        const LevelCounts c = subject_counts(s, truth.levels());
        w.push_back(posterior_class_weight(truth.tau, conditional_loglik(LatentClass::zero, c, truth),
                                           conditional_loglik(LatentClass::shifted, c, truth), 0.0));
    }
    return w;
}

// Weighted totals (sum_i w_i T_is, sum_i w_i m_is) for every level.
inline std::vector<IdentitySample> weighted_level_totals(const Dataset& data, const LatentClassParams& truth) {
    const auto w = oracle_weights(data, truth);
    std::vector<IdentitySample> out(static_cast<std::size_t>(truth.levels()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const LevelCounts c = subject_counts(data[i], truth.levels());
        for (std::size_t k = 0; k < out.size(); ++k) {
            out[k].total += w[i] * static_cast<double>(c.trials[k]);
            out[k].successes += w[i] * static_cast<double>(c.correct[k]);
        }
    }
    return out;
}

inline std::vector<BiasIdentity> weighted_bias_identity_scan(const ScenarioConfig& config, int R, int threads = 1) {
    config.validate();
    require(config.scheme == Scheme::FDr && config.effect == EffectKind::latent,
            "weighted_bias_identity_check: needs the FDr scheme with latent effects");
    detail::require_identity_replications(R);
    LatentClassParams truth = make_latent_probs(config.theta(), config.A, config.grid());
    truth.tau = config.tau;
    std::vector<std::vector<IdentitySample>> per_rep(static_cast<std::size_t>(R));
    parallel_for(per_rep.size(), threads, [&](std::size_t r) {
        const Dataset data = simulate_dataset(config, StreamKey{config.seed, static_cast<std::uint32_t>(r)});
        per_rep[r] = weighted_level_totals(data, truth);
    });
    std::vector<BiasIdentity> out;
    for (std::size_t k = 0; k < static_cast<std::size_t>(config.L); ++k) {
        std::vector<IdentitySample> samples;
        samples.reserve(per_rep.size());
        for (const auto& rep : per_rep) samples.push_back(rep[k]);
        out.push_back(detail::finish_level(std::move(samples), truth.piA[k], static_cast<int>(k + 1)));
    }
    return out;
}

inline BiasIdentity weighted_bias_identity_check(const ScenarioConfig& config, int level, int R, int threads = 1) {
    require(config.grid().contains(level), "weighted_bias_identity_check: level out of range");
    auto scan = weighted_bias_identity_scan(config, R, threads);
    BiasIdentity b = scan[static_cast<std::size_t>(level - 1)];
    if (!b.sampled())
        throw NumericalError("weighted_bias_identity_check: level " + std::to_string(level) + " never sampled");
    return b;
}

}  // namespace updown
