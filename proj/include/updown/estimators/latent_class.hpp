#pragma once

// Two-class latent model for the non-parametric random-effect schemes.
//
// Subject i belongs to class A with probability tau; given its class, the
// response at level s is Bernoulli(pi_s(class)). The EM algorithm alternates
// posterior class weights (E-step) with the closed-form weighted proportions
// (M-step). Under a fixed design the intensity path carries no information on
// the class; under up-down allocation the ratio f(S_i | 0) / f(S_i | A) may be
// estimated by simulation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "updown/core.hpp"
#include "updown/designs.hpp"
#include "updown/estimators/fit_result.hpp"
#include "updown/random.hpp"
#include "updown/sim.hpp"

namespace updown {

inline constexpr double kLatentEps = 1e-12;

inline double clamp_open(double p) noexcept { return std::clamp(p, kLatentEps, 1.0 - kLatentEps); }

// Numerically safe log(exp(x) + exp(y)).
inline double log_add_exp(double x, double y) noexcept {
    if (x == -std::numeric_limits<double>::infinity()) return y;
    if (y == -std::numeric_limits<double>::infinity()) return x;
    const double m = std::max(x, y);
    return m + std::log1p(std::exp(-std::abs(x - y)));
}

struct LatentClassData {
    int levels = 0;
    std::vector<LevelCounts> counts;    // T_is, m_is per subject
    std::vector<std::vector<int>> paths;  // level sequence per subject

    [[nodiscard]] std::size_t subjects() const noexcept { return counts.size(); }
};

inline LatentClassData latent_class_data(const Dataset& data, int levels) {
    LatentClassData out;
    out.levels = levels;
    out.counts.reserve(data.size());
    out.paths.reserve(data.size());
    for (const auto& s : data) {
        out.counts.push_back(subject_counts(s, levels));
        out.paths.push_back(s.levels());
    }
    return out;
}

enum class LatentClass { zero, shifted };

// sum_s m_is log pi_s + (T_is - m_is) log(1 - pi_s) for a vector of accuracies.
inline double binomial_loglik(const LevelCounts& counts, const std::vector<double>& pi) {
    require(static_cast<int>(pi.size()) == counts.levels(), "binomial_loglik: level count mismatch");
    double ll = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        const long n = counts.trials[k];
        const long m = counts.correct[k];
        if (m > 0) ll += static_cast<double>(m) * std::log(clamp_open(pi[k]));
        if (n > m) ll += static_cast<double>(n - m) * std::log(clamp_open(1.0 - pi[k]));
    }
    return ll;
}

inline double conditional_loglik(LatentClass cls, const LevelCounts& counts, const LatentClassParams& params) {
    return binomial_loglik(counts, cls == LatentClass::zero ? params.pi0 : params.piA);
}

// Responses implied by an up-down path: a step down (or staying at level 1)
// means correct, a step up (or staying at level L) means incorrect. Stored as
// LevelCounts over the level the step left from. With L = 1 no step is
// informative.
inline LevelCounts updown_path_transitions(const std::vector<int>& path, int levels) {
    LevelCounts out(levels);
    if (levels == 1) return out;
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
        const int from = path[t];
        const int to = path[t + 1];
        int implied = -1;
        for (int y = 0; y <= 1; ++y)
            if (updown_next(from, y, levels) == to) implied = y;
        if (implied < 0) throw ContractViolation("updown_path_transitions: path is not an up-down path");
        const auto k = static_cast<std::size_t>(from - 1);
        ++out.trials[k];
        out.correct[k] += implied;
    }
    return out;
}

struct WeightMode {
    enum class Kind { exact_fd, ud_simulated, naive };
    Kind kind = Kind::exact_fd;
    int simulations = 1000;  // M forward paths per class (ud_simulated)
    std::uint64_t seed = 1;
};

inline std::string_view to_string(WeightMode::Kind k) noexcept {
    switch (k) {
        case WeightMode::Kind::exact_fd: return "exact_fd";
        case WeightMode::Kind::ud_simulated: return "ud_simulated";
        case WeightMode::Kind::naive: return "naive";
    }
    return "?";
}

inline WeightMode::Kind parse_weight_mode(std::string_view text) {
    if (text == "exact_fd" || text == "exact-fd") return WeightMode::Kind::exact_fd;
    if (text == "ud_simulated" || text == "ud-simulated") return WeightMode::Kind::ud_simulated;
    if (text == "naive") return WeightMode::Kind::naive;
    throw ContractViolation("unknown weight mode '" + std::string(text) + "'");
}

// Simulation estimate of log f(S_i | 0) - log f(S_i | A) for up-down paths.
//
// For every subject and level, M uniforms are drawn once. A forward simulation
// at that level answers correctly when u < pi_s(class), so the fraction of the
// M draws below pi_s estimates the probability of the observed step. The same
// uniforms serve both classes and every EM iteration, which makes the E-step
// a deterministic function of the parameters.
class PathRatioSimulator {
public:
    PathRatioSimulator(const LatentClassData& data, int simulations, std::uint64_t seed)
        : levels_(data.levels), M_(simulations) {
        require(simulations >= 1, "ud_simulated weights: M must be >= 1");
        transitions_.reserve(data.subjects());
        uniforms_.resize(data.subjects());
        for (std::size_t i = 0; i < data.subjects(); ++i) {
            transitions_.push_back(updown_path_transitions(data.paths[i], levels_));
            auto& per_level = uniforms_[i];
            per_level.resize(static_cast<std::size_t>(levels_));
            for (int k = 0; k < levels_; ++k) {
                if (transitions_[i].trials[static_cast<std::size_t>(k)] == 0) continue;
                RandomStream rng(seed, static_cast<std::uint32_t>(k + 1), static_cast<std::uint32_t>(i + 1),
                                 static_cast<std::uint32_t>(StreamPurpose::weight_simulation));
                auto& u = per_level[static_cast<std::size_t>(k)];
                u.resize(static_cast<std::size_t>(M_));
                for (auto& v : u) v = rng.uniform();
                std::sort(u.begin(), u.end());
            }
        }
    }

    [[nodiscard]] int simulations() const noexcept { return M_; }
    [[nodiscard]] const LevelCounts& transitions(std::size_t i) const { return transitions_.at(i); }

    // Simulated log f(S_i | class).
    [[nodiscard]] double log_path_prob(std::size_t i, const std::vector<double>& pi) const {
        const auto& tr = transitions_.at(i);
        double ll = 0.0;
        for (std::size_t k = 0; k < tr.trials.size(); ++k) {
            if (tr.trials[k] == 0) continue;
            const auto& u = uniforms_[i][k];
            const auto below = std::lower_bound(u.begin(), u.end(), pi[k]) - u.begin();
            const double p_hat = clamp_open(static_cast<double>(below) / M_);
            ll += static_cast<double>(tr.correct[k]) * std::log(p_hat) +
                  static_cast<double>(tr.trials[k] - tr.correct[k]) * std::log(1.0 - p_hat);
        }
        return ll;
    }

    [[nodiscard]] double log_ratio(std::size_t i, const LatentClassParams& params) const {
        return log_path_prob(i, params.pi0) - log_path_prob(i, params.piA);
    }

    // The quantity being estimated, in closed form.
    [[nodiscard]] double exact_log_ratio(std::size_t i, const LatentClassParams& params) const {
        return binomial_loglik(transitions_.at(i), params.pi0) - binomial_loglik(transitions_.at(i), params.piA);
    }

private:
    int levels_;
    int M_;
    std::vector<LevelCounts> transitions_;
    std::vector<std::vector<std::vector<double>>> uniforms_;
};

// Posterior class-A weights w_i plus the per-subject terms that produced them.
struct WeightVector {
    std::vector<double> w;
    std::vector<double> l0;         // l_i(0)
    std::vector<double> lA;         // l_i(A)
    std::vector<double> log_ratio;  // log f(S_i|0) - log f(S_i|A); zero unless simulated
};

// w = 1 / (1 + (1-tau)/tau * exp(l0 - lA) * ratio), evaluated on the log scale.
inline double posterior_class_weight(double tau, double l0, double lA, double log_ratio) noexcept {
    if (tau >= 1.0) return 1.0;
    if (tau <= 0.0) return 0.0;
    const double log_odds_zero = std::log1p(-tau) - std::log(tau) + l0 - lA + log_ratio;
    return log_odds_zero > 0 ? std::exp(-log_odds_zero) / (1.0 + std::exp(-log_odds_zero))
                             : 1.0 / (1.0 + std::exp(log_odds_zero));
}

class WeightComputer {
public:
    WeightComputer(const LatentClassData& data, WeightMode mode) : data_(&data), mode_(mode) {
        if (mode.kind == WeightMode::Kind::ud_simulated) simulator_.emplace(data, mode.simulations, mode.seed);
    }

    [[nodiscard]] WeightVector operator()(const LatentClassParams& params) const {
        const std::size_t n = data_->subjects();
        WeightVector out;
        out.w.resize(n);
        out.l0.resize(n);
        out.lA.resize(n);
        out.log_ratio.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            out.l0[i] = conditional_loglik(LatentClass::zero, data_->counts[i], params);
            out.lA[i] = conditional_loglik(LatentClass::shifted, data_->counts[i], params);
            if (simulator_) out.log_ratio[i] = simulator_->log_ratio(i, params);
            out.w[i] = posterior_class_weight(params.tau, out.l0[i], out.lA[i], out.log_ratio[i]);
        }
        return out;
    }

    [[nodiscard]] const WeightMode& mode() const noexcept { return mode_; }
    [[nodiscard]] const PathRatioSimulator* simulator() const noexcept {
        return simulator_ ? &*simulator_ : nullptr;
    }

private:
    const LatentClassData* data_;
    WeightMode mode_;
    std::optional<PathRatioSimulator> simulator_;
};

inline WeightVector em_weights(const LatentClassData& data, const LatentClassParams& params, const WeightMode& mode) {
    return WeightComputer(data, mode)(params);
}

struct MStepResult {
    std::vector<double> pi0;
    std::vector<double> piA;
    std::vector<bool> held0;  // level kept at its previous value (zero weighted trials)
    std::vector<bool> heldA;
};

// pi_s(A) = sum_i w_i m_is / sum_i w_i T_is; pi_s(0) likewise with 1 - w_i.
inline MStepResult em_m_step(std::span<const double> w, const std::vector<LevelCounts>& counts,
                             const LatentClassParams& previous) {
    require(w.size() == counts.size(), "em_m_step: weight/subject count mismatch");
    const auto L = static_cast<std::size_t>(previous.levels());
    std::vector<double> num0(L, 0.0), den0(L, 0.0), numA(L, 0.0), denA(L, 0.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        require(w[i] >= 0.0 && w[i] <= 1.0, "em_m_step: weights must lie in [0,1]");
        for (std::size_t k = 0; k < L; ++k) {
            const auto m = static_cast<double>(counts[i].correct[k]);
            const auto t = static_cast<double>(counts[i].trials[k]);
            numA[k] += w[i] * m;
            denA[k] += w[i] * t;
            num0[k] += (1.0 - w[i]) * m;
            den0[k] += (1.0 - w[i]) * t;
        }
    }
    MStepResult out;
    out.pi0.resize(L);
    out.piA.resize(L);
    out.held0.assign(L, false);
    out.heldA.assign(L, false);
    for (std::size_t k = 0; k < L; ++k) {
        if (den0[k] > 0.0) {
            out.pi0[k] = num0[k] / den0[k];
        } else {
            out.pi0[k] = previous.pi0[k];
            out.held0[k] = true;
        }
        if (denA[k] > 0.0) {
            out.piA[k] = numA[k] / denA[k];
        } else {
            out.piA[k] = previous.piA[k];
            out.heldA[k] = true;
        }
    }
    return out;
}

// tau = 1 / (1 + chi), chi = sum_i (1-w_i)/w_i / sum_i exp(l_i(0) - l_i(A)) * ratio_i.
// Weights are clamped into [eps, 1-eps].
inline double em_tau_update(std::span<const double> w, std::span<const double> l0, std::span<const double> lA,
                            std::span<const double> log_ratio) {
    require(!w.empty() && w.size() == l0.size() && w.size() == lA.size() && w.size() == log_ratio.size(),
            "em_tau_update: size mismatch");
    double numerator = 0.0;
    double log_denominator = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double wi = clamp_open(w[i]);
        numerator += (1.0 - wi) / wi;
        log_denominator = log_add_exp(log_denominator, l0[i] - lA[i] + log_ratio[i]);
    }
    const double log_chi = std::log(numerator) - log_denominator;
    return 1.0 / (1.0 + std::exp(log_chi));
}

// Observed-data log-likelihood: sum_i log((1-tau) e^{l_i(0)} + tau e^{l_i(A)}).
inline double latent_class_loglik(const LatentClassParams& params, const LatentClassData& data) {
    const double log_tau = std::log(params.tau);
    const double log_1m_tau = std::log1p(-params.tau);
    double ll = 0.0;
    for (const auto& c : data.counts)
        ll += log_add_exp(log_1m_tau + conditional_loglik(LatentClass::zero, c, params),
                          log_tau + conditional_loglik(LatentClass::shifted, c, params));
    return ll;
}

// Analytic gradient of the observed-data log-likelihood, ordered
// (pi0_1..pi0_L, piA_1..piA_L, tau).
inline std::vector<double> latent_class_score(const LatentClassParams& params, const LatentClassData& data) {
    const auto L = static_cast<std::size_t>(params.levels());
    std::vector<double> g(2 * L + 1, 0.0);
    for (const auto& c : data.counts) {
        const double l0 = conditional_loglik(LatentClass::zero, c, params);
        const double lA = conditional_loglik(LatentClass::shifted, c, params);
        const double w = posterior_class_weight(params.tau, l0, lA, 0.0);
        for (std::size_t k = 0; k < L; ++k) {
            const auto m = static_cast<double>(c.correct[k]);
            const auto t = static_cast<double>(c.trials[k]);
            if (t == 0.0) continue;
            const double p0 = clamp_open(params.pi0[k]);
            const double pA = clamp_open(params.piA[k]);
            g[k] += (1.0 - w) * (m - p0 * t) / (p0 * (1.0 - p0));
            g[L + k] += w * (m - pA * t) / (pA * (1.0 - pA));
        }
        if (w > 0.0) g[2 * L] += w / params.tau;
        if (w < 1.0) g[2 * L] -= (1.0 - w) / (1.0 - params.tau);
    }
    return g;
}

// Score with components removed where the parameter sits on the boundary of
// (0,1) and the gradient points outward (Karush-Kuhn-Tucker condition).
inline std::vector<double> projected_latent_class_score(const LatentClassParams& params, const LatentClassData& data,
                                                        double boundary = 1e-9) {
    auto g = latent_class_score(params, data);
    const auto L = static_cast<std::size_t>(params.levels());
    auto project = [&](double value, double& grad) {
        if ((value <= boundary && grad < 0.0) || (value >= 1.0 - boundary && grad > 0.0)) grad = 0.0;
    };
    for (std::size_t k = 0; k < L; ++k) {
        project(params.pi0[k], g[k]);
        project(params.piA[k], g[L + k]);
    }
    project(params.tau, g[2 * L]);
    return g;
}

inline double plug_in_marginal(const LatentClassParams& params, int level) {
    return marginal_latent_prob(params, level);
}

enum class TauUpdate {
    posterior_mean,  // tau = mean_i w_i, the maximiser of the complete-data bound
    reciprocal,      // em_tau_update
};

struct EmOptions {
    std::optional<LatentClassParams> init;
    int max_iterations = 10000;
    double tolerance = 1e-8;
    double score_tolerance = 1e-6;
    TauUpdate tau_update = TauUpdate::posterior_mean;
};

struct LatentClassFit {
    FitResult fit;
    LatentClassParams params;
    WeightVector weights;
    std::vector<double> loglik_trace;  // observed-data log-likelihood, one entry per iterate
    std::vector<bool> empty_cells;     // per (class, level): never updated by the M-step
};

// Pooled proportions shifted by -/+0.05 (clamped into (0.01, 0.99)), tau = 0.5.
inline LatentClassParams default_em_init(const LatentClassData& data, double A) {
    LatentClassParams p;
    p.A = A;
    p.tau = 0.5;
    const auto L = static_cast<std::size_t>(data.levels);
    p.pi0.resize(L);
    p.piA.resize(L);
    for (std::size_t k = 0; k < L; ++k) {
        double m = 0.0, t = 0.0;
        for (const auto& c : data.counts) {
            m += static_cast<double>(c.correct[k]);
            t += static_cast<double>(c.trials[k]);
        }
        const double pooled = t > 0.0 ? m / t : 0.5;
        p.pi0[k] = std::clamp(pooled - 0.05, 0.01, 0.99);
        p.piA[k] = std::clamp(pooled + 0.05, 0.01, 0.99);
    }
    return p;
}

// Class A is the high-accuracy class: swap labels when mean(piA) < mean(pi0).
inline bool identify_labels(LatentClassParams& p) {
    const double m0 = std::accumulate(p.pi0.begin(), p.pi0.end(), 0.0);
    const double mA = std::accumulate(p.piA.begin(), p.piA.end(), 0.0);
    if (mA >= m0) return false;
    std::swap(p.pi0, p.piA);
    p.tau = 1.0 - p.tau;
    return true;
}

namespace detail {

inline std::vector<double> pack(const LatentClassParams& p) {
    std::vector<double> v(p.pi0);
    v.insert(v.end(), p.piA.begin(), p.piA.end());
    v.push_back(p.tau);
    return v;
}

inline LatentClassParams unpack(const std::vector<double>& v, double A) {
    const std::size_t L = (v.size() - 1) / 2;
    LatentClassParams p;
    p.pi0.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(L));
    p.piA.assign(v.begin() + static_cast<std::ptrdiff_t>(L), v.begin() + static_cast<std::ptrdiff_t>(2 * L));
    p.tau = v.back();
    p.A = A;
    return p;
}

// Covariance of the free parameters from a numerically differentiated observed
// information; components with no information or on the boundary get NaN.
inline Eigen::MatrixXd latent_class_covariance(const LatentClassParams& params, const LatentClassData& data) {
    const auto x = pack(params);
    const auto n = static_cast<Eigen::Index>(x.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<Eigen::Index> active;
    const auto g0 = latent_class_score(params, data);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double v = x[static_cast<std::size_t>(j)];
        if (v <= 1e-6 || v >= 1.0 - 1e-6) continue;
        active.push_back(j);
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j : active) {
        const double v = x[static_cast<std::size_t>(j)];
        const double h = std::min(1e-6, 0.5 * std::min(v, 1.0 - v));
        auto xp = x, xm = x;
        xp[static_cast<std::size_t>(j)] += h;
        xm[static_cast<std::size_t>(j)] -= h;
        const auto gp = latent_class_score(unpack(xp, params.A), data);
        const auto gm = latent_class_score(unpack(xm, params.A), data);
        for (Eigen::Index r = 0; r < n; ++r)
            H(r, j) = (gp[static_cast<std::size_t>(r)] - gm[static_cast<std::size_t>(r)]) / (2.0 * h);
    }
    // Drop components without information (e.g. empty cells).
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j : active)
        if (std::abs(H(j, j)) > 1e-12) keep.push_back(j);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(n, n, nan);
    const auto k = static_cast<Eigen::Index>(keep.size());
    if (k == 0) return cov;
    Eigen::MatrixXd info(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) info(r, c) = -0.5 * (H(keep[r], keep[c]) + H(keep[c], keep[r]));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (!lu.isInvertible()) return cov;
    const Eigen::MatrixXd inv = lu.inverse();
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) cov(keep[r], keep[c]) = inv(r, c);
    (void)g0;
    return cov;
}

}  // namespace detail

inline LatentClassFit fit_latent_class_em(const LatentClassData& data, double A, const IntensityGrid& grid,
                                          const WeightMode& mode, const EmOptions& opt = {}) {
    require(data.subjects() >= 2, "fit_latent_class_em: need at least two subjects");
    require(data.levels == grid.levels(), "fit_latent_class_em: data and grid disagree on L");
    require(A > 0.0, "fit_latent_class_em: A must be > 0");

    const WeightComputer e_step(data, mode);
    const bool score_applies = mode.kind != WeightMode::Kind::ud_simulated;

    LatentClassFit out;
    LatentClassParams params = opt.init ? *opt.init : default_em_init(data, A);
    require(params.levels() == data.levels && static_cast<int>(params.piA.size()) == data.levels,
            "fit_latent_class_em: init has wrong length");
    params.A = A;
    identify_labels(params);
    out.loglik_trace.push_back(latent_class_loglik(params, data));
    const auto L = static_cast<std::size_t>(data.levels);
    std::vector<bool> ever_updated(2 * L, false);

    int it = 0;
    bool converged = false;
    double score_norm = std::numeric_limits<double>::quiet_NaN();
    for (; it < opt.max_iterations && !converged;) {
        ++it;
        const WeightVector weights = e_step(params);
        const MStepResult m = em_m_step(weights.w, data.counts, params);
        for (std::size_t k = 0; k < L; ++k) {
            if (!m.held0[k]) ever_updated[k] = true;
            if (!m.heldA[k]) ever_updated[L + k] = true;
        }
        LatentClassParams next = params;
        next.pi0 = m.pi0;
        next.piA = m.piA;
        if (opt.tau_update == TauUpdate::posterior_mean) {
            next.tau = std::accumulate(weights.w.begin(), weights.w.end(), 0.0) / static_cast<double>(weights.w.size());
        } else {
            const WeightVector at_new = e_step(LatentClassParams{next.pi0, next.piA, params.tau, A});
            std::vector<double> log_ratio = at_new.log_ratio;
            next.tau = em_tau_update(weights.w, at_new.l0, at_new.lA, log_ratio);
        }
        if (identify_labels(next)) {
            for (std::size_t k = 0; k < L; ++k) {
                const bool u0 = ever_updated[k];
                ever_updated[k] = ever_updated[L + k];
                ever_updated[L + k] = u0;
            }
        }

        double delta = std::abs(next.tau - params.tau);
        for (std::size_t k = 0; k < L; ++k) {
            delta = std::max(delta, std::abs(next.pi0[k] - params.pi0[k]));
            delta = std::max(delta, std::abs(next.piA[k] - params.piA[k]));
        }
        params = std::move(next);
        out.loglik_trace.push_back(latent_class_loglik(params, data));

        if (delta < opt.tolerance) {
            if (score_applies) {
                const auto g = projected_latent_class_score(params, data);
                score_norm = 0.0;
                for (double v : g) score_norm += v * v;
                score_norm = std::sqrt(score_norm);
                converged = score_norm < opt.score_tolerance;
            } else {
                converged = true;
            }
        }
    }

    out.params = params;
    out.weights = e_step(params);
    out.empty_cells.resize(2 * L);
    for (std::size_t j = 0; j < 2 * L; ++j) out.empty_cells[j] = !ever_updated[j];

    FitResult& fit = out.fit;
    fit.estimator = "latent-em";
    fit.loglik = out.loglik_trace.back();
    fit.iterations = it;
    fit.gradient_norm = score_norm;
    fit.converged = converged;
    const bool on_boundary = params.tau <= 1e-9 || params.tau >= 1.0 - 1e-9;
    if (!converged) {
        fit.status = FitStatus::max_iterations;
        fit.diagnostic = "EM reached the iteration cap";
    } else {
        fit.status = on_boundary ? FitStatus::boundary : FitStatus::ok;
    }

    const Eigen::MatrixXd cov = score_applies ? detail::latent_class_covariance(params, data)
                                              : Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(2 * L + 1),
                                                                          static_cast<Eigen::Index>(2 * L + 1),
                                                                          std::numeric_limits<double>::quiet_NaN());
    auto sd = [&](std::size_t j) {
        const double v = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        return v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
    };
    const auto tj = static_cast<Eigen::Index>(2 * L);
    for (std::size_t k = 0; k < L; ++k) fit.set("pi0_" + std::to_string(k + 1), params.pi0[k], sd(k));
    for (std::size_t k = 0; k < L; ++k) fit.set("piA_" + std::to_string(k + 1), params.piA[k], sd(L + k));
    fit.set("tau", params.tau, sd(2 * L));
    for (std::size_t k = 0; k < L; ++k) {
        // Delta method with gradient (1 - tau, tau, piA - pi0).
        const auto i0 = static_cast<Eigen::Index>(k);
        const auto iA = static_cast<Eigen::Index>(L + k);
        const double g0 = 1.0 - params.tau, gA = params.tau, gt = params.piA[k] - params.pi0[k];
        const double var = g0 * g0 * cov(i0, i0) + gA * gA * cov(iA, iA) + gt * gt * cov(tj, tj) +
                           2.0 * (g0 * gA * cov(i0, iA) + g0 * gt * cov(i0, tj) + gA * gt * cov(iA, tj));
        fit.set("pi_" + std::to_string(k + 1), plug_in_marginal(params, static_cast<int>(k + 1)),
                var >= 0.0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

}  // namespace updown
