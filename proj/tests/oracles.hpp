#pragma once

// Independent reference computations for the tests: brute-force outcome
// enumeration, finite differences and direct numerical integration. Nothing
// here calls the estimators under test.

#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/sinh_sinh.hpp>

namespace oracle {

inline double F(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

// One complete outcome for a single subject: probability, level path and
// responses.
struct SubjectOutcome {
    double prob = 0.0;
    std::vector<int> levels;
    std::vector<int> responses;
};

// All (S_1, Y_1..Y_T) outcomes under the up-down rule with S_1 uniform on
// 1..L; p(level) is the success probability at a level.
inline std::vector<SubjectOutcome> enumerate_updown(int L, int T, const std::function<double(int)>& p) {
    std::vector<SubjectOutcome> out;
    for (int s1 = 1; s1 <= L; ++s1) {
        for (int mask = 0; mask < (1 << T); ++mask) {
            SubjectOutcome o;
            o.prob = 1.0 / L;
            int s = s1;
            for (int t = 0; t < T; ++t) {
                const int y = (mask >> t) & 1;
                o.levels.push_back(s);
                o.responses.push_back(y);
                o.prob *= y ? p(s) : 1.0 - p(s);
                // Step down after a correct response, up after an error, stay at the edges.
                s = y ? (s > 1 ? s - 1 : 1) : (s < L ? s + 1 : L);
            }
            out.push_back(o);
        }
    }
    return out;
}

// All (S_1..S_T, Y_1..Y_T) outcomes with levels drawn uniformly and independently.
inline std::vector<SubjectOutcome> enumerate_fixed(int L, int T, const std::function<double(int)>& p) {
    std::vector<SubjectOutcome> out;
    int level_paths = 1;
    for (int t = 0; t < T; ++t) level_paths *= L;
    for (int code = 0; code < level_paths; ++code) {
        std::vector<int> levels;
        int c = code;
        for (int t = 0; t < T; ++t) {
            levels.push_back(c % L + 1);
            c /= L;
        }
        for (int mask = 0; mask < (1 << T); ++mask) {
            SubjectOutcome o;
            o.prob = std::pow(1.0 / L, T);
            o.levels = levels;
            for (int t = 0; t < T; ++t) {
                const int y = (mask >> t) & 1;
                o.responses.push_back(y);
                o.prob *= y ? p(levels[t]) : 1.0 - p(levels[t]);
            }
            out.push_back(o);
        }
    }
    return out;
}

inline void count(const SubjectOutcome& o, int level, double& trials, double& correct) {
    trials = correct = 0.0;
    for (std::size_t t = 0; t < o.levels.size(); ++t) {
        if (o.levels[t] != level) continue;
        trials += 1.0;
        correct += o.responses[t];
    }
}

// Exact E[pi_hat - pi | T > 0] and -Cov(T, pi_hat | T > 0) / E[T | T > 0]
// from weighted (probability, total, successes) triples.
struct ExactIdentity {
    double lhs = 0.0;
    double rhs = 0.0;
};

struct Triple {
    double prob, total, successes;
};

inline ExactIdentity exact_identity(const std::vector<Triple>& draws, double truth) {
    double mass = 0.0, et = 0.0, ep = 0.0, etp = 0.0;
    for (const auto& d : draws) {
        if (d.total <= 0.0) continue;
        const double phat = d.successes / d.total;
        mass += d.prob;
        et += d.prob * d.total;
        ep += d.prob * phat;
        etp += d.prob * d.total * phat;
    }
    et /= mass;
    ep /= mass;
    etp /= mass;
    return {ep - truth, -(etp - et * ep) / et};
}

// Central differences of f at x, one coordinate at a time.
inline std::vector<double> central_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double x0 = x[j];
        x[j] = x0 + h;
        const double fp = f(x);
        x[j] = x0 - h;
        const double fm = f(x);
        x[j] = x0;
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Central differences of a long double function: the oracle's own rounding
// stays far below the tolerances the scores are checked at.
inline std::vector<double> central_gradient_ld(const std::function<long double(const std::vector<long double>&)>& f,
                                               const std::vector<double>& at, long double h = 1e-6L) {
    std::vector<long double> x(at.begin(), at.end());
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const long double x0 = x[j];
        x[j] = x0 + h;
        const long double fp = f(x);
        x[j] = x0 - h;
        const long double fm = f(x);
        x[j] = x0;
        g[j] = static_cast<double>((fp - fm) / (2.0L * h));
    }
    return g;
}

inline long double log_sigmoid(long double eta) {
    return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

// Binomial log-likelihood of (x, n, m) cells under logit p = a + b x, without constants.
struct Cell {
    double x;
    long n;
    long m;
};

inline long double logistic_loglik(long double a, long double b, const std::vector<Cell>& cells) {
    long double ll = 0;
    for (const auto& c : cells) {
        const long double eta = a + b * c.x;
        if (c.m > 0) ll += c.m * log_sigmoid(eta);
        if (c.n > c.m) ll += (c.n - c.m) * log_sigmoid(-eta);
    }
    return ll;
}

// Two-class binomial mixture log-likelihood over subjects; trials[i][k], correct[i][k].
inline long double latent_loglik(const std::vector<long double>& pi0, const std::vector<long double>& piA,
                                 long double tau, const std::vector<std::vector<long>>& trials,
                                 const std::vector<std::vector<long>>& correct) {
    long double ll = 0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        long double l0 = 0, lA = 0;
        for (std::size_t k = 0; k < pi0.size(); ++k) {
            const long n = trials[i][k], m = correct[i][k];
            l0 += m * std::log(pi0[k]) + (n - m) * std::log1p(-pi0[k]);
            lA += m * std::log(piA[k]) + (n - m) * std::log1p(-piA[k]);
        }
        const long double top = std::max(l0, lA);
        ll += top + std::log((1 - tau) * std::exp(l0 - top) + tau * std::exp(lA - top));
    }
    return ll;
}

// Same, with parameters packed as (pi0_1..pi0_L, piA_1..piA_L, tau).
inline long double latent_loglik_packed(const std::vector<long double>& v, const std::vector<std::vector<long>>& trials,
                                        const std::vector<std::vector<long>>& correct) {
    const std::size_t L = (v.size() - 1) / 2;
    const std::vector<long double> pi0(v.begin(), v.begin() + L), piA(v.begin() + L, v.begin() + 2 * L);
    return latent_loglik(pi0, piA, v.back(), trials, correct);
}

// Relative error with an absolute floor for components near zero.
inline double rel_error(double got, double want, double floor = 1e-3) {
    return std::abs(got - want) / std::max(std::abs(want), floor);
}

// log of the integral over alpha ~ N(0, sd^2) of prod_j p_j^m_j (1-p_j)^(n_j-m_j),
// p_j = F(a + alpha + b x_j), by double-exponential quadrature on the real line.
// The integrand is rescaled by its value at the mode found by a coarse scan.
inline double subject_marginal_loglik(double a, double b, double sd, const std::vector<Cell>& cells) {
    auto log_f = [&](double alpha) {
        double v = -0.5 * (alpha / sd) * (alpha / sd) - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
        for (const auto& c : cells) {
            const double eta = a + alpha + b * c.x;
            if (c.m > 0) v += c.m * static_cast<double>(log_sigmoid(eta));
            if (c.n > c.m) v += (c.n - c.m) * static_cast<double>(log_sigmoid(-eta));
        }
        return v;
    };
    double best = -1e300, arg = 0.0;
    for (double z = -10.0; z <= 10.0; z += 0.01) {
        const double v = log_f(sd * z);
        if (v > best) {
            best = v;
            arg = sd * z;
        }
    }
    boost::math::quadrature::sinh_sinh<double> integrator;
    const double integral =
        integrator.integrate([&](double u) { return std::exp(log_f(arg + u) - best); }, 1e-14);
    return best + std::log(integral);
}

}  // namespace oracle
