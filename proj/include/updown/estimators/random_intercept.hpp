#pragma once

// Random-intercept logistic model
//
//   Y_it | S_it, alpha_i ~ Bernoulli(F(a + alpha_i + b S_it)),  alpha_i ~ N(0, sd^2)
//
// fitted by maximising the marginal likelihood. Each subject's integral over
// alpha_i = sd * z is evaluated with adaptive Gauss-Hermite quadrature centred
// at the mode of the log integrand. Only the response factors enter: the
// intensity factors drop out under both fixed and up-down allocation.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "updown/estimators/fit_result.hpp"
#include "updown/estimators/gauss_hermite.hpp"
#include "updown/estimators/logistic.hpp"
#include "updown/estimators/optim.hpp"

namespace updown {

inline constexpr int kDefaultQuadratureNodes = 41;

struct RandomInterceptOptions {
    int nodes = kDefaultQuadratureNodes;
    std::optional<double> fixed_sd;  // pin the random-intercept sd (e.g. 0)
    int max_iterations = 500;
    double gradient_tolerance = 1e-6;
    double boundary_sd = 1e-4;  // |sd| below this is reported as a boundary fit
};

struct SubjectMarginal {
    double loglik = 0.0;
    std::array<double, 3> gradient{};  // d/da, d/db, d/dsd
};

namespace detail {

// log of prod_j p_j^m_j (1-p_j)^(n_j-m_j) * exp(-z^2/2), p_j = F(a + sd z + b x_j)
inline double log_integrand(double z, const Theta& theta, double sd, const std::vector<BinomialCell>& cells) {
    double g = -0.5 * z * z;
    for (const auto& c : cells) {
        const double eta = theta.a + sd * z + theta.b * c.x;
        if (c.m > 0) g += static_cast<double>(c.m) * log_success(eta);
        if (c.n > c.m) g += static_cast<double>(c.n - c.m) * log_failure(eta);
    }
    return g;
}

// Returns (residual sum, x-weighted residual sum, information sum) at z.
inline std::array<double, 3> residuals(double z, const Theta& theta, double sd, const std::vector<BinomialCell>& cells) {
    std::array<double, 3> r{0.0, 0.0, 0.0};
    for (const auto& c : cells) {
        const double p = logistic(theta.a + sd * z + theta.b * c.x);
        const double e = static_cast<double>(c.m) - static_cast<double>(c.n) * p;
        r[0] += e;
        r[1] += e * c.x;
        r[2] += static_cast<double>(c.n) * p * (1.0 - p);
    }
    return r;
}

}  // namespace detail

// Marginal log-likelihood of one subject and its gradient in (a, b, sd).
inline SubjectMarginal subject_marginal_loglik(const Theta& theta, double sd, const std::vector<BinomialCell>& cells,
                                               const GaussHermiteRule& rule) {
    // Mode of the strictly concave log integrand by safeguarded Newton.
    double z = 0.0;
    double g = detail::log_integrand(z, theta, sd, cells);
    for (int it = 0; it < 100; ++it) {
        const auto r = detail::residuals(z, theta, sd, cells);
        const double d1 = sd * r[0] - z;
        const double d2 = -sd * sd * r[2] - 1.0;
        double step = -d1 / d2;
        if (std::abs(step) < 1e-12 * (1.0 + std::abs(z))) break;
        double z_new = z + step;
        double g_new = detail::log_integrand(z_new, theta, sd, cells);
        for (int k = 0; k < 50 && !(g_new >= g); ++k) {
            step *= 0.5;
            z_new = z + step;
            g_new = detail::log_integrand(z_new, theta, sd, cells);
        }
        z = z_new;
        g = g_new;
    }
    const double curvature = sd * sd * detail::residuals(z, theta, sd, cells)[2] + 1.0;
    const double scale = std::sqrt(2.0 / curvature);  // sqrt(2) * (posterior sd of z)

    const std::size_t K = rule.nodes.size();
    std::vector<double> log_terms(K);
    std::vector<std::array<double, 3>> res(K);
    std::vector<double> zk(K);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        const double x = rule.nodes[k];
        zk[k] = z + scale * x;
        log_terms[k] = std::log(rule.weights[k]) + x * x + detail::log_integrand(zk[k], theta, sd, cells);
        res[k] = detail::residuals(zk[k], theta, sd, cells);
        top = std::max(top, log_terms[k]);
    }
    if (!std::isfinite(top)) throw NumericalError("random intercept: quadrature failure (non-finite integrand)");
    double sum = 0.0;
    for (double lt : log_terms) sum += std::exp(lt - top);

    SubjectMarginal out;
    out.loglik = std::log(scale) - 0.5 * std::log(2.0 * std::numbers::pi) + top + std::log(sum);
    for (std::size_t k = 0; k < K; ++k) {
        const double w = std::exp(log_terms[k] - top) / sum;
        out.gradient[0] += w * res[k][0];
        out.gradient[1] += w * res[k][1];
        out.gradient[2] += w * zk[k] * res[k][0];
    }
    if (!std::isfinite(out.loglik)) throw NumericalError("random intercept: quadrature failure");
    return out;
}

inline FitResult fit_random_intercept(const Dataset& data, const RandomInterceptOptions& opt = {}) {
    require(data.size() >= 2, "fit_random_intercept: need at least two subjects");
    require(!opt.fixed_sd || *opt.fixed_sd >= 0.0, "fit_random_intercept: fixed sd must be >= 0");
    const GaussHermiteRule rule = gauss_hermite(opt.nodes);
    std::vector<std::vector<BinomialCell>> subjects;
    subjects.reserve(data.size());
    for (const auto& s : data) subjects.push_back(binomial_cells(s));

    const bool free_sd = !opt.fixed_sd.has_value();
    const Eigen::Index dim = free_sd ? 3 : 2;

    optim::Objective objective = [&](const optim::Vector& x, optim::Vector& grad) {
        const Theta theta{x[0], x[1]};
        const double sd = free_sd ? x[2] : *opt.fixed_sd;
        double f = 0.0;
        grad.setZero(dim);
        for (const auto& cells : subjects) {
            const auto m = subject_marginal_loglik(theta, sd, cells, rule);
            f -= m.loglik;
            grad[0] -= m.gradient[0];
            grad[1] -= m.gradient[1];
            if (free_sd) grad[2] -= m.gradient[2];
        }
        return f;
    };

    // Start from the pooled fixed-effect fit.
    optim::Vector x0(dim);
    const auto pooled = binomial_cells(data);
    FitResult start;
    try {
        start = fit_logistic_mle(pooled);
    } catch (const NumericalError&) {
        start.status = FitStatus::failed;
    }
    if (start.converged) {
        x0[0] = start.estimate("a");
        x0[1] = start.estimate("b");
    } else {
        x0[0] = 0.0;
        x0[1] = 0.0;
    }
    if (free_sd) x0[2] = 0.5;

    // BFGS to the basin, Newton to the tolerance: slope and intercept are
    // strongly correlated over a narrow intensity range and BFGS crawls there.
    const double coarse = std::max(opt.gradient_tolerance, 1e-2);
    optim::Result r = optim::minimize_bfgs(objective, x0, coarse, opt.max_iterations);
    r = optim::newton_polish(objective, r, opt.gradient_tolerance, 50);
    if (!r.converged) {
        const int used = r.iterations;
        r = optim::minimize_bfgs(objective, r.x, opt.gradient_tolerance, opt.max_iterations);
        r.iterations += used;
        r = optim::newton_polish(objective, r, opt.gradient_tolerance, 50);
    }

    FitResult fit;
    fit.estimator = "random-intercept";
    fit.loglik = -r.f;
    fit.iterations = r.iterations;
    fit.gradient_norm = optim::max_abs(r.g);

    const optim::Matrix H = optim::numeric_hessian(objective, r.x);
    Eigen::FullPivLU<optim::Matrix> lu(H);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    optim::Matrix cov = optim::Matrix::Constant(dim, dim, nan);
    if (lu.isInvertible()) cov = lu.inverse();
    auto se_of = [&](Eigen::Index i) { return cov(i, i) >= 0.0 ? std::sqrt(cov(i, i)) : nan; };

    const double sd_hat = free_sd ? std::abs(r.x[2]) : *opt.fixed_sd;
    fit.set("a", r.x[0], se_of(0));
    fit.set("b", r.x[1], se_of(1));
    add_ed50(fit, r.x[0], r.x[1], cov(0, 0), cov(1, 1), cov(0, 1));
    fit.set("tau", sd_hat, free_sd ? se_of(2) : 0.0);

    fit.converged = r.converged;
    if (!r.converged) {
        fit.status = FitStatus::max_iterations;
        fit.diagnostic = "quasi-Newton stopped with gradient norm " + std::to_string(fit.gradient_norm);
    } else if (free_sd && sd_hat < opt.boundary_sd) {
        fit.status = FitStatus::boundary;
        fit.diagnostic = "random-intercept sd at the boundary 0";
    } else {
        fit.status = FitStatus::ok;
    }
    return fit;
}

}  // namespace updown
