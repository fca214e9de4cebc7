#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "updown/error.hpp"

namespace updown {

// Gauss-Hermite rule for the weight exp(-x^2): sum_k w_k f(x_k) ~ int f(x) e^{-x^2} dx.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// Orthonormal Hermite recurrence at x: returns p_n(x) and p_{n-1}(x).
inline std::pair<double, double> hermite_pair(int n, double x) {
    double p1 = 1.0 / std::pow(std::numbers::pi, 0.25), p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = x * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
    }
    return {p1, p2};
}

}  // namespace detail

// Golub-Welsch eigenvalues as starting points, then Newton on the orthonormal
// recurrence; weights from 2 / p_n'(x)^2, which keeps the tail weights accurate.
inline GaussHermiteRule gauss_hermite(int n) {
    require(n >= 1, "gauss_hermite: need at least one node");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        J(k - 1, k) = std::sqrt(k / 2.0);
        J(k, k - 1) = J(k - 1, k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigen decomposition failed");
    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        double x = eig.eigenvalues()[k];
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            const auto [pn, pn1] = detail::hermite_pair(n, x);
            dp = std::sqrt(2.0 * n) * pn1;
            const double step = pn / dp;
            x -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        dp = std::sqrt(2.0 * n) * detail::hermite_pair(n, x).second;
        rule.nodes[static_cast<std::size_t>(k)] = x;
        rule.weights[static_cast<std::size_t>(k)] = 2.0 / (dp * dp);
    }
    return rule;
}

}  // namespace updown
