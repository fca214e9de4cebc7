#pragma once

// Small dense optimizers used by the likelihood fits: BFGS with a backtracking
// line search, and a Newton polish driven by a finite-difference Hessian of an
// analytic gradient.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace updown::optim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Returns f(x) and writes the gradient into g.
using Objective = std::function<double(const Vector& x, Vector& g)>;

struct Result {
    Vector x;
    double f = 0.0;
    Vector g;
    int iterations = 0;
    bool converged = false;
};

inline double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

inline Result minimize_bfgs(const Objective& fg, Vector x, double gtol, int max_iterations) {
    const auto n = x.size();
    Result r;
    r.g.resize(n);
    r.f = fg(x, r.g);
    r.x = x;
    Matrix H = Matrix::Identity(n, n);  // inverse Hessian approximation
    for (int it = 0; it < max_iterations; ++it) {
        r.iterations = it;
        if (max_abs(r.g) < gtol) {
            r.converged = true;
            return r;
        }
        Vector dir = -H * r.g;
        double slope = dir.dot(r.g);
        if (!(slope < 0.0)) {
            H.setIdentity();
            dir = -r.g;
            slope = dir.dot(r.g);
        }
        // Keep the first step of a fresh search from flying off.
        double step = std::min(1.0, 10.0 / std::max(1e-300, dir.norm()));
        Vector x_new(n), g_new(n);
        double f_new = 0.0;
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            x_new = r.x + step * dir;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= r.f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) return r;  // stalled at numerical precision

        const Vector s = x_new - r.x;
        const Vector y = g_new - r.g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Matrix I = Matrix::Identity(n, n);
            H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        r.x = x_new;
        r.f = f_new;
        r.g = g_new;
    }
    r.iterations = max_iterations;
    r.converged = max_abs(r.g) < gtol;
    return r;
}

// Central differences of the gradient; symmetrised.
inline Matrix numeric_hessian(const Objective& fg, const Vector& x, double rel_step = 1e-5) {
    const auto n = x.size();
    Matrix Hm(n, n);
    Vector gp(n), gm(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double h = rel_step * std::max(1.0, std::abs(x[j]));
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        fg(xp, gp);
        fg(xm, gm);
        Hm.col(j) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (Hm + Hm.transpose());
}

// Damped Newton from a BFGS solution. A step is halved until it lowers f or
// the gradient; stops when neither moves.
inline Result newton_polish(const Objective& fg, Result r, double gtol, int max_steps) {
    for (int k = 0; k < max_steps && max_abs(r.g) >= gtol; ++k) {
        const Matrix Hm = numeric_hessian(fg, r.x);
        Eigen::LDLT<Matrix> ldlt(Hm);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
        const Vector step = ldlt.solve(r.g);
        Vector x_new(r.x.size()), g_new(r.x.size());
        double f_new = 0.0;
        bool accepted = false;
        for (double t = 1.0; t > 1e-6; t *= 0.5) {
            x_new = r.x - t * step;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && (f_new < r.f || max_abs(g_new) < max_abs(r.g))) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        r.x = x_new;
        r.f = f_new;
        r.g = g_new;
        ++r.iterations;
    }
    r.converged = max_abs(r.g) < gtol;
    return r;
}

}  // namespace updown::optim
