#pragma once

// Logistic psychometric functions, intensity grids and subject effects.
//
// Intensity levels are 1-based integer indices 1..L; the real-valued stimulus
// intensity of level k is k*d/L. All functions here are pure.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "updown/error.hpp"

namespace updown {

// Probabilities are kept inside [kProbFloor, kProbCeil] so that logs stay finite.
inline constexpr double kProbFloor = 1e-300;
inline constexpr double kProbCeil = 1.0 - 1e-16;
inline constexpr double kEtaSaturation = 709.0;

// Intercept and slope of the logistic psychometric function (logit scale).
struct Theta {
    double a = 0.0;
    double b = 0.0;
};

class IntensityGrid {
public:
    IntensityGrid(double max_intensity, int levels) : d_(max_intensity), levels_(levels) {
        require(std::isfinite(max_intensity) && max_intensity > 0.0, "IntensityGrid: d must be > 0");
        require(levels >= 1, "IntensityGrid: L must be >= 1");
    }

    [[nodiscard]] double max_intensity() const noexcept { return d_; }
    [[nodiscard]] int levels() const noexcept { return levels_; }
    [[nodiscard]] double step() const noexcept { return d_ / levels_; }

    [[nodiscard]] bool contains(int level) const noexcept { return level >= 1 && level <= levels_; }

    [[nodiscard]] double value(int level) const {
        require(contains(level), "IntensityGrid: level out of range");
        return d_ * level / levels_;
    }

    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> out(static_cast<std::size_t>(levels_));
        for (int k = 1; k <= levels_; ++k) out[static_cast<std::size_t>(k - 1)] = value(k);
        return out;
    }

    // Nearest level for an intensity value; used when reading trial files.
    [[nodiscard]] int level_of(double intensity) const {
        const int k = static_cast<int>(std::lround(intensity / step()));
        require(contains(k), "IntensityGrid: intensity outside the grid");
        return k;
    }

private:
    double d_;
    int levels_;
};

enum class EffectKind { none, gaussian, latent };

// Subject-level random intercept. For `gaussian`, `scale` is the standard
// deviation; for `latent`, `scale` is the prevalence of class A and `offset`
// is the known class shift A. `value` is the realised intercept shift.
struct SubjectEffect {
    EffectKind kind = EffectKind::none;
    double scale = 0.0;
    double offset = 0.0;
    double value = 0.0;

    [[nodiscard]] bool in_class_a() const noexcept {
        return kind == EffectKind::latent && value != 0.0;
    }
};

// Class-conditional accuracies indexed by level-1, prevalence tau of class A,
// and the class offset A (a known constant, never estimated).
struct LatentClassParams {
    std::vector<double> pi0;
    std::vector<double> piA;
    double tau = 0.5;
    double A = 0.0;

    [[nodiscard]] int levels() const noexcept { return static_cast<int>(pi0.size()); }
};

inline double clamp_prob(double p) noexcept { return std::clamp(p, kProbFloor, kProbCeil); }

inline double logistic(double eta) noexcept {
    if (eta > kEtaSaturation) return kProbCeil;
    if (eta < -kEtaSaturation) return kProbFloor;
    return clamp_prob(1.0 / (1.0 + std::exp(-eta)));
}

inline double logit(double p) {
    require(p > 0.0 && p < 1.0, "logit: argument outside (0,1)");
    return std::log(p / (1.0 - p));
}

inline double logistic_prob(const Theta& theta, double alpha, double s) noexcept {
    return logistic(theta.a + alpha + theta.b * s);
}

inline double ed50(const Theta& theta) {
    if (theta.b == 0.0) throw NumericalError("ed50: degenerate slope b = 0");
    return -theta.a / theta.b;
}

// pi0 and piA on the grid; tau is left at its default and A is recorded.
inline LatentClassParams make_latent_probs(const Theta& theta, double A, const IntensityGrid& grid) {
    require(A > 0.0, "make_latent_probs: A must be > 0");
    LatentClassParams params;
    params.A = A;
    params.pi0.reserve(static_cast<std::size_t>(grid.levels()));
    params.piA.reserve(static_cast<std::size_t>(grid.levels()));
    for (int k = 1; k <= grid.levels(); ++k) {
        params.pi0.push_back(logistic_prob(theta, 0.0, grid.value(k)));
        params.piA.push_back(logistic_prob(theta, A, grid.value(k)));
    }
    return params;
}

inline double marginal_latent_prob(const LatentClassParams& params, int level) {
    require(level >= 1 && level <= params.levels(), "marginal_latent_prob: level out of range");
    const auto k = static_cast<std::size_t>(level - 1);
    return (1.0 - params.tau) * params.pi0[k] + params.tau * params.piA[k];
}

}  // namespace updown
