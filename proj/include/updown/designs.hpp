#pragma once

// Stimulus-allocation rules: fixed designs, the simple up-down staircase,
// the one-up-two-down staircase, and the exact intensity pmf recursion of the
// up-down walk on the unbounded integer lattice.

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "updown/error.hpp"
#include "updown/random.hpp"

namespace updown {

// Distribution f_S over levels 1..L used by a fixed design.
class FixedDesign {
public:
    explicit FixedDesign(std::vector<double> weights) : weights_(std::move(weights)) {
        require(!weights_.empty(), "FixedDesign: no levels");
        double total = 0.0;
        for (double w : weights_) {
            require(std::isfinite(w) && w >= 0.0, "FixedDesign: weights must be nonnegative");
            total += w;
        }
        require(std::abs(total - 1.0) <= 1e-12, "FixedDesign: weights must sum to 1");
        cumulative_.resize(weights_.size());
        std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
    }

    static FixedDesign uniform(int levels) {
        require(levels >= 1, "FixedDesign: L must be >= 1");
        std::vector<double> w(static_cast<std::size_t>(levels), 1.0 / levels);
        // Absorb rounding so the weights sum to 1 within tolerance.
        w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
        return FixedDesign(std::move(w));
    }

    static FixedDesign point_mass(int levels, int level) {
        require(level >= 1 && level <= levels, "FixedDesign: level out of range");
        std::vector<double> w(static_cast<std::size_t>(levels), 0.0);
        w[static_cast<std::size_t>(level - 1)] = 1.0;
        return FixedDesign(std::move(w));
    }

    [[nodiscard]] int levels() const noexcept { return static_cast<int>(weights_.size()); }
    [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
    [[nodiscard]] const std::vector<double>& cumulative() const noexcept { return cumulative_; }

private:
    std::vector<double> weights_;
    std::vector<double> cumulative_;
};

inline int sample_fixed(const FixedDesign& design, RandomStream& rng) {
    const double u = rng.uniform();
    const auto& cum = design.cumulative();
    for (std::size_t k = 0; k < cum.size(); ++k)
        if (u < cum[k]) return static_cast<int>(k) + 1;
    // u landed in the rounding gap above the last partial sum.
    for (std::size_t k = cum.size(); k-- > 0;)
        if (design.weights()[k] > 0.0) return static_cast<int>(k) + 1;
    return design.levels();
}

// One step of the simple up-down rule: down after a correct response, up after
// an incorrect one, clamped to [1, L].
inline int updown_next(int level, int response, int levels) {
    require(levels >= 1, "updown_next: L must be >= 1");
    require(level >= 1 && level <= levels, "updown_next: level out of range");
    require(response == 0 || response == 1, "updown_next: response must be 0 or 1");
    const int candidate = level - (2 * response - 1);
    if (candidate == 0) return 1;
    if (candidate == levels + 1) return levels;
    return candidate;
}

struct UpDownState {
    int level = 1;
    int consecutive_correct = 0;

    friend bool operator==(const UpDownState&, const UpDownState&) = default;
};

// One-up-two-down: step down only after two consecutive correct responses,
// step up after any incorrect one. Converges on accuracy 1/sqrt(2).
inline UpDownState one_up_two_down_next(UpDownState state, int response, int levels) {
    require(state.level >= 1 && state.level <= levels, "one_up_two_down_next: level out of range");
    require(response == 0 || response == 1, "one_up_two_down_next: response must be 0 or 1");
    if (response == 0) return {std::min(state.level + 1, levels), 0};
    if (state.consecutive_correct == 0) return {state.level, 1};
    return {std::max(state.level - 1, 1), 0};
}

inline constexpr double kOneUpTwoDownTarget = 0.70710678118654752440;

class WindowTooSmall : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Probability mass on the integer window [lo, lo + mass.size()).
struct LatticePmf {
    long lo = 0;
    std::vector<double> mass;

    [[nodiscard]] long hi() const noexcept { return lo + static_cast<long>(mass.size()) - 1; }

    [[nodiscard]] double at(long s) const noexcept {
        if (s < lo || s > hi()) return 0.0;
        return mass[static_cast<std::size_t>(s - lo)];
    }

    [[nodiscard]] double total() const noexcept {
        return std::accumulate(mass.begin(), mass.end(), 0.0);
    }

    // Uniform on first..last, embedded in a window padded by `pad` sites per side.
    static LatticePmf uniform(long first, long last, long pad) {
        require(first <= last && pad >= 0, "LatticePmf::uniform: bad range");
        LatticePmf pmf;
        pmf.lo = first - pad;
        pmf.mass.assign(static_cast<std::size_t>(last - first + 1 + 2 * pad), 0.0);
        const double p = 1.0 / static_cast<double>(last - first + 1);
        for (long s = first; s <= last; ++s) pmf.mass[static_cast<std::size_t>(s - pmf.lo)] = p;
        return pmf;
    }

    static LatticePmf delta(long site, long pad) { return uniform(site, site, pad); }
};

inline constexpr double kWindowTailTolerance = 1e-9;

// f_t(s) = F(s+1) f_{t-1}(s+1) + (1 - F(s-1)) f_{t-1}(s-1) on the unbounded lattice.
// F maps an integer site to the success probability there.
inline LatticePmf updown_pmf_step(const LatticePmf& prev, const std::function<double(long)>& success) {
    require(!prev.mass.empty(), "updown_pmf_step: empty window");
    // Mass that would leave the window: successes at lo, failures at hi.
    const double leak = success(prev.lo) * prev.at(prev.lo) +
                        (1.0 - success(prev.hi())) * prev.at(prev.hi());
    if (leak > kWindowTailTolerance)
        throw WindowTooSmall("updown_pmf_step: window too small, tail mass " + std::to_string(leak));

    LatticePmf next;
    next.lo = prev.lo;
    next.mass.assign(prev.mass.size(), 0.0);
    for (long s = prev.lo; s <= prev.hi(); ++s) {
        const double from_above = s + 1 <= prev.hi() ? success(s + 1) * prev.at(s + 1) : 0.0;
        const double from_below = s - 1 >= prev.lo ? (1.0 - success(s - 1)) * prev.at(s - 1) : 0.0;
        next.mass[static_cast<std::size_t>(s - prev.lo)] = from_above + from_below;
    }
    return next;
}

// Distribution of the T'th intensity of an unclamped walk started uniformly on
// first..last. The window is padded by 4T sites on each side.
inline LatticePmf updown_pmf(long first, long last, int trials, const std::function<double(long)>& success) {
    require(trials >= 1, "updown_pmf: T must be >= 1");
    LatticePmf pmf = LatticePmf::uniform(first, last, 4L * trials);
    for (int t = 2; t <= trials; ++t) pmf = updown_pmf_step(pmf, success);
    return pmf;
}

}  // namespace updown
