#pragma once

// Trial-sequence simulation under the four schemes:
//
//   FD   fixed design, no subject effect
//   FDr  fixed design, subject random intercept
//   UD   up-down design, no subject effect
//   UDr  up-down design, subject random intercept
//
// The subject effect is either Gaussian (sd tau) or a two-class latent effect
// (shift A with prevalence tau).

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "updown/core.hpp"
#include "updown/designs.hpp"
#include "updown/error.hpp"
#include "updown/random.hpp"

namespace updown {

enum class Scheme { FD, FDr, UD, UDr };

// How a fixed design allocates intensities: independent draws from f_S, or a
// deterministic cycle through the levels from a uniformly drawn start.
enum class FixedAllocation { random, balanced };

inline bool is_updown(Scheme s) noexcept { return s == Scheme::UD || s == Scheme::UDr; }
inline bool has_random_effect(Scheme s) noexcept { return s == Scheme::FDr || s == Scheme::UDr; }

inline std::string_view to_string(Scheme s) noexcept {
    switch (s) {
        case Scheme::FD: return "FD";
        case Scheme::FDr: return "FDr";
        case Scheme::UD: return "UD";
        case Scheme::UDr: return "UDr";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view text) {
    if (text == "FD") return Scheme::FD;
    if (text == "FDr") return Scheme::FDr;
    if (text == "UD") return Scheme::UD;
    if (text == "UDr") return Scheme::UDr;
    throw ContractViolation("unknown scheme '" + std::string(text) + "'");
}

inline std::string_view to_string(EffectKind k) noexcept {
    switch (k) {
        case EffectKind::none: return "none";
        case EffectKind::gaussian: return "gaussian";
        case EffectKind::latent: return "latent";
    }
    return "?";
}

inline EffectKind parse_effect_kind(std::string_view text) {
    if (text == "none") return EffectKind::none;
    if (text == "gaussian") return EffectKind::gaussian;
    if (text == "latent") return EffectKind::latent;
    throw ContractViolation("unknown effect model '" + std::string(text) + "'");
}

struct ScenarioConfig {
    std::string id = "scenario";
    Scheme scheme = Scheme::FD;
    EffectKind effect = EffectKind::none;
    int N = 25;
    int T = 25;
    double d = 0.2;
    int L = 10;
    double a = 0.05;
    double b = 9.0;
    double tau = 1.0;  // Gaussian sd, or latent prevalence
    double A = 0.0;    // latent class offset
    int R = 1000;
    std::uint64_t seed = 1;
    FixedAllocation allocation = FixedAllocation::random;

    [[nodiscard]] Theta theta() const noexcept { return {a, b}; }
    [[nodiscard]] IntensityGrid grid() const { return IntensityGrid(d, L); }

    void validate() const {
        require(N >= 0, "config: N must be >= 0");
        require(T >= 1, "config: T must be >= 1");
        require(L >= 1, "config: L must be >= 1");
        require(d > 0.0, "config: d must be > 0");
        require(R >= 1, "config: R must be >= 1");
        require(std::isfinite(a) && std::isfinite(b), "config: a and b must be finite");
        if (has_random_effect(scheme)) {
            require(effect != EffectKind::none,
                    "config: scheme " + std::string(to_string(scheme)) + " needs effect gaussian or latent");
        } else {
            require(effect == EffectKind::none,
                    "config: scheme " + std::string(to_string(scheme)) + " takes no subject effect");
        }
        if (effect == EffectKind::gaussian) require(tau >= 0.0, "config: gaussian tau (sd) must be >= 0");
        if (effect == EffectKind::latent) {
            // tau = 1 is admitted as the all-class-A limit used by the bias checks.
            require(tau > 0.0 && tau <= 1.0, "config: latent tau must be in (0,1]");
            require(A > 0.0, "config: latent A must be > 0");
        }
    }
};

struct TrialRecord {
    int subject = 0;
    int t = 0;
    int level = 0;
    double intensity = 0.0;
    int response = 0;
};

// One subject's trials in time order. `effect` holds the realised intercept
// shift; it exists for oracle checks and is never read by an estimator.
struct SubjectData {
    int subject = 0;
    std::vector<TrialRecord> records;
    SubjectEffect effect;

    [[nodiscard]] std::vector<int> levels() const {
        std::vector<int> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.level);
        return out;
    }
    [[nodiscard]] std::vector<int> responses() const {
        std::vector<int> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.response);
        return out;
    }
};

using Dataset = std::vector<SubjectData>;

// Per-level trial and success counts (index level-1).
struct LevelCounts {
    std::vector<long> trials;
    std::vector<long> correct;

    explicit LevelCounts(int levels = 0)
        : trials(static_cast<std::size_t>(levels), 0), correct(static_cast<std::size_t>(levels), 0) {}

    [[nodiscard]] int levels() const noexcept { return static_cast<int>(trials.size()); }
    [[nodiscard]] long total_trials() const noexcept {
        long n = 0;
        for (long t : trials) n += t;
        return n;
    }
};

// Per-subject counts T_is, m_is plus the pooled totals T_s, m_s.
struct SufficientCounts {
    std::vector<LevelCounts> per_subject;
    LevelCounts pooled;
};

inline LevelCounts subject_counts(const SubjectData& subject, int levels) {
    LevelCounts c(levels);
    for (const auto& r : subject.records) {
        require(r.level >= 1 && r.level <= levels, "subject_counts: level out of range");
        const auto k = static_cast<std::size_t>(r.level - 1);
        ++c.trials[k];
        c.correct[k] += r.response;
    }
    return c;
}

inline SufficientCounts sufficient_counts(const Dataset& data, int levels) {
    SufficientCounts out;
    out.pooled = LevelCounts(levels);
    out.per_subject.reserve(data.size());
    for (const auto& subject : data) {
        out.per_subject.push_back(subject_counts(subject, levels));
        const auto& c = out.per_subject.back();
        for (int k = 0; k < levels; ++k) {
            out.pooled.trials[static_cast<std::size_t>(k)] += c.trials[static_cast<std::size_t>(k)];
            out.pooled.correct[static_cast<std::size_t>(k)] += c.correct[static_cast<std::size_t>(k)];
        }
    }
    return out;
}

inline SubjectEffect draw_effect(const ScenarioConfig& config, RandomStream& rng) {
    SubjectEffect e;
    e.kind = config.effect;
    switch (config.effect) {
        case EffectKind::none:
            break;
        case EffectKind::gaussian:
            e.scale = config.tau;
            e.value = config.tau * rng.normal();
            break;
        case EffectKind::latent:
            e.scale = config.tau;
            e.offset = config.A;
            e.value = rng.bernoulli(config.tau) ? config.A : 0.0;
            break;
    }
    return e;
}

// Trials for one subject. S_1 is uniform on the grid; later levels follow the
// scheme's design; Y_t ~ Bernoulli(F(S_t; theta, alpha)).
inline SubjectData simulate_subject(const ScenarioConfig& config, const SubjectEffect& effect,
                                    const StreamKey& key, int subject) {
    const IntensityGrid grid = config.grid();
    const Theta theta = config.theta();
    const auto id = static_cast<std::uint32_t>(subject);
    RandomStream level_rng = key.stream(id, StreamPurpose::levels);
    RandomStream response_rng = key.stream(id, StreamPurpose::responses);
    const FixedDesign fixed = FixedDesign::uniform(config.L);

    SubjectData out;
    out.subject = subject;
    out.effect = effect;
    out.records.reserve(static_cast<std::size_t>(config.T));

    int level = sample_fixed(fixed, level_rng);
    for (int t = 1; t <= config.T; ++t) {
        if (t > 1) {
            if (is_updown(config.scheme)) {
                level = updown_next(level, out.records.back().response, config.L);
            } else if (config.allocation == FixedAllocation::balanced) {
                level = level % config.L + 1;
            } else {
                level = sample_fixed(fixed, level_rng);
            }
        }
        const double s = grid.value(level);
        const int y = response_rng.bernoulli(logistic_prob(theta, effect.value, s)) ? 1 : 0;
        out.records.push_back({subject, t, level, s, y});
    }
    return out;
}

inline Dataset simulate_dataset(const ScenarioConfig& config, const StreamKey& key) {
    config.validate();
    Dataset data;
    data.reserve(static_cast<std::size_t>(config.N));
    for (int i = 1; i <= config.N; ++i) {
        RandomStream effect_rng = key.stream(static_cast<std::uint32_t>(i), StreamPurpose::effect);
        data.push_back(simulate_subject(config, draw_effect(config, effect_rng), key, i));
    }
    return data;
}

}  // namespace updown
