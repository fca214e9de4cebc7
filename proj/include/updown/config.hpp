#pragma once

// Scenario configuration files.
//
//   # comment
//   seed = 42            keys before any section are defaults for everything
//   R = 1000
//
//   [scenario small_fd]  one scenario
//   scheme = FD
//   N = 25
//
//   [grid]               standard setups crossed with schemes
//   setups = 1-12
//   schemes = FD,FDr,UD,UDr

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "updown/csv.hpp"
#include "updown/sim.hpp"
#include "updown/study.hpp"

namespace updown {

class ConfigError : public ContractViolation {
public:
    ConfigError(int line, const std::string& what)
        : ContractViolation(line > 0 ? "config line " + std::to_string(line) + ": " + what : "config: " + what),
          line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

struct ScenarioSpec {
    ScenarioConfig config;
    std::vector<EstimatorKind> estimators;  // empty: scheme default
    FitOptions fit;

    [[nodiscard]] std::vector<EstimatorKind> effective_estimators() const {
        return estimators.empty() ? std::vector<EstimatorKind>{default_estimator(config.scheme)} : estimators;
    }
};

struct StudyGrid {
    std::uint64_t seed = 1;
    std::vector<ScenarioSpec> scenarios;
};

namespace detail {

struct Assignment {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    enum class Kind { global, scenario, grid } kind = Kind::global;
    std::string name;
    int line = 0;
    std::vector<Assignment> entries;
};

inline std::vector<int> parse_setup_list(const std::string& text, int line) {
    std::vector<int> out;
    for (const auto& raw : split(text, ',')) {
        const std::string tok(trim(raw));
        if (tok.empty()) continue;
        const auto dash = tok.find('-');
        try {
            if (dash == std::string::npos) {
                out.push_back(parse_int<int>(tok, "setup"));
            } else {
                const int lo = parse_int<int>(tok.substr(0, dash), "setup");
                const int hi = parse_int<int>(tok.substr(dash + 1), "setup");
                if (lo > hi) throw ContractViolation("empty range " + tok);
                for (int s = lo; s <= hi; ++s) out.push_back(s);
            }
        } catch (const ContractViolation& e) {
            throw ConfigError(line, e.what());
        }
    }
    for (int s : out)
        if (s < 1 || s > 12) throw ConfigError(line, "setup " + std::to_string(s) + " outside 1..12");
    if (out.empty()) throw ConfigError(line, "setups is empty");
    return out;
}

// Applies one key to a scenario; returns false for keys it does not own.
inline bool apply_key(ScenarioSpec& spec, bool& effect_set, const Assignment& a) {
    auto& c = spec.config;
    const std::string& v = a.value;
    const std::string ctx = "key '" + a.key + "'";
    if (a.key == "scheme") {
        c.scheme = parse_scheme(v);
    } else if (a.key == "effect") {
        c.effect = parse_effect_kind(v);
        effect_set = true;
    } else if (a.key == "N") {
        c.N = parse_int<int>(v, ctx);
    } else if (a.key == "T") {
        c.T = parse_int<int>(v, ctx);
    } else if (a.key == "d") {
        c.d = parse_double(v, ctx);
    } else if (a.key == "L") {
        c.L = parse_int<int>(v, ctx);
    } else if (a.key == "a") {
        c.a = parse_double(v, ctx);
    } else if (a.key == "b") {
        c.b = parse_double(v, ctx);
    } else if (a.key == "tau") {
        c.tau = parse_double(v, ctx);
    } else if (a.key == "A") {
        c.A = parse_double(v, ctx);
    } else if (a.key == "R") {
        c.R = parse_int<int>(v, ctx);
    } else if (a.key == "seed") {
        c.seed = parse_int<std::uint64_t>(v, ctx);
    } else if (a.key == "allocation") {
        if (v == "random")
            c.allocation = FixedAllocation::random;
        else if (v == "balanced")
            c.allocation = FixedAllocation::balanced;
        else
            throw ContractViolation("allocation must be random or balanced");
    } else if (a.key == "estimators") {
        spec.estimators.clear();
        for (const auto& tok : split(v, ',')) {
            const auto name = trim(tok);
            if (!name.empty()) spec.estimators.push_back(parse_estimator(name));
        }
    } else if (a.key == "weight_mode") {
        spec.fit.weight_mode.kind = parse_weight_mode(v);
    } else if (a.key == "M") {
        spec.fit.weight_mode.simulations = parse_int<int>(v, ctx);
    } else if (a.key == "nodes") {
        spec.fit.nodes = parse_int<int>(v, ctx);
    } else {
        return false;
    }
    return true;
}

inline void apply_all(ScenarioSpec& spec, bool& effect_set, const std::vector<Assignment>& entries,
                      const std::set<std::string>& skip = {}) {
    for (const auto& a : entries) {
        if (skip.count(a.key)) continue;
        try {
            if (!apply_key(spec, effect_set, a)) throw ConfigError(a.line, "unknown key '" + a.key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const ContractViolation& e) {
            throw ConfigError(a.line, e.what());
        }
    }
}

inline void finish(ScenarioSpec& spec, bool effect_set, int line) {
    if (!effect_set)
        spec.config.effect = has_random_effect(spec.config.scheme) ? EffectKind::gaussian : EffectKind::none;
    try {
        spec.config.validate();
        if (spec.fit.weight_mode.kind == WeightMode::Kind::ud_simulated && spec.fit.weight_mode.simulations < 1)
            throw ContractViolation("M must be >= 1");
        if (spec.fit.nodes < 1) throw ContractViolation("nodes must be >= 1");
    } catch (const ContractViolation& e) {
        throw ConfigError(line, std::string("scenario '") + spec.config.id + "': " + e.what());
    }
    spec.fit.weight_mode.seed = spec.config.seed;
}

}  // namespace detail

inline StudyGrid parse_config(std::istream& in) {
    using detail::Section;
    std::vector<Section> sections(1);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body(trim(line.substr(0, line.find('#'))));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') throw ConfigError(line_no, "unterminated section header");
            const std::string inner(trim(std::string_view(body).substr(1, body.size() - 2)));
            Section s;
            s.line = line_no;
            if (inner == "grid") {
                s.kind = Section::Kind::grid;
                s.name = "grid";
            } else if (inner.rfind("scenario", 0) == 0) {
                s.kind = Section::Kind::scenario;
                s.name = std::string(trim(std::string_view(inner).substr(8)));
                if (s.name.empty()) throw ConfigError(line_no, "scenario section needs a name");
            } else {
                throw ConfigError(line_no, "unknown section '" + inner + "'");
            }
            sections.push_back(std::move(s));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, "expected key = value");
        const std::string key(trim(std::string_view(body).substr(0, eq)));
        const std::string value(trim(std::string_view(body).substr(eq + 1)));
        if (key.empty()) throw ConfigError(line_no, "missing key");
        if (value.empty()) throw ConfigError(line_no, "missing value for '" + key + "'");
        for (const auto& prior : sections.back().entries)
            if (prior.key == key) throw ConfigError(line_no, "duplicate key '" + key + "'");
        sections.back().entries.push_back({key, value, line_no});
    }

    const auto& globals = sections.front().entries;
    StudyGrid grid;
    {
        ScenarioSpec probe;
        bool effect_set = false;
        detail::apply_all(probe, effect_set, globals);
        grid.seed = probe.config.seed;
    }

    std::set<std::string> ids;
    auto add = [&](ScenarioSpec spec, int line) {
        if (!ids.insert(spec.config.id).second)
            throw ConfigError(line, "duplicate scenario id '" + spec.config.id + "'");
        grid.scenarios.push_back(std::move(spec));
    };

    bool any_section = false;
    for (std::size_t i = 1; i < sections.size(); ++i) {
        const Section& sec = sections[i];
        any_section = true;
        if (sec.kind == Section::Kind::scenario) {
            ScenarioSpec spec;
            bool effect_set = false;
            detail::apply_all(spec, effect_set, globals);
            detail::apply_all(spec, effect_set, sec.entries);
            spec.config.id = sec.name;
            detail::finish(spec, effect_set, sec.line);
            add(std::move(spec), sec.line);
        } else {
            std::vector<int> setups;
            std::vector<Scheme> schemes{Scheme::FD, Scheme::FDr, Scheme::UD, Scheme::UDr};
            for (const auto& a : sec.entries) {
                if (a.key == "setups") {
                    setups = detail::parse_setup_list(a.value, a.line);
                } else if (a.key == "schemes") {
                    schemes.clear();
                    for (const auto& tok : split(a.value, ',')) {
                        try {
                            if (!trim(tok).empty()) schemes.push_back(parse_scheme(trim(tok)));
                        } catch (const ContractViolation& e) {
                            throw ConfigError(a.line, e.what());
                        }
                    }
                    if (schemes.empty()) throw ConfigError(a.line, "schemes is empty");
                } else if (a.key == "scheme" || a.key == "N" || a.key == "T" || a.key == "effect") {
                    throw ConfigError(a.line, "key '" + a.key + "' is set by the grid");
                }
            }
            if (setups.empty()) throw ConfigError(sec.line, "grid needs 'setups'");
            const std::set<std::string> fixed{"scheme", "N", "T", "effect", "setups", "schemes"};
            for (Scheme scheme : schemes) {
                for (int setup : setups) {
                    ScenarioSpec spec;
                    spec.config = study_setup(setup, scheme);
                    bool effect_set = true;
                    detail::apply_all(spec, effect_set, globals, fixed);
                    detail::apply_all(spec, effect_set, sec.entries, fixed);
                    spec.config.scheme = scheme;
                    detail::finish(spec, effect_set, sec.line);
                    add(std::move(spec), sec.line);
                }
            }
        }
    }
    if (!any_section) {
        // A bare key-value file describes a single scenario.
        ScenarioSpec spec;
        bool effect_set = false;
        detail::apply_all(spec, effect_set, globals);
        detail::finish(spec, effect_set, 0);
        add(std::move(spec), 0);
    }
    return grid;
}

}  // namespace updown
