#pragma once

// Replicated scenario runs and their summaries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "updown/bias.hpp"
#include "updown/csv.hpp"
#include "updown/estimators/gauss_hermite.hpp"
#include "updown/estimators/latent_class.hpp"
#include "updown/estimators/logistic.hpp"
#include "updown/estimators/nonparametric.hpp"
#include "updown/estimators/random_intercept.hpp"
#include "updown/estimators/two_stage.hpp"
#include "updown/parallel.hpp"
#include "updown/sim.hpp"

namespace updown {

enum class EstimatorKind { nonparametric, logistic, random_intercept, latent_em, two_stage };

inline std::string_view to_string(EstimatorKind k) noexcept {
    switch (k) {
        case EstimatorKind::nonparametric: return "nonparametric";
        case EstimatorKind::logistic: return "logistic";
        case EstimatorKind::random_intercept: return "random-intercept";
        case EstimatorKind::latent_em: return "latent-em";
        case EstimatorKind::two_stage: return "two-stage";
    }
    return "?";
}

inline EstimatorKind parse_estimator(std::string_view text) {
    for (auto k : {EstimatorKind::nonparametric, EstimatorKind::logistic, EstimatorKind::random_intercept,
                   EstimatorKind::latent_em, EstimatorKind::two_stage})
        if (text == to_string(k)) return k;
    throw ContractViolation("unknown estimator '" + std::string(text) + "'");
}

// Fixed-effect fits for FD/UD, random-intercept fits for FDr/UDr.
inline EstimatorKind default_estimator(Scheme s) noexcept {
    return has_random_effect(s) ? EstimatorKind::random_intercept : EstimatorKind::logistic;
}

struct FitOptions {
    WeightMode weight_mode{};
    int nodes = kDefaultQuadratureNodes;
};

// Parameters each estimator reports, in output order.
inline std::vector<std::string> estimator_params(EstimatorKind k, int L) {
    std::vector<std::string> out;
    switch (k) {
        case EstimatorKind::logistic:
        case EstimatorKind::two_stage: out = {"a", "b", "ed50"}; break;
        case EstimatorKind::random_intercept: out = {"a", "b", "ed50", "tau"}; break;
        case EstimatorKind::nonparametric:
            for (int s = 1; s <= L; ++s) out.push_back("pi_" + std::to_string(s));
            break;
        case EstimatorKind::latent_em:
            for (int s = 1; s <= L; ++s) out.push_back("pi0_" + std::to_string(s));
            for (int s = 1; s <= L; ++s) out.push_back("piA_" + std::to_string(s));
            out.push_back("tau");
            for (int s = 1; s <= L; ++s) out.push_back("pi_" + std::to_string(s));
            break;
    }
    return out;
}

inline FitResult fit_nonparametric_result(const Dataset& data, int L) {
    const auto np = fit_nonparametric(sufficient_counts(data, L).pooled);
    FitResult fit;
    fit.estimator = "nonparametric";
    fit.converged = true;
    fit.status = FitStatus::ok;
    for (int s = 1; s <= L; ++s) {
        const auto& p = np.pi_hat[static_cast<std::size_t>(s - 1)];
        fit.set("pi_" + std::to_string(s), p ? *p : std::numeric_limits<double>::quiet_NaN());
    }
    return fit;
}

// Runs one estimator. Numerical failures propagate as NumericalError.
inline FitResult run_estimator(EstimatorKind kind, const Dataset& data, const ScenarioConfig& config,
                               const FitOptions& opt = {}) {
    switch (kind) {
        case EstimatorKind::nonparametric: return fit_nonparametric_result(data, config.L);
        case EstimatorKind::logistic: return fit_logistic_mle(data);
        case EstimatorKind::random_intercept: {
            RandomInterceptOptions ri;
            ri.nodes = opt.nodes;
            return fit_random_intercept(data, ri);
        }
        case EstimatorKind::latent_em: {
            require(config.A > 0.0, "latent-em: needs A > 0");
            WeightMode mode = opt.weight_mode;
            return fit_latent_class_em(latent_class_data(data, config.L), config.A, config.grid(), mode).fit;
        }
        case EstimatorKind::two_stage: return fit_two_stage(data).fit;
    }
    throw ContractViolation("run_estimator: unknown estimator");
}

struct EstimateRow {
    int replication = 0;
    EstimatorKind estimator = EstimatorKind::logistic;
    std::string param;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    FitStatus status = FitStatus::failed;
};

struct EstimateTable {
    ScenarioConfig config;
    std::vector<EstimatorKind> estimators;
    std::vector<EstimateRow> rows;  // replication-major, then estimator, then parameter
};

struct RunOptions {
    int threads = 1;
    FitOptions fit{};
};

inline std::vector<EstimateRow> replication_rows(const ScenarioConfig& config,
                                                 const std::vector<EstimatorKind>& estimators, int r,
                                                 const FitOptions& opt) {
    const Dataset data = simulate_dataset(config, StreamKey{config.seed, static_cast<std::uint32_t>(r)});
    std::vector<EstimateRow> rows;
    for (auto kind : estimators) {
        FitResult fit;
        try {
            fit = run_estimator(kind, data, config, opt);
        } catch (const NumericalError& e) {
            fit.status = FitStatus::failed;
            fit.converged = false;
            fit.diagnostic = e.what();
        }
        for (const auto& name : estimator_params(kind, config.L)) {
            EstimateRow row;
            row.replication = r;
            row.estimator = kind;
            row.param = name;
            row.status = fit.status;
            row.converged = fit.converged;
            if (const auto* p = fit.find(name)) {
                row.estimate = p->estimate;
                row.se = p->se;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// Replication r draws from the substream (seed, r); results are ordered by r
// whatever the thread count.
inline EstimateTable run_replications(const ScenarioConfig& config, const std::vector<EstimatorKind>& estimators,
                                      const RunOptions& opt = {}) {
    config.validate();
    require(!estimators.empty(), "run_replications: no estimators");
    std::vector<std::vector<EstimateRow>> per_rep(static_cast<std::size_t>(config.R));
    parallel_for(per_rep.size(), opt.threads, [&](std::size_t r) {
        per_rep[r] = replication_rows(config, estimators, static_cast<int>(r), opt.fit);
    });
    EstimateTable table;
    table.config = config;
    table.estimators = estimators;
    for (auto& rows : per_rep)
        for (auto& row : rows) table.rows.push_back(std::move(row));
    return table;
}

// E over alpha ~ N(0, sd^2) of F(eta + alpha).
inline double gaussian_marginal_prob(double eta, double sd) {
    if (sd == 0.0) return logistic(eta);
    static const GaussHermiteRule rule = gauss_hermite(41);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        sum += rule.weights[k] * logistic(eta + std::numbers::sqrt2 * sd * rule.nodes[k]);
    return sum / std::sqrt(std::numbers::pi);
}

// Generating value of a reported parameter, NaN where the estimator's target
// is not a parameter of the generating model.
inline double parameter_truth(const ScenarioConfig& config, EstimatorKind kind, const std::string& param) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const IntensityGrid grid = config.grid();
    const Theta theta = config.theta();
    const bool latent = config.effect == EffectKind::latent;
    auto level_of = [](const std::string& p, std::size_t prefix) { return std::stoi(p.substr(prefix)); };

    if (param == "a") return latent ? nan : config.a;
    if (param == "b") return latent ? nan : config.b;
    if (param == "ed50") return latent ? nan : -config.a / config.b;
    if (param == "tau") {
        if (kind == EstimatorKind::random_intercept) return config.effect == EffectKind::gaussian ? config.tau : nan;
        return latent ? config.tau : nan;
    }
    if (param.rfind("pi0_", 0) == 0) return logistic_prob(theta, 0.0, grid.value(level_of(param, 4)));
    if (param.rfind("piA_", 0) == 0) {
        return latent ? logistic_prob(theta, config.A, grid.value(level_of(param, 4))) : nan;
    }
    if (param.rfind("pi_", 0) == 0) {
        const double s = grid.value(level_of(param, 3));
        switch (config.effect) {
            case EffectKind::none: return logistic_prob(theta, 0.0, s);
            case EffectKind::gaussian: return gaussian_marginal_prob(theta.a + theta.b * s, config.tau);
            case EffectKind::latent:
                return (1.0 - config.tau) * logistic_prob(theta, 0.0, s) + config.tau * logistic_prob(theta, config.A, s);
        }
    }
    return nan;
}

struct SummaryRow {
    std::string scenario_id;
    Scheme scheme = Scheme::FD;
    int N = 0;
    int T = 0;
    EstimatorKind estimator = EstimatorKind::logistic;
    std::string param;
    double truth = std::numeric_limits<double>::quiet_NaN();
    SummaryStats stats;
};

inline std::vector<SummaryRow> summarize_table(const EstimateTable& table) {
    std::vector<SummaryRow> out;
    for (auto kind : table.estimators) {
        for (const auto& name : estimator_params(kind, table.config.L)) {
            std::vector<double> kept;
            for (const auto& row : table.rows)
                if (row.estimator == kind && row.param == name && row.converged && std::isfinite(row.estimate))
                    kept.push_back(row.estimate);
            SummaryRow s;
            s.scenario_id = table.config.id;
            s.scheme = table.config.scheme;
            s.N = table.config.N;
            s.T = table.config.T;
            s.estimator = kind;
            s.param = name;
            s.truth = parameter_truth(table.config, kind, name);
            if (kept.size() >= 2) {
                s.stats = summarize(kept, s.truth);
            } else {
                s.stats.R_effective = static_cast<int>(kept.size());
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

inline constexpr std::string_view kSummaryHeader =
    "scenario_id,scheme,estimator,param,truth,absBias,relBias,SE,RMSE,R_effective";
inline constexpr std::string_view kPlotHeader = "scheme,N,T,param,measure,value";
inline constexpr std::string_view kFitHeader = "estimator,param,estimate,se,converged,loglik,iterations";

inline void write_summary_rows(std::ostream& out, const std::vector<SummaryRow>& rows) {
    for (const auto& r : rows) {
        out << r.scenario_id << ',' << to_string(r.scheme) << ',' << to_string(r.estimator) << ',' << r.param << ','
            << format_double(r.truth) << ',' << format_double(r.stats.absBias) << ','
            << format_double(r.stats.relBias_defined ? r.stats.relBias : std::numeric_limits<double>::quiet_NaN())
            << ',' << format_double(r.stats.SE) << ',' << format_double(r.stats.RMSE) << ',' << r.stats.R_effective
            << '\n';
    }
}

// relBias and RMSE of a, b and ed50 for each scenario's scheme-default estimator.
inline void write_plot_rows(std::ostream& out, const std::vector<SummaryRow>& rows) {
    for (const auto& r : rows) {
        if (r.estimator != default_estimator(r.scheme)) continue;
        if (r.param != "a" && r.param != "b" && r.param != "ed50") continue;
        const std::string prefix =
            std::string(to_string(r.scheme)) + ',' + std::to_string(r.N) + ',' + std::to_string(r.T) + ',' + r.param;
        out << prefix << ",relBias,"
            << format_double(r.stats.relBias_defined ? r.stats.relBias : std::numeric_limits<double>::quiet_NaN())
            << '\n';
        out << prefix << ",RMSE," << format_double(r.stats.RMSE) << '\n';
    }
}

inline void write_fit(std::ostream& out, const FitResult& fit) {
    for (const auto& p : fit.params) {
        out << fit.estimator << ',' << p.name << ',' << format_double(p.estimate) << ',' << format_double(p.se) << ','
            << (fit.converged ? 1 : 0) << ',' << format_double(fit.loglik) << ',' << fit.iterations << '\n';
    }
}

// Study setups 1..12: N in {25, 50, 100} by T in {25, 50, 75, 100}, d = 0.2,
// L = 10, a = 0.05, b = 9, tau = 1.
inline ScenarioConfig study_setup(int setup, Scheme scheme) {
    require(setup >= 1 && setup <= 12, "study_setup: setup must be in 1..12");
    static constexpr int kN[] = {25, 50, 100};
    static constexpr int kT[] = {25, 50, 75, 100};
    ScenarioConfig c;
    c.scheme = scheme;
    c.N = kN[(setup - 1) / 4];
    c.T = kT[(setup - 1) % 4];
    c.d = 0.2;
    c.L = 10;
    c.a = 0.05;
    c.b = 9.0;
    c.tau = 1.0;
    c.effect = has_random_effect(scheme) ? EffectKind::gaussian : EffectKind::none;
    c.R = 1000;
    c.id = std::string(to_string(scheme)) + "_setup" + std::to_string(setup);
    return c;
}

}  // namespace updown
