// updown: simulate, fit, study, bias-check and dag-check front end.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "updown/updown.hpp"

namespace fs = std::filesystem;
using namespace updown;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

StudyGrid load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open '" + path + "'");
    return parse_config(in);
}

const ScenarioSpec& pick_scenario(const StudyGrid& grid, const std::string& name) {
    if (name.empty()) {
        if (grid.scenarios.size() != 1)
            throw ConfigError(0, "file holds " + std::to_string(grid.scenarios.size()) +
                                     " scenarios; choose one with --scenario");
        return grid.scenarios.front();
    }
    for (const auto& s : grid.scenarios)
        if (s.config.id == name) return s;
    throw ConfigError(0, "no scenario named '" + name + "'");
}

// Writes through a temporary file and renames it into place.
void write_atomically(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError(0, "cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw ConfigError(0, "write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-")
        std::cout << content;
    else
        write_atomically(out_path, content);
}

struct Options {
    std::string config;
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 1;
    std::string estimator;
    std::string weight_mode = "exact_fd";
    int simulations = 1000;
    std::optional<double> A;
    std::optional<int> levels;
    std::optional<int> level;
    std::optional<int> R;
    std::string input;
    std::string scheme;
    int T = 5;
    std::string graph;
    std::string query;
    bool oracle = false;
};

int cmd_simulate(const Options& o) {
    ScenarioSpec spec = pick_scenario(load_config(o.config), o.scenario);
    if (o.seed) spec.config.seed = *o.seed;
    const Dataset data = simulate_dataset(spec.config, StreamKey{spec.config.seed, 0});
    std::ostringstream out;
    write_trials(out, data, o.oracle);
    emit(o.out, out.str());
    return 0;
}

int cmd_fit(const Options& o) {
    std::ifstream in(o.input);
    if (!in) throw ConfigError(0, "cannot open trial data '" + o.input + "'");
    const Dataset data = read_trials(in);
    require(!data.empty(), "fit: no trials in '" + o.input + "'");
    int max_level = 1;
    for (const auto& s : data)
        for (const auto& r : s.records) max_level = std::max(max_level, r.level);
    ScenarioConfig config;
    config.L = o.levels.value_or(max_level);
    require(config.L >= max_level, "fit: --levels is below the largest level in the data");
    // The grid spacing only matters for labelling; recover d from the data.
    const auto& first = data.front().records.front();
    config.d = first.intensity / first.level * config.L;
    config.A = o.A.value_or(0.0);

    FitOptions fit_opt;
    fit_opt.weight_mode.kind = parse_weight_mode(o.weight_mode);
    fit_opt.weight_mode.simulations = o.simulations;
    fit_opt.weight_mode.seed = o.seed.value_or(1);
    const EstimatorKind kind = parse_estimator(o.estimator);
    if (kind == EstimatorKind::latent_em) require(o.A.has_value(), "fit: latent-em needs --A");

    const FitResult fit = run_estimator(kind, data, config, fit_opt);
    std::ostringstream out;
    out << kFitHeader << '\n';
    write_fit(out, fit);
    emit(o.out, out.str());
    if (!fit.converged) {
        std::cerr << "updown fit: " << to_string(fit.status) << (fit.diagnostic.empty() ? "" : ": ") << fit.diagnostic
                  << '\n';
        return kExitNumerical;
    }
    return 0;
}

int cmd_study(const Options& o) {
    StudyGrid grid = load_config(o.config);
    if (o.seed)
        for (auto& s : grid.scenarios) s.config.seed = *o.seed, s.fit.weight_mode.seed = *o.seed;
    const fs::path dir = o.out.empty() ? fs::path("study_out") : fs::path(o.out);
    std::vector<SummaryRow> all;
    std::size_t done = 0;
    for (const auto& spec : grid.scenarios) {
        RunOptions run;
        run.threads = o.threads;
        run.fit = spec.fit;
        const EstimateTable table = run_replications(spec.config, spec.effective_estimators(), run);
        const auto rows = summarize_table(table);
        std::ostringstream block;
        block << kSummaryHeader << '\n';
        write_summary_rows(block, rows);
        write_atomically(dir / "scenarios" / (spec.config.id + ".csv"), block.str());
        all.insert(all.end(), rows.begin(), rows.end());
        std::cerr << "[" << ++done << "/" << grid.scenarios.size() << "] " << spec.config.id << '\n';
    }
    std::ostringstream summary, plot;
    summary << kSummaryHeader << '\n';
    write_summary_rows(summary, all);
    plot << kPlotHeader << '\n';
    write_plot_rows(plot, all);
    write_atomically(dir / "summary.csv", summary.str());
    write_atomically(dir / "plot_data.csv", plot.str());
    return 0;
}

std::string identity_line(const BiasIdentity& b) {
    char buf[256];
    if (!b.sampled()) {
        std::snprintf(buf, sizeof buf, "level=%d unsampled", b.level);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "level=%d truth=%.10g lhs=%.6e rhs=%.6e mc_se=%.3e agree=%s", b.level, b.truth,
                  b.lhs, b.rhs, b.mc_se, b.agree() ? "yes" : "no");
    return buf;
}

int cmd_bias_check(const Options& o) {
    ScenarioSpec spec = pick_scenario(load_config(o.config), o.scenario);
    if (o.seed) spec.config.seed = *o.seed;
    const int R = o.R.value_or(spec.config.R);
    const bool weighted = spec.config.effect == EffectKind::latent;
    std::ostringstream out;
    if (o.level) {
        const BiasIdentity b = weighted ? weighted_bias_identity_check(spec.config, *o.level, R, o.threads)
                                        : bias_identity_check(spec.config, *o.level, R, o.threads);
        out << identity_line(b) << '\n';
    } else {
        const auto scan = weighted ? weighted_bias_identity_scan(spec.config, R, o.threads)
                                   : bias_identity_scan(spec.config, R, o.threads);
        for (const auto& b : scan) out << identity_line(b) << '\n';
    }
    emit(o.out, out.str());
    return 0;
}

int cmd_dag_check(const Options& o) {
    Dag dag;
    if (!o.graph.empty()) {
        std::ifstream in(o.graph);
        if (!in) throw ConfigError(0, "cannot open graph '" + o.graph + "'");
        dag = parse_dag(in);
    } else {
        require(!o.scheme.empty(), "dag-check: give --scheme or --graph");
        dag = scheme_dag(parse_scheme(o.scheme), o.T);
    }
    const DagQuery q = parse_query(o.query);
    std::cout << (cond_independent(dag, q.A, q.B, q.C) ? "independent" : "dependent") << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Up-down and fixed psychometric designs: simulation, estimation and bias checks"};
    app.require_subcommand(1);
    Options o;

    auto* sim = app.add_subcommand("simulate", "simulate one data set from a scenario config");
    sim->add_option("--config", o.config, "scenario config file")->required();
    sim->add_option("--scenario", o.scenario, "scenario name when the file holds several");
    sim->add_option("--seed", o.seed, "override the config seed");
    sim->add_option("--out", o.out, "output CSV (default stdout)");
    sim->add_flag("--oracle", o.oracle, "add the realised subject effect as an alpha column");

    auto* fit = app.add_subcommand("fit", "fit an estimator to trial data");
    fit->add_option("input", o.input, "trial CSV")->required();
    fit->add_option("--estimator", o.estimator, "nonparametric, logistic, random-intercept, latent-em, two-stage")
        ->required();
    fit->add_option("--A", o.A, "latent class logit offset (latent-em)");
    fit->add_option("--levels", o.levels, "number of levels L (default: largest level in the data)");
    fit->add_option("--weight-mode", o.weight_mode, "exact_fd, ud_simulated or naive (latent-em)");
    fit->add_option("--M", o.simulations, "simulations per level for ud_simulated weights");
    fit->add_option("--seed", o.seed, "seed for ud_simulated weights");
    fit->add_option("--out", o.out, "output CSV (default stdout)");

    auto* study = app.add_subcommand("study", "run every scenario of a config and summarise");
    study->add_option("--config", o.config, "study config file")->required();
    study->add_option("--seed", o.seed, "override the global seed");
    study->add_option("--out", o.out, "output directory (default study_out)");
    study->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);

    auto* bias = app.add_subcommand("bias-check", "check the bias identity by simulation");
    bias->add_option("--config", o.config, "scenario config file")->required();
    bias->add_option("--scenario", o.scenario, "scenario name when the file holds several");
    bias->add_option("--level", o.level, "level to report (default: all)");
    bias->add_option("--R", o.R, "replications (default: config R)");
    bias->add_option("--seed", o.seed, "override the config seed");
    bias->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    bias->add_option("--out", o.out, "output file (default stdout)");

    auto* dag = app.add_subcommand("dag-check", "conditional independence query on a DAG");
    dag->add_option("query", o.query, "'A | B | C' with comma-separated node lists")->required();
    dag->add_option("--scheme", o.scheme, "FD, FDr, UD or UDr");
    dag->add_option("--T", o.T, "trials in the scheme graph")->check(CLI::PositiveNumber);
    dag->add_option("--graph", o.graph, "graph file with one 'parent -> child' per line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(o);
        if (*fit) return cmd_fit(o);
        if (*study) return cmd_study(o);
        if (*bias) return cmd_bias_check(o);
        if (*dag) return cmd_dag_check(o);
    } catch (const NumericalError& e) {
        std::cerr << "updown: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "updown: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "updown: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
