#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "updown/estimators/latent_class.hpp"

using namespace updown;

namespace {

ScenarioConfig latent_config(Scheme scheme, int N, int T, double tau = 0.4, double A = 2.0) {
    ScenarioConfig c;
    c.scheme = scheme;
    c.effect = EffectKind::latent;
    c.N = N;
    c.T = T;
    c.tau = tau;
    c.A = A;
    return c;
}

LatentClassData random_counts(std::mt19937_64& gen, int N, int L) {
    LatentClassData d;
    d.levels = L;
    for (int i = 0; i < N; ++i) {
        LevelCounts c(L);
        for (int k = 0; k < L; ++k) {
            c.trials[k] = static_cast<long>(gen() % 8);
            c.correct[k] = c.trials[k] ? static_cast<long>(gen() % (c.trials[k] + 1)) : 0;
        }
        d.counts.push_back(c);
        d.paths.emplace_back();
    }
    return d;
}

LatentClassParams random_params(std::mt19937_64& gen, int L) {
    std::uniform_real_distribution<double> p(0.05, 0.95), t(0.05, 0.95);
    LatentClassParams q;
    for (int k = 0; k < L; ++k) {
        q.pi0.push_back(p(gen));
        q.piA.push_back(p(gen));
    }
    q.tau = t(gen);
    q.A = 1.0;
    return q;
}

std::vector<double> pack(const LatentClassParams& p) {
    std::vector<double> v(p.pi0);
    v.insert(v.end(), p.piA.begin(), p.piA.end());
    v.push_back(p.tau);
    return v;
}

}  // namespace

TEST(ConditionalLoglik, EmptyAndSingleTrial) {
    LatentClassParams p{{0.5, 0.7}, {0.8, 0.9}, 0.5, 1.0};
    EXPECT_EQ(conditional_loglik(LatentClass::zero, LevelCounts(2), p), 0.0);
    LevelCounts one(2);
    one.trials[0] = 1;
    one.correct[0] = 1;
    EXPECT_NEAR(conditional_loglik(LatentClass::zero, one, p), std::log(0.5), 1e-15);
    EXPECT_NEAR(conditional_loglik(LatentClass::shifted, one, p), std::log(0.8), 1e-15);
}

TEST(EmWeights, PosteriorExamples) {
    EXPECT_DOUBLE_EQ(posterior_class_weight(0.5, -3.0, -3.0, 0.0), 0.5);
    EXPECT_NEAR(posterior_class_weight(0.3, 0.0, std::log(2.0), 0.0), 0.46153846153846156, 1e-15);
    EXPECT_EQ(posterior_class_weight(1.0, 0.0, -50.0, 0.0), 1.0);
    EXPECT_NEAR(posterior_class_weight(1.0 - 1e-15, 0.0, -5.0, 0.0), 1.0, 1e-12);
    EXPECT_EQ(posterior_class_weight(0.0, -50.0, 0.0, 0.0), 0.0);
    // Extreme log-likelihood gaps do not overflow.
    EXPECT_EQ(posterior_class_weight(0.5, -1e5, 0.0, 0.0), 1.0);
    EXPECT_EQ(posterior_class_weight(0.5, 0.0, -1e5, 0.0), 0.0);
}

TEST(EmWeights, OnDataWithEqualClassesReturnTau) {
    std::mt19937_64 gen(301);
    auto data = random_counts(gen, 6, 3);
    LatentClassParams p{{0.6, 0.7, 0.8}, {0.6, 0.7, 0.8}, 0.35, 1.0};
    const auto w = em_weights(data, p, {});
    for (double wi : w.w) EXPECT_NEAR(wi, 0.35, 1e-15);
    p.tau = 1.0;
    p.piA = {0.9, 0.9, 0.9};
    for (double wi : em_weights(data, p, {}).w) EXPECT_EQ(wi, 1.0);
}

TEST(EmWeights, InUnitIntervalOnRandomInputs) {
    std::mt19937_64 gen(302);
    for (int i = 0; i < 200; ++i) {
        const auto data = random_counts(gen, 5, 4);
        const auto p = random_params(gen, 4);
        for (double w : em_weights(data, p, {}).w) {
            EXPECT_GE(w, 0.0);
            EXPECT_LE(w, 1.0);
        }
    }
}

TEST(EmWeights, SimulatedModeRejectsZeroSimulations) {
    const auto c = latent_config(Scheme::UDr, 3, 10);
    const auto data = latent_class_data(simulate_dataset(c, {1, 0}), c.L);
    LatentClassParams p = make_latent_probs(c.theta(), c.A, c.grid());
    WeightMode mode{WeightMode::Kind::ud_simulated, 0, 1};
    EXPECT_THROW(em_weights(data, p, mode), ContractViolation);
}

TEST(EmMStep, Examples) {
    LatentClassParams prev{{0.5}, {0.5}, 0.5, 1.0};
    LevelCounts a(1), b(1);
    a.trials = {10};
    a.correct = {3};
    b.trials = {10};
    b.correct = {5};
    const std::vector<LevelCounts> counts{a, b};
    auto m = em_m_step(std::vector<double>{1.0, 0.0}, counts, prev);
    EXPECT_DOUBLE_EQ(m.piA[0], 0.3);
    EXPECT_DOUBLE_EQ(m.pi0[0], 0.5);
    m = em_m_step(std::vector<double>{0.5, 0.5}, counts, prev);
    EXPECT_DOUBLE_EQ(m.piA[0], 0.4);
    EXPECT_DOUBLE_EQ(m.pi0[0], 0.4);
}

TEST(EmMStep, ConstantWeightsGivePooledProportions) {
    std::mt19937_64 gen(303);
    for (int i = 0; i < 50; ++i) {
        const auto data = random_counts(gen, 8, 5);
        const auto prev = random_params(gen, 5);
        const auto m = em_m_step(std::vector<double>(8, 1.0), data.counts, prev);
        for (int k = 0; k < 5; ++k) {
            long t = 0, c = 0;
            for (const auto& s : data.counts) {
                t += s.trials[k];
                c += s.correct[k];
            }
            if (t > 0) {
                EXPECT_EQ(m.piA[k], static_cast<double>(c) / static_cast<double>(t));
            } else {
                EXPECT_TRUE(m.heldA[k]);
                EXPECT_EQ(m.piA[k], prev.piA[k]);
            }
            EXPECT_TRUE(m.held0[k]);  // zero weight on class 0
        }
    }
}

TEST(EmTauUpdate, Examples) {
    const std::vector<double> zero{0.0};
    EXPECT_NEAR(em_tau_update(std::vector<double>{0.5}, zero, zero, zero), 0.5, 1e-15);
    EXPECT_NEAR(em_tau_update(std::vector<double>{0.8}, std::vector<double>{std::log(0.25)}, zero, zero), 0.5, 1e-15);
    // Weights at 1 are clamped and drive tau towards 1.
    const double t = em_tau_update(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 1.0},
                                   std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0});
    EXPECT_GT(t, 1.0 - 1e-10);
    EXPECT_LT(t, 1.0);
}

TEST(EmTauUpdate, EveryTauIsFixedPointAtItsOwnWeights) {
    // With weights and log-likelihoods taken at the same parameters the update
    // returns the current tau unchanged.
    std::mt19937_64 gen(304);
    for (int i = 0; i < 100; ++i) {
        const auto data = random_counts(gen, 7, 3);
        const auto p = random_params(gen, 3);
        const auto w = em_weights(data, p, {});
        EXPECT_NEAR(em_tau_update(w.w, w.l0, w.lA, w.log_ratio), p.tau, 1e-10);
    }
}

TEST(LatentClassScore, MatchesFiniteDifferences) {
    std::mt19937_64 gen(305);
    for (int i = 0; i < 1000; ++i) {
        const int L = 1 + static_cast<int>(gen() % 4);
        const auto data = random_counts(gen, 2 + static_cast<int>(gen() % 6), L);
        const auto p = random_params(gen, L);
        const auto g = latent_class_score(p, data);
        std::vector<std::vector<long>> trials, correct;
        for (const auto& c : data.counts) {
            trials.push_back(c.trials);
            correct.push_back(c.correct);
        }
        const auto fd = oracle::central_gradient_ld(
            [&](const std::vector<long double>& v) { return oracle::latent_loglik_packed(v, trials, correct); }, pack(p));
        for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LT(oracle::rel_error(g[j], fd[j]), 1e-6) << i << "," << j;
    }
}

TEST(LatentClassScore, TauOneLimit) {
    std::mt19937_64 gen(306);
    const auto data = random_counts(gen, 5, 3);
    auto p = random_params(gen, 3);
    p.tau = 1.0 - 1e-13;
    const auto g = latent_class_score(p, data);
    for (int k = 0; k < 3; ++k) {
        double binom = 0.0;
        for (const auto& c : data.counts)
            binom += (c.correct[k] - p.piA[k] * c.trials[k]) / (p.piA[k] * (1 - p.piA[k]));
        EXPECT_NEAR(g[3 + k], binom, 1e-6 * (1 + std::abs(binom)));
        EXPECT_NEAR(g[k], 0.0, 1e-6);
    }
}

TEST(PathTransitions, DecodesResponses) {
    const auto tr = updown_path_transitions({3, 2, 1, 1, 2, 3, 3}, 3);
    // 3->2 correct at 3, 2->1 correct at 2, 1->1 correct at 1, 1->2 wrong at 1,
    // 2->3 wrong at 2, 3->3 wrong at 3.
    EXPECT_EQ(tr.trials, (std::vector<long>{2, 2, 2}));
    EXPECT_EQ(tr.correct, (std::vector<long>{1, 1, 1}));
    EXPECT_THROW(updown_path_transitions({1, 3}, 3), ContractViolation);
    EXPECT_EQ(updown_path_transitions({1, 1, 1}, 1).total_trials(), 0);
}

TEST(PathTransitions, AgreeWithSimulatedResponses) {
    const auto c = latent_config(Scheme::UDr, 20, 30);
    for (const auto& s : simulate_dataset(c, {2, 0})) {
        const auto tr = updown_path_transitions(s.levels(), c.L);
        LevelCounts expected(c.L);
        for (std::size_t t = 0; t + 1 < s.records.size(); ++t) {
            const auto k = static_cast<std::size_t>(s.records[t].level - 1);
            ++expected.trials[k];
            expected.correct[k] += s.records[t].response;
        }
        EXPECT_EQ(tr.trials, expected.trials);
        EXPECT_EQ(tr.correct, expected.correct);
    }
}

TEST(PathRatioSimulator, ConvergesToExactRatio) {
    const auto c = latent_config(Scheme::UDr, 5, 20);
    const auto data = latent_class_data(simulate_dataset(c, {3, 0}), c.L);
    LatentClassParams p = make_latent_probs(c.theta(), c.A, c.grid());
    p.tau = 0.4;
    const PathRatioSimulator small(data, 100, 7), large(data, 200000, 7);
    double err_small = 0.0, err_large = 0.0;
    for (std::size_t i = 0; i < data.subjects(); ++i) {
        const double exact = large.exact_log_ratio(i, p);
        err_small += std::abs(small.log_ratio(i, p) - exact);
        err_large += std::abs(large.log_ratio(i, p) - exact);
        EXPECT_NEAR(large.log_ratio(i, p), exact, 0.05);
    }
    EXPECT_LT(err_large, err_small);
}

TEST(PathRatioSimulator, DeterministicGivenSeed) {
    const auto c = latent_config(Scheme::UDr, 4, 15);
    const auto data = latent_class_data(simulate_dataset(c, {4, 0}), c.L);
    LatentClassParams p = make_latent_probs(c.theta(), c.A, c.grid());
    WeightMode mode{WeightMode::Kind::ud_simulated, 500, 9};
    const auto a = em_weights(data, p, mode), b = em_weights(data, p, mode);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.log_ratio, b.log_ratio);
}

TEST(PlugIn, Marginal) {
    LatentClassParams p{{0.4}, {0.8}, 0.5, 1.0};
    EXPECT_NEAR(plug_in_marginal(p, 1), 0.6, 1e-15);
}

TEST(LabelIdentification, SwapsLowAccuracyClassA) {
    LatentClassParams p{{0.9, 0.8}, {0.3, 0.4}, 0.3, 1.0};
    EXPECT_TRUE(identify_labels(p));
    EXPECT_EQ(p.piA, (std::vector<double>{0.9, 0.8}));
    EXPECT_NEAR(p.tau, 0.7, 1e-15);
    EXPECT_FALSE(identify_labels(p));
}

TEST(LatentClassEm, MonotoneAndScoreZeroOnRandomFits) {
    std::mt19937_64 gen(307);
    int converged = 0;
    for (int r = 0; r < 20; ++r) {
        auto c = latent_config(Scheme::FDr, 20 + static_cast<int>(gen() % 40), 10 + static_cast<int>(gen() % 40),
                               0.2 + 0.6 * static_cast<double>(gen() % 100) / 100.0, 1.0 + static_cast<double>(gen() % 3));
        c.L = 2 + static_cast<int>(gen() % 6);
        const auto data = latent_class_data(simulate_dataset(c, {gen(), 0}), c.L);
        const auto fit = fit_latent_class_em(data, c.A, c.grid(), {});
        for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t)
            ASSERT_GE(fit.loglik_trace[t] - fit.loglik_trace[t - 1], -1e-10) << "fit " << r << " iter " << t;
        if (!fit.fit.converged) continue;
        ++converged;
        double gmax = 0.0;
        for (double g : projected_latent_class_score(fit.params, data)) gmax = std::max(gmax, std::abs(g));
        EXPECT_LT(gmax, 1e-6);
        EXPECT_GE(std::accumulate(fit.params.piA.begin(), fit.params.piA.end(), 0.0),
                  std::accumulate(fit.params.pi0.begin(), fit.params.pi0.end(), 0.0));
    }
    EXPECT_GE(converged, 15);
}

TEST(LatentClassEm, SingleClassCollapse) {
    auto c = latent_config(Scheme::FDr, 40, 40, 1.0, 2.0);
    const Dataset raw = simulate_dataset(c, {5, 0});
    const auto data = latent_class_data(raw, c.L);
    const auto pooled = sufficient_counts(raw, c.L).pooled;

    // Started with every subject in class A, all weights are 1 and EM stays there.
    EmOptions opt;
    opt.init = default_em_init(data, c.A);
    opt.init->tau = 1.0;
    const auto pinned = fit_latent_class_em(data, c.A, c.grid(), {}, opt);
    EXPECT_TRUE(pinned.fit.converged);
    EXPECT_EQ(pinned.params.tau, 1.0);

    // A free fit splits the single class arbitrarily, but its marginal stays on the pooled rates.
    const auto free_fit = fit_latent_class_em(data, c.A, c.grid(), {});
    for (int k = 0; k < c.L; ++k) {
        if (pooled.trials[k] == 0) continue;
        const double p = static_cast<double>(pooled.correct[k]) / pooled.trials[k];
        EXPECT_NEAR(pinned.params.piA[k], p, 1e-12);
        EXPECT_NEAR(plug_in_marginal(free_fit.params, k + 1), p, std::sqrt(p * (1 - p) / pooled.trials[k]) + 1e-12);
    }
}

TEST(LatentClassEm, RecoversTruthOnLargeSample) {
    const auto c = latent_config(Scheme::FDr, 100, 100, 0.4, 2.0);
    const auto data = latent_class_data(simulate_dataset(c, {6, 0}), c.L);
    const auto fit = fit_latent_class_em(data, c.A, c.grid(), {});
    ASSERT_TRUE(fit.fit.converged);
    const auto truth = make_latent_probs(c.theta(), c.A, c.grid());
    EXPECT_NEAR(fit.params.tau, 0.4, 4 * fit.fit.se("tau"));
    int outside = 0;
    for (int k = 0; k < c.L; ++k) {
        const std::string s = std::to_string(k + 1);
        ASSERT_TRUE(std::isfinite(fit.fit.se("pi0_" + s)));
        outside += std::abs(fit.params.pi0[k] - truth.pi0[k]) > 3 * fit.fit.se("pi0_" + s);
        outside += std::abs(fit.params.piA[k] - truth.piA[k]) > 3 * fit.fit.se("piA_" + s);
    }
    EXPECT_LE(outside, 2);
}

TEST(LatentClassEm, ReportsAllParameters) {
    const auto c = latent_config(Scheme::FDr, 30, 30);
    const auto data = latent_class_data(simulate_dataset(c, {7, 0}), c.L);
    const auto fit = fit_latent_class_em(data, c.A, c.grid(), {});
    EXPECT_EQ(fit.fit.params.size(), static_cast<std::size_t>(3 * c.L + 1));
    EXPECT_NE(fit.fit.find("tau"), nullptr);
    EXPECT_NEAR(fit.fit.estimate("pi_3"), plug_in_marginal(fit.params, 3), 1e-15);
    EXPECT_EQ(fit.loglik_trace.size(), static_cast<std::size_t>(fit.fit.iterations + 1));
}

TEST(LatentClassEm, UpDownWeightModesRun) {
    const auto c = latent_config(Scheme::UDr, 40, 40);
    const auto data = latent_class_data(simulate_dataset(c, {8, 0}), c.L);
    for (auto kind : {WeightMode::Kind::naive, WeightMode::Kind::ud_simulated}) {
        const auto fit = fit_latent_class_em(data, c.A, c.grid(), {kind, 300, 1});
        EXPECT_TRUE(fit.fit.converged) << to_string(kind);
        EXPECT_GT(fit.params.tau, 0.0);
        EXPECT_LT(fit.params.tau, 1.0);
    }
}

TEST(LatentClassEm, ReciprocalTauUpdateRuns) {
    const auto c = latent_config(Scheme::FDr, 30, 30);
    const auto data = latent_class_data(simulate_dataset(c, {9, 0}), c.L);
    EmOptions opt;
    opt.tau_update = TauUpdate::reciprocal;
    const auto fit = fit_latent_class_em(data, c.A, c.grid(), {}, opt);
    EXPECT_GT(fit.params.tau, 0.0);
    EXPECT_LE(fit.params.tau, 1.0);
    EXPECT_LE(fit.fit.iterations, opt.max_iterations);
}

TEST(LatentClassEm, Preconditions) {
    const auto c = latent_config(Scheme::FDr, 1, 10);
    const auto data = latent_class_data(simulate_dataset(c, {10, 0}), c.L);
    EXPECT_THROW(fit_latent_class_em(data, c.A, c.grid(), {}), ContractViolation);
}
