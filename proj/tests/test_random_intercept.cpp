#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "updown/estimators/random_intercept.hpp"

using namespace updown;

TEST(GaussHermite, IntegratesPolynomialsExactly) {
    // int x^(2k) exp(-x^2) dx = Gamma(k + 1/2).
    for (int n : {5, 21, 41}) {
        const auto rule = gauss_hermite(n);
        ASSERT_EQ(rule.nodes.size(), static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) sum += rule.weights[j] * std::pow(rule.nodes[j], 2 * k);
            EXPECT_NEAR(sum / std::tgamma(k + 0.5), 1.0, 1e-10) << "n=" << n << " k=" << k;
            double odd = 0.0;
            for (int j = 0; j < n; ++j) odd += rule.weights[j] * std::pow(rule.nodes[j], 2 * k + 1);
            EXPECT_NEAR(odd, 0.0, 1e-9 * std::tgamma(k + 1.0));
        }
    }
    EXPECT_THROW(gauss_hermite(0), ContractViolation);
}

TEST(SubjectMarginal, MatchesNumericalIntegration) {
    std::mt19937_64 gen(201);
    std::uniform_real_distribution<double> a(-2.0, 2.0), b(-5.0, 10.0), sd(0.1, 2.5), x(0.0, 0.3);
    const auto rule = gauss_hermite(RandomInterceptOptions{}.nodes);
    for (int i = 0; i < 200; ++i) {
        std::vector<BinomialCell> cells;
        std::vector<oracle::Cell> ocells;
        const int k = 1 + static_cast<int>(gen() % 5);
        for (int j = 0; j < k; ++j) {
            const long n = 1 + static_cast<long>(gen() % 12);
            const long m = static_cast<long>(gen() % (n + 1));
            const double xj = x(gen);
            cells.push_back({xj, n, m});
            ocells.push_back({xj, n, m});
        }
        const Theta theta{a(gen), b(gen)};
        const double s = sd(gen);
        const double got = subject_marginal_loglik(theta, s, cells, rule).loglik;
        const double want = oracle::subject_marginal_loglik(theta.a, theta.b, s, ocells);
        EXPECT_LT(std::abs(got - want) / std::abs(want), 1e-8) << "case " << i;
    }
}

TEST(SubjectMarginal, ZeroSdIsLogisticLikelihood) {
    const std::vector<BinomialCell> cells{{0.1, 5, 2}, {0.2, 7, 6}};
    const Theta theta{0.2, 3.0};
    EXPECT_NEAR(subject_marginal_loglik(theta, 0.0, cells, gauss_hermite(21)).loglik, loglik_logistic(theta, cells),
                1e-12);
}

TEST(SubjectMarginal, GradientMatchesFiniteDifferences) {
    std::mt19937_64 gen(202);
    std::uniform_real_distribution<double> a(-1.0, 1.0), b(0.0, 8.0), sd(0.2, 2.0);
    const auto rule = gauss_hermite(21);
    for (int i = 0; i < 200; ++i) {
        std::vector<BinomialCell> cells;
        for (int j = 0; j < 4; ++j) {
            const long n = 1 + static_cast<long>(gen() % 10);
            cells.push_back({0.05 * (j + 1), n, static_cast<long>(gen() % (n + 1))});
        }
        const std::vector<double> x0{a(gen), b(gen), sd(gen)};
        const auto m = subject_marginal_loglik({x0[0], x0[1]}, x0[2], cells, rule);
        const auto fd = oracle::central_gradient(
            [&](const std::vector<double>& v) {
                return subject_marginal_loglik({v[0], v[1]}, v[2], cells, rule).loglik;
            },
            x0);
        // The quadrature rule moves with the parameters, so agreement is limited by
        // the rule's accuracy rather than by differencing error.
        for (int j = 0; j < 3; ++j) EXPECT_LT(oracle::rel_error(m.gradient[j], fd[j]), 1e-5) << i << "," << j;
    }
}

TEST(RandomIntercept, ZeroSdReproducesPooledLogistic) {
    ScenarioConfig c;
    c.scheme = Scheme::FDr;
    c.effect = EffectKind::gaussian;
    c.N = 30;
    c.T = 30;
    const Dataset data = simulate_dataset(c, {41, 0});
    RandomInterceptOptions opt;
    opt.fixed_sd = 0.0;
    const FitResult ri = fit_random_intercept(data, opt);
    const FitResult lg = fit_logistic_mle(data);
    ASSERT_TRUE(ri.converged);
    EXPECT_NEAR(ri.estimate("a"), lg.estimate("a"), 1e-6);
    EXPECT_NEAR(ri.estimate("b"), lg.estimate("b"), 1e-6);
    EXPECT_NEAR(ri.loglik, lg.loglik, 1e-8);
    EXPECT_EQ(ri.estimate("tau"), 0.0);
}

TEST(RandomIntercept, RecoversParametersOnLargeSample) {
    ScenarioConfig c;
    c.scheme = Scheme::FDr;
    c.effect = EffectKind::gaussian;
    c.N = 200;
    c.T = 100;
    c.tau = 1.0;
    const Dataset data = simulate_dataset(c, {42, 0});
    const FitResult fit = fit_random_intercept(data);
    ASSERT_TRUE(fit.converged) << fit.diagnostic;
    EXPECT_EQ(fit.status, FitStatus::ok);
    EXPECT_LT(fit.gradient_norm, 1e-6);
    for (const char* p : {"a", "b", "tau"}) {
        EXPECT_TRUE(std::isfinite(fit.se(p)));
        EXPECT_GT(fit.se(p), 0.0);
    }
    EXPECT_NEAR(fit.estimate("a"), 0.05, 4 * fit.se("a"));
    EXPECT_NEAR(fit.estimate("b"), 9.0, 4 * fit.se("b"));
    EXPECT_NEAR(fit.estimate("tau"), 1.0, 4 * fit.se("tau"));
    EXPECT_NEAR(fit.estimate("ed50"), -fit.estimate("a") / fit.estimate("b"), 1e-15);
}

TEST(RandomIntercept, HomogeneousDataGivesBoundaryOrSmallSd) {
    ScenarioConfig c;
    c.scheme = Scheme::FD;
    c.N = 60;
    c.T = 40;
    int boundary = 0;
    for (std::uint32_t r = 0; r < 5; ++r) {
        const FitResult fit = fit_random_intercept(simulate_dataset(c, {43, r}));
        EXPECT_GE(fit.estimate("tau"), 0.0);
        EXPECT_LT(fit.estimate("tau"), 0.6);
        boundary += fit.status == FitStatus::boundary ? 1 : 0;
    }
    EXPECT_GE(boundary, 1);
}

TEST(RandomIntercept, NeedsTwoSubjects) {
    ScenarioConfig c;
    c.N = 1;
    EXPECT_THROW(fit_random_intercept(simulate_dataset(c, {1, 0})), ContractViolation);
}
