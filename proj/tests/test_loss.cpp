#include <doctest.h>

#include <cmath>

#include "evidfuse/errors.hpp"
#include "evidfuse/loss.hpp"
#include "evidfuse/rng.hpp"
#include "evidfuse/special_functions.hpp"
#include "test_support.hpp"

using namespace evidfuse;

TEST_CASE("one-hot label validation") {
    CHECK(OneHotLabel::from_vector({0.0, 1.0, 0.0}).true_class() == 1);
    CHECK_THROWS_AS(OneHotLabel::from_vector({0.0, 0.0}), domain_error);
    CHECK_THROWS_AS(OneHotLabel::from_vector({1.0, 1.0}), domain_error);
    CHECK_THROWS_AS(OneHotLabel::from_vector({0.5, 0.5}), domain_error);
    CHECK_THROWS_AS(OneHotLabel(2, 2), domain_error);
    CHECK(OneHotLabel(1, 3).to_vector() == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("anneal schedule is linear then clamped") {
    const AnnealSchedule sched{100, 0};
    CHECK(sched.lambda_at(0) == 0.0);
    CHECK(sched.lambda_at(50) == doctest::Approx(0.5));
    CHECK(sched.lambda_at(100) == 1.0);
    CHECK(sched.lambda_at(250) == 1.0);
    double prev = -1.0;
    for (int s = 0; s <= 200; ++s) {
        const double l = sched.lambda_at(s);
        CHECK(l >= prev);
        CHECK((l >= 0.0 && l <= 1.0));
        prev = l;
    }
    CHECK_THROWS_AS(sched.lambda_at(-1), domain_error);
    CHECK_THROWS_AS((AnnealSchedule{0, 0}).lambda_at(1), domain_error);

    AnnealSchedule walk{4, 0};
    CHECK(walk.lambda() == 0.0);
    walk.advance();
    walk.advance();
    CHECK(walk.lambda() == 0.5);
}

TEST_CASE("integrated CE worked values") {
    CHECK(std::abs(integrated_ce(DirichletParams({1.0, 1.0}), OneHotLabel(0, 2)) - 1.0) <= 1e-12);
    // psi(4) - psi(2) = 1/2 + 1/3
    CHECK(std::abs(integrated_ce(DirichletParams({2.0, 2.0}), OneHotLabel(0, 2)) -
                   (0.5 + 1.0 / 3.0)) <= 1e-12);
    CHECK_THROWS_AS(integrated_ce(DirichletParams({1.0, 1.0}), OneHotLabel(0, 3)), domain_error);
}

TEST_CASE("integrated CE equals the Monte-Carlo expectation") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t c = 2 + rng.below(3);
        std::vector<double> alpha(c);
        for (double& a : alpha) a = rng.uniform(1.0, 8.0);
        const std::size_t label = rng.below(c);

        const int draws = 200000;
        std::vector<double> ce(draws);
        for (int i = 0; i < draws; ++i) {
            const auto p = testing::sample_dirichlet(rng, alpha);
            ce[i] = -std::log(std::max(p[label], 1e-300));
        }
        const auto mc = testing::running_mean(ce);
        const double exact = integrated_ce(DirichletParams(alpha), OneHotLabel(label, c));
        CHECK(std::abs(exact - mc.mean) <= 3.0 * mc.std_error);
    }
}

TEST_CASE("KL to uniform: closed form and Monte-Carlo") {
    CHECK(kl_to_uniform(DirichletParams({1.0, 1.0})) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(kl_to_uniform(DirichletParams({2.0, 1.0})) - (std::log(2.0) - 0.5)) <= 1e-12);

    SplitMix64 rng(32);
    for (int trial = 0; trial < 3; ++trial) {
        const std::size_t c = 2 + rng.below(3);
        std::vector<double> alpha(c);
        for (double& a : alpha) a = rng.uniform(1.0, 6.0);
        double strength = 0.0;
        for (double a : alpha) strength += a;

        // log density ratio log Dir(p|alpha) - log Dir(p|1) averaged under
        // Dir(alpha); the Dir(1) density is the constant (C-1)!.
        double log_norm = log_gamma(strength) - log_gamma(static_cast<double>(c));
        for (double a : alpha) log_norm -= log_gamma(a);
        const int draws = 200000;
        std::vector<double> ratio(draws);
        for (int i = 0; i < draws; ++i) {
            const auto p = testing::sample_dirichlet(rng, alpha);
            double lr = log_norm;
            for (std::size_t j = 0; j < c; ++j) {
                lr += (alpha[j] - 1.0) * std::log(std::max(p[j], 1e-300));
            }
            ratio[i] = lr;
        }
        const auto mc = testing::running_mean(ratio);
        CHECK(std::abs(kl_to_uniform(DirichletParams(alpha)) - mc.mean) <= 3.0 * mc.std_error);
    }
}

TEST_CASE("KL is non-negative over fuzzed alpha") {
    SplitMix64 rng(33);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t c = 2 + rng.below(8);
        std::vector<double> alpha(c);
        for (double& a : alpha) a = rng.uniform(1.0, 50.0);
        CHECK(kl_to_uniform(DirichletParams(alpha)) >= -1e-12);
    }
}

TEST_CASE("masked alpha substitutions") {
    CHECK(masked_alpha(DirichletParams({4.0, 2.0}), OneHotLabel(0, 2)).alpha() ==
          std::vector<double>{1.0, 2.0});
    CHECK(masked_alpha(DirichletParams({3.0, 5.0}), OneHotLabel(1, 2)).alpha() ==
          std::vector<double>{3.0, 1.0});
    CHECK(masked_alpha(DirichletParams({1.0, 1.0, 1.0}), OneHotLabel(2, 3)).alpha() ==
          std::vector<double>(3, 1.0));
}

TEST_CASE("view loss composition and lambda monotonicity") {
    const DirichletParams a({4.0, 2.0});
    const OneHotLabel y(0, 2);
    CHECK(view_loss(a, y, 0.0) == integrated_ce(a, y));
    CHECK(std::abs(view_loss(DirichletParams({1.0, 1.0}), y, 1.0) - 1.0) <= 1e-12);
    CHECK_THROWS_AS(view_loss(a, y, -0.1), domain_error);
    CHECK_THROWS_AS(view_loss(a, y, 1.5), domain_error);

    double prev = -1.0;
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double l = view_loss(a, y, lambda);
        CHECK(l >= prev);
        prev = l;
    }
}

TEST_CASE("overall loss adds per-view terms") {
    const DirichletParams a({4.0, 2.0});
    const DirichletParams b({2.0, 3.0});
    const OneHotLabel y(0, 2);
    const double lambda = 0.5;

    // No local views: combined + global only.
    CHECK(overall_loss({}, a, a, y, lambda) == doctest::Approx(2.0 * view_loss(a, y, lambda)));
    // Two equal local views.
    const double expect = view_loss(b, y, lambda) + view_loss(a, y, lambda) +
                          2.0 * view_loss(a, y, lambda);
    CHECK(overall_loss({a, a}, a, b, y, lambda) == doctest::Approx(expect).epsilon(1e-12));
}
