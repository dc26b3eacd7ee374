#include <doctest.h>

#include <cmath>

#include "evidfuse/errors.hpp"
#include "evidfuse/fusion.hpp"
#include "evidfuse/rng.hpp"
#include "test_support.hpp"

using namespace evidfuse;

namespace {

double max_abs_diff(const Opinion& a, const Opinion& b) {
    double m = std::abs(a.uncertainty() - b.uncertainty());
    for (std::size_t i = 0; i < a.num_classes(); ++i) {
        m = std::max(m, std::abs(a.beliefs()[i] - b.beliefs()[i]));
    }
    return m;
}

} // namespace

TEST_CASE("vacuous opinion is an exact two-sided identity") {
    SplitMix64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const std::size_t c = 2 + rng.below(6);
        const Opinion d = testing::random_opinion(rng, c);
        const Opinion vac = vacuous_opinion(c);

        const FusionResult left = combine_pair(vac, d);
        CHECK(left.combined.beliefs() == d.beliefs());
        CHECK(left.combined.uncertainty() == d.uncertainty());
        CHECK(left.conflict == 1.0);

        const FusionResult right = combine_pair(d, vac);
        CHECK(right.combined.beliefs() == d.beliefs());
        CHECK(right.combined.uncertainty() == d.uncertainty());
    }
}

TEST_CASE("worked fusion fixture") {
    const Opinion d1({0.6, 0.2}, 0.2);
    const Opinion d2({0.2, 0.6}, 0.2);
    const FusionResult r = combine_pair(d1, d2);
    CHECK(r.conflict == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(r.combined.beliefs()[0] == doctest::Approx(0.28 / 0.6).epsilon(1e-12));
    CHECK(r.combined.beliefs()[1] == doctest::Approx(0.28 / 0.6).epsilon(1e-12));
    CHECK(r.combined.uncertainty() == doctest::Approx(0.04 / 0.6).epsilon(1e-12));
}

TEST_CASE("agreement reduces uncertainty") {
    const Opinion d({0.8, 0.1}, 0.1);
    const FusionResult r = combine_pair(d, d);
    CHECK(r.combined.uncertainty() < 0.1);
    // u = 0.01 / N with N = 1 - 2*0.8*0.1 = 0.84... computed directly:
    const double n = 1.0 - (0.8 * 0.1 + 0.1 * 0.8);
    CHECK(r.combined.uncertainty() == doctest::Approx(0.01 / n).epsilon(1e-12));
}

TEST_CASE("class count mismatch is rejected") {
    CHECK_THROWS_AS(combine_pair(vacuous_opinion(2), vacuous_opinion(3)), domain_error);
}

TEST_CASE("commutativity within 1e-12 and uncertainty contraction") {
    SplitMix64 rng(12);
    for (int i = 0; i < 2000; ++i) {
        const std::size_t c = 2 + rng.below(6);
        const Opinion a = testing::random_opinion(rng, c);
        const Opinion b = testing::random_opinion(rng, c);
        const FusionResult ab = combine_pair(a, b);
        const FusionResult ba = combine_pair(b, a);
        CHECK(max_abs_diff(ab.combined, ba.combined) <= 1e-12);
        CHECK(ab.combined.uncertainty() <=
              std::min(a.uncertainty(), b.uncertainty()) + 1e-15);
    }
}

TEST_CASE("associativity within 1e-9 over random triples") {
    SplitMix64 rng(13);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t c = 2 + rng.below(4);
        const Opinion a = testing::random_opinion(rng, c);
        const Opinion b = testing::random_opinion(rng, c);
        const Opinion d = testing::random_opinion(rng, c);
        const Opinion left = combine_pair(combine_pair(a, b).combined, d).combined;
        const Opinion right = combine_pair(a, combine_pair(b, d).combined).combined;
        CHECK(max_abs_diff(left, right) <= 1e-9);
    }
}

TEST_CASE("combine_many folds left and records conflicts") {
    SplitMix64 rng(14);
    const Opinion a = testing::random_opinion(rng, 3);
    const Opinion b = testing::random_opinion(rng, 3);
    const Opinion c = testing::random_opinion(rng, 3);

    const FusionResult single = combine_many({a});
    CHECK(single.combined.beliefs() == a.beliefs());
    CHECK(single.step_conflicts.empty());

    const FusionResult fold = combine_many({a, b, c});
    const Opinion manual = combine_pair(combine_pair(a, b).combined, c).combined;
    CHECK(max_abs_diff(fold.combined, manual) == 0.0);
    CHECK(fold.step_conflicts.size() == 2);
    CHECK(fold.order == std::vector<std::string>{"0", "1", "2"});

    CHECK_THROWS_AS(combine_many({}), domain_error);
}

TEST_CASE("permutation invariance of combine_many within 1e-9") {
    SplitMix64 rng(15);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t c = 2 + rng.below(3);
        std::vector<Opinion> ops;
        for (int k = 0; k < 3; ++k) ops.push_back(testing::random_opinion(rng, c));
        const Opinion base = combine_many(ops).combined;
        std::vector<Opinion> perm{ops[2], ops[0], ops[1]};
        CHECK(max_abs_diff(base, combine_many(perm).combined) <= 1e-9);
    }
}

TEST_CASE("unit sum preserved through fusion chains") {
    SplitMix64 rng(16);
    for (int i = 0; i < 200; ++i) {
        std::vector<Opinion> ops;
        const std::size_t c = 2 + rng.below(5);
        for (int k = 0; k < 5; ++k) ops.push_back(testing::random_opinion(rng, c));
        const Opinion fused = combine_many(ops).combined; // ctor revalidates unit sum
        double total = fused.uncertainty();
        for (double b : fused.beliefs()) total += b;
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}
