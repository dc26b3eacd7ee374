#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "evidfuse/errors.hpp"
#include "evidfuse/rng.hpp"
#include "evidfuse/synth.hpp"
#include "test_support.hpp"

using namespace evidfuse;

namespace {

SynthSpec base_spec() {
    SynthSpec spec;
    spec.num_classes = 2;
    spec.num_views = 2;
    spec.features_per_view = 1;
    spec.delta = {2.0, 0.0};
    spec.sigma = {1.0, 1.0};
    spec.samples = 4000;
    spec.seed = 77;
    return spec;
}

// Nearest-class-mean error frequency of a single view, the empirical stand-in
// for the closed form.
double empirical_single_view_accuracy(const MultiViewDataset& data, const SynthSpec& spec,
                                      std::size_t view) {
    const double center = (static_cast<double>(spec.num_classes) - 1.0) / 2.0;
    std::size_t correct = 0;
    for (const auto& s : data.samples) {
        double mean_feature = 0.0;
        for (double f : s.local_views[view]) mean_feature += f;
        mean_feature /= static_cast<double>(s.local_views[view].size());
        double best = 1e300;
        std::size_t best_class = 0;
        for (std::size_t c = 0; c < spec.num_classes; ++c) {
            const double mu = spec.delta[view] * (static_cast<double>(c) - center);
            const double d = std::abs(mean_feature - mu);
            if (d < best) {
                best = d;
                best_class = c;
            }
        }
        if (best_class == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.samples.size());
}

} // namespace

TEST_CASE("generation is deterministic under the seed") {
    const SynthSpec spec = base_spec();
    const MultiViewDataset a = generate(spec);
    const MultiViewDataset b = generate(spec);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].label == b.samples[i].label);
        CHECK(a.samples[i].local_views == b.samples[i].local_views); // bitwise
        CHECK(a.samples[i].global_view == b.samples[i].global_view);
    }
}

TEST_CASE("adding a view leaves existing views untouched") {
    SynthSpec two = base_spec();
    SynthSpec three = two;
    three.num_views = 3;
    three.delta = {2.0, 0.0, 1.0};
    three.sigma = {1.0, 1.0, 1.0};
    const MultiViewDataset a = generate(two);
    const MultiViewDataset b = generate(three);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].label == b.samples[i].label);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(a.samples[i].local_views[k] == b.samples[i].local_views[k]);
        }
        CHECK(b.samples[i].local_views.size() == 3);
    }
}

TEST_CASE("global view is the concatenation of locals") {
    const MultiViewDataset data = generate(base_spec());
    for (const auto& s : data.samples) {
        CHECK(s.global_view == concat_views(s.local_views));
    }
}

TEST_CASE("spec validation") {
    SynthSpec spec = base_spec();
    spec.sigma = {1.0, 0.0};
    CHECK_THROWS_AS(generate(spec), domain_error);
    spec = base_spec();
    spec.delta = {1.0};
    CHECK_THROWS_AS(generate(spec), domain_error);
    spec = base_spec();
    spec.num_classes = 1;
    CHECK_THROWS_AS(generate(spec), domain_error);
}

TEST_CASE("bayes accuracy closed-form fixtures") {
    SynthSpec spec = base_spec();
    // C=2, d=1, delta=2 sigma: Phi(1).
    CHECK(bayes_accuracy_single(spec, 0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
    // Pure-noise view: 1/C.
    CHECK(bayes_accuracy_single(spec, 1) == doctest::Approx(0.5).epsilon(1e-12));
    // Combining an informative view with pure noise changes nothing.
    CHECK(bayes_accuracy_combined(spec) ==
          doctest::Approx(bayes_accuracy_single(spec, 0)).epsilon(1e-12));

    // Two equally informative independent views beat either alone.
    SynthSpec both = spec;
    both.delta = {2.0, 2.0};
    CHECK(bayes_accuracy_combined(both) > bayes_accuracy_single(both, 0));

    // delta -> large, sigma -> small drives accuracy to 1.
    SynthSpec sharp = spec;
    sharp.delta = {50.0, 0.0};
    sharp.sigma = {0.1, 1.0};
    CHECK(bayes_accuracy_single(sharp, 0) > 1.0 - 1e-12);

    CHECK_THROWS_AS(bayes_accuracy(spec, {}), domain_error);
    CHECK_THROWS_AS(bayes_accuracy(spec, {5}), domain_error);
}

TEST_CASE("multi-class bayes accuracy: 1/C for pure noise") {
    SynthSpec spec = base_spec();
    spec.num_classes = 5;
    spec.delta = {0.0, 0.0};
    CHECK(bayes_accuracy_combined(spec) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("empirical accuracy of a noise view is 1/C within 3%") {
    const SynthSpec spec = base_spec();
    const MultiViewDataset data = generate(spec);
    CHECK(std::abs(empirical_single_view_accuracy(data, spec, 1) - 0.5) <= 0.03);
}

TEST_CASE("empirical accuracy tracks the closed form on an informative view") {
    const SynthSpec spec = base_spec();
    const MultiViewDataset data = generate(spec);
    const double expect = bayes_accuracy_single(spec, 0); // Phi(1)
    CHECK(std::abs(empirical_single_view_accuracy(data, spec, 0) - expect) <= 0.03);
}

TEST_CASE("labels are close to uniform") {
    const MultiViewDataset data = generate(base_spec());
    std::size_t ones = 0;
    for (const auto& s : data.samples) ones += s.label;
    const double frac = static_cast<double>(ones) / static_cast<double>(data.samples.size());
    CHECK(std::abs(frac - 0.5) <= 0.05);
}

TEST_CASE("synth spec JSON round trip") {
    const SynthSpec spec = base_spec();
    const SynthSpec back = synth_spec_from_json(synth_spec_to_json(spec));
    CHECK(back.num_classes == spec.num_classes);
    CHECK(back.delta == spec.delta);
    CHECK(back.sigma == spec.sigma);
    CHECK(back.seed == spec.seed);
    CHECK_THROWS_AS(synth_spec_from_json(nlohmann::json{{"num_classes", 2}}), parse_error);
}

TEST_CASE("feature CSV round trip preserves the dataset bitwise") {
    SynthSpec spec = base_spec();
    spec.samples = 50;
    spec.features_per_view = 3;
    const MultiViewDataset data = generate(spec);
    const auto path = std::filesystem::temp_directory_path() / "evidfuse_feat_test.csv";
    write_features_csv(path, data);
    const MultiViewDataset back = read_features_csv(path);
    REQUIRE(back.samples.size() == data.samples.size());
    CHECK(back.num_views == data.num_views);
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        CHECK(back.samples[i].label == data.samples[i].label);
        CHECK(back.samples[i].local_views == data.samples[i].local_views);
        CHECK(back.samples[i].global_view == data.samples[i].global_view);
    }
    std::filesystem::remove(path);
}
