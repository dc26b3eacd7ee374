#include "evidfuse/synth.hpp"

#include <cmath>
#include <string>

#include "evidfuse/errors.hpp"
#include "evidfuse/rng.hpp"

namespace evidfuse {

namespace {
// Substream ids: labels from stream 0, view k noise from stream k + 1.
constexpr std::uint64_t kLabelStream = 0;
} // namespace

void SynthSpec::validate() const {
    if (num_classes < 2) throw domain_error("synth spec needs >= 2 classes");
    if (num_views < 1) throw domain_error("synth spec needs >= 1 view");
    if (features_per_view < 1) throw domain_error("synth spec needs >= 1 feature per view");
    if (samples < 1) throw domain_error("synth spec needs >= 1 sample");
    if (delta.size() != num_views || sigma.size() != num_views) {
        throw domain_error("delta and sigma need one entry per view");
    }
    for (double d : delta) {
        if (!(d >= 0.0)) throw domain_error("delta must be >= 0");
    }
    for (double s : sigma) {
        if (!(s > 0.0)) throw domain_error("sigma must be > 0");
    }
}

nlohmann::json synth_spec_to_json(const SynthSpec& spec) {
    return nlohmann::json{
        {"num_classes", spec.num_classes},   {"num_views", spec.num_views},
        {"features_per_view", spec.features_per_view},
        {"delta", spec.delta},               {"sigma", spec.sigma},
        {"samples", spec.samples},           {"seed", spec.seed},
    };
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec spec;
    try {
        spec.num_classes = j.at("num_classes").get<std::size_t>();
        spec.num_views = j.at("num_views").get<std::size_t>();
        spec.features_per_view = j.at("features_per_view").get<std::size_t>();
        spec.delta = j.at("delta").get<std::vector<double>>();
        spec.sigma = j.at("sigma").get<std::vector<double>>();
        spec.samples = j.at("samples").get<std::size_t>();
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad synth spec JSON: ") + e.what());
    }
    spec.validate();
    return spec;
}

MultiViewDataset generate(const SynthSpec& spec) {
    spec.validate();
    const SplitMix64 root(spec.seed);
    SplitMix64 label_rng = root.substream(kLabelStream);

    MultiViewDataset ds;
    ds.num_classes = spec.num_classes;
    ds.num_views = spec.num_views;
    ds.samples.resize(spec.samples);
    for (auto& s : ds.samples) {
        s.label = static_cast<std::size_t>(label_rng.below(spec.num_classes));
        s.local_views.resize(spec.num_views);
    }

    const double center = (static_cast<double>(spec.num_classes) - 1.0) / 2.0;
    for (std::size_t k = 0; k < spec.num_views; ++k) {
        SplitMix64 view_rng = root.substream(k + 1);
        for (auto& s : ds.samples) {
            const double mean = spec.delta[k] * (static_cast<double>(s.label) - center);
            auto& feats = s.local_views[k];
            feats.resize(spec.features_per_view);
            for (double& f : feats) {
                f = mean + spec.sigma[k] * view_rng.normal();
            }
        }
    }
    for (auto& s : ds.samples) {
        s.global_view = concat_views(s.local_views);
    }
    return ds;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double bayes_accuracy(const SynthSpec& spec, const std::vector<std::size_t>& views) {
    spec.validate();
    if (views.empty()) throw domain_error("bayes_accuracy needs at least one view");
    double gap_sq = 0.0;
    for (std::size_t k : views) {
        if (k >= spec.num_views) {
            throw domain_error("view index " + std::to_string(k) + " out of range");
        }
        const double unit = spec.delta[k] / spec.sigma[k];
        gap_sq += static_cast<double>(spec.features_per_view) * unit * unit;
    }
    // Class means are collinear and equally spaced, so after whitening the
    // problem reduces to one dimension with adjacent-mean gap g: the two edge
    // classes err with prob Phi(-g/2), interior classes with 2 Phi(-g/2).
    const double g = std::sqrt(gap_sq);
    const double c = static_cast<double>(spec.num_classes);
    return 1.0 - (2.0 * (c - 1.0) / c) * normal_cdf(-g / 2.0);
}

double bayes_accuracy_single(const SynthSpec& spec, std::size_t view) {
    return bayes_accuracy(spec, {view});
}

double bayes_accuracy_combined(const SynthSpec& spec) {
    std::vector<std::size_t> all(spec.num_views);
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return bayes_accuracy(spec, all);
}

} // namespace evidfuse
