#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "evidfuse/dataset.hpp"

namespace evidfuse {

// Gaussian multi-view benchmark family. Class c shifts every feature of view
// k by delta_k * (c - (C-1)/2), so class means are collinear and equally
// spaced with per-dimension gap delta_k; noise is N(0, sigma_k^2) iid. A view
// with delta_k = 0 carries no label information by construction, and the
// Bayes-optimal accuracy of any view subset has a closed form, which is what
// makes quantitative end-to-end targets possible without the clinical data.
struct SynthSpec {
    std::size_t num_classes = 2;
    std::size_t num_views = 2;
    std::size_t features_per_view = 4;
    std::vector<double> delta;  // one per view, >= 0
    std::vector<double> sigma;  // one per view, > 0
    std::size_t samples = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

// Deterministic under the seed. Labels and each view's noise come from
// independent SplitMix64 substreams, so adding a view never perturbs the
// features of existing ones.
MultiViewDataset generate(const SynthSpec& spec);

// Bayes-optimal accuracy using only the listed local views:
//   1 - (2(C-1)/C) * Phi(-g/2),  g = sqrt(sum_k d * delta_k^2 / sigma_k^2).
double bayes_accuracy(const SynthSpec& spec, const std::vector<std::size_t>& views);
double bayes_accuracy_single(const SynthSpec& spec, std::size_t view);
double bayes_accuracy_combined(const SynthSpec& spec);

// Standard normal CDF.
double normal_cdf(double z);

} // namespace evidfuse
