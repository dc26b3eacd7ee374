#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace evidfuse {

// K local feature vectors plus one global view and an integer label.
// The global view is the concatenation of the local views in view order,
// standing in for the full-ROI image of the clinical pipeline.
struct MultiViewSample {
    std::vector<std::vector<double>> local_views;
    std::vector<double> global_view;
    std::size_t label = 0;
};

struct MultiViewDataset {
    std::size_t num_classes = 0;
    std::size_t num_views = 0; // local views only
    std::vector<MultiViewSample> samples;
};

std::vector<double> concat_views(const std::vector<std::vector<double>>& views);

// Feature CSV schema: header sample_id,view_id,label,f_1,...,f_d with one row
// per (sample, local view). The global view is reconstructed as the
// concatenation of local views in ascending view_id order.
void write_features_csv(const std::filesystem::path& path, const MultiViewDataset& ds);
MultiViewDataset read_features_csv(const std::filesystem::path& path);

} // namespace evidfuse
