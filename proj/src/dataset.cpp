#include "evidfuse/dataset.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "evidfuse/csv.hpp"
#include "evidfuse/errors.hpp"

namespace evidfuse {

std::vector<double> concat_views(const std::vector<std::vector<double>>& views) {
    std::vector<double> out;
    std::size_t total = 0;
    for (const auto& v : views) total += v.size();
    out.reserve(total);
    for (const auto& v : views) out.insert(out.end(), v.begin(), v.end());
    return out;
}

void write_features_csv(const std::filesystem::path& path, const MultiViewDataset& ds) {
    std::ostringstream out;
    std::size_t dim = 0;
    for (const auto& s : ds.samples) {
        for (const auto& v : s.local_views) dim = std::max(dim, v.size());
    }
    out << "sample_id,view_id,label";
    for (std::size_t f = 1; f <= dim; ++f) out << ",f_" << f;
    out << "\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const MultiViewSample& s = ds.samples[i];
        for (std::size_t k = 0; k < s.local_views.size(); ++k) {
            out << i << "," << k << "," << s.label;
            for (double f : s.local_views[k]) out << "," << format_double(f);
            out << "\n";
        }
    }
    write_text_file(path, out.str());
}

MultiViewDataset read_features_csv(const std::filesystem::path& path) {
    std::vector<std::string> header;
    const auto rows = read_csv(path, header);
    if (header.size() < 4 || header[0] != "sample_id" || header[1] != "view_id" ||
        header[2] != "label") {
        throw parse_error("feature CSV must start with sample_id,view_id,label");
    }
    const std::size_t dim = header.size() - 3;

    // sample_id -> (view_id -> features, label)
    std::map<long, std::map<long, std::vector<double>>> features;
    std::map<long, long> labels;
    const std::string ctx = path.string();
    for (const auto& row : rows) {
        const long sample = parse_long_field(row[0], ctx);
        const long view = parse_long_field(row[1], ctx);
        const long label = parse_long_field(row[2], ctx);
        if (sample < 0 || view < 0 || label < 0) {
            throw parse_error("negative id or label in " + ctx);
        }
        auto [it, inserted] = labels.try_emplace(sample, label);
        if (!inserted && it->second != label) {
            throw parse_error("sample " + std::to_string(sample) + " has conflicting labels");
        }
        std::vector<double> feats(dim);
        for (std::size_t f = 0; f < dim; ++f) {
            feats[f] = parse_double_field(row[3 + f], ctx);
        }
        if (!features[sample].try_emplace(view, std::move(feats)).second) {
            throw parse_error("duplicate (sample, view) row in " + ctx);
        }
    }
    if (features.empty()) throw parse_error("no data rows in " + ctx);

    const std::size_t num_views = features.begin()->second.size();
    long max_label = 0;
    MultiViewDataset ds;
    for (auto& [sample, views] : features) {
        if (views.size() != num_views) {
            throw parse_error("sample " + std::to_string(sample) + " has " +
                              std::to_string(views.size()) + " views, expected " +
                              std::to_string(num_views));
        }
        MultiViewSample s;
        long expected_view = 0;
        for (auto& [view, feats] : views) {
            if (view != expected_view++) {
                throw parse_error("sample " + std::to_string(sample) +
                                  " is missing view " + std::to_string(expected_view - 1));
            }
            s.local_views.push_back(std::move(feats));
        }
        s.label = static_cast<std::size_t>(labels[sample]);
        max_label = std::max(max_label, labels[sample]);
        s.global_view = concat_views(s.local_views);
        ds.samples.push_back(std::move(s));
    }
    ds.num_views = num_views;
    ds.num_classes = static_cast<std::size_t>(max_label) + 1;
    if (ds.num_classes < 2) ds.num_classes = 2;
    return ds;
}

} // namespace evidfuse
