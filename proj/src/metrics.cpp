#include "evidfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evidfuse/errors.hpp"

namespace evidfuse {

PredictionRecord::PredictionRecord(ProbVector probs, std::size_t label, double uncertainty)
    : probs_(std::move(probs)), label_(label), uncertainty_(uncertainty) {
    if (label_ >= probs_.num_classes()) {
        throw domain_error("label out of range for prediction record");
    }
    if (!(uncertainty_ >= 0.0 && uncertainty_ <= 1.0)) {
        throw domain_error("record uncertainty must lie in [0, 1]");
    }
    predicted_ = argmax_class(probs_.probs());
    confidence_ = probs_.probs()[predicted_];
}

std::size_t argmax_class(const std::vector<double>& probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return best;
}

double accuracy(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw domain_error("accuracy of an empty record set");
    std::size_t correct = 0;
    for (const PredictionRecord& r : records) {
        if (r.predicted_class() == r.label()) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

double auc_binary(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw domain_error("scores and labels must have equal length");
    }
    std::size_t num_pos = 0, num_neg = 0;
    for (int l : labels) {
        if (l == 1) ++num_pos;
        else if (l == 0) ++num_neg;
        else throw domain_error("binary AUC labels must be 0 or 1");
    }
    if (num_pos == 0 || num_neg == 0) {
        throw domain_error("binary AUC needs both classes present");
    }

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of average ranks of the positives; tied scores share the mean rank,
    // which reproduces the 1/2-per-tie pair counting.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] == 1) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(num_pos);
    const double nn = static_cast<double>(num_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double ece(const std::vector<PredictionRecord>& records, int bins) {
    if (records.empty()) throw domain_error("ECE of an empty record set");
    if (bins < 1) throw domain_error("ECE needs at least one bin");

    std::vector<std::size_t> count(bins, 0);
    std::vector<double> conf_sum(bins, 0.0);
    std::vector<std::size_t> correct(bins, 0);
    for (const PredictionRecord& r : records) {
        // Bin b covers (b/bins, (b+1)/bins]; confidence is always > 0.
        int b = static_cast<int>(std::ceil(r.confidence() * bins)) - 1;
        b = std::clamp(b, 0, bins - 1);
        ++count[b];
        conf_sum[b] += r.confidence();
        if (r.predicted_class() == r.label()) ++correct[b];
    }

    const double n = static_cast<double>(records.size());
    double gap = 0.0;
    for (int b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double acc_b = static_cast<double>(correct[b]) / static_cast<double>(count[b]);
        const double conf_b = conf_sum[b] / static_cast<double>(count[b]);
        gap += (static_cast<double>(count[b]) / n) * std::abs(acc_b - conf_b);
    }
    return gap;
}

double mean_uncertainty(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw domain_error("mean uncertainty of an empty record set");
    double sum = 0.0;
    for (const PredictionRecord& r : records) sum += r.uncertainty();
    return sum / static_cast<double>(records.size());
}

} // namespace evidfuse
