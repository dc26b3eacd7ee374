#pragma once

#include <cstddef>
#include <vector>

#include "evidfuse/opinion.hpp"

namespace evidfuse {

// One evaluated prediction. Confidence is always the maximum expected
// probability (the standard ECE definition); the evidential uncertainty u is
// carried alongside and reported separately.
class PredictionRecord {
public:
    PredictionRecord(ProbVector probs, std::size_t label, double uncertainty);

    const ProbVector& probs() const { return probs_; }
    double confidence() const { return confidence_; }
    std::size_t label() const { return label_; }
    double uncertainty() const { return uncertainty_; }
    std::size_t predicted_class() const { return predicted_; }

private:
    ProbVector probs_;
    double confidence_;
    std::size_t label_;
    double uncertainty_;
    std::size_t predicted_;
};

// Argmax with ties broken by the lowest class index.
std::size_t argmax_class(const std::vector<double>& probs);

// Fraction of records whose argmax matches the label.
double accuracy(const std::vector<PredictionRecord>& records);

// Mann-Whitney AUC for binary labels (0/1); ties count 1/2. Computed by
// average ranks, which agrees with the all-pairs count exactly.
double auc_binary(const std::vector<double>& scores, const std::vector<int>& labels);

// Expected calibration error over `bins` equal-width confidence bins on
// (0, 1], right-inclusive.
double ece(const std::vector<PredictionRecord>& records, int bins = 10);

double mean_uncertainty(const std::vector<PredictionRecord>& records);

} // namespace evidfuse
