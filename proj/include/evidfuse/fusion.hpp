#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "evidfuse/opinion.hpp"

namespace evidfuse {

// Threshold below which the normalization factor counts as total conflict.
// Opinions with u > 0 can never reach it; hitting it means degenerate input.
inline constexpr double kConflictFloor = 1e-12;

struct FusionResult {
    Opinion combined;
    double conflict;                        // normalization factor N of the last step
    std::vector<double> step_conflicts;     // N per pairwise step, in fold order
    std::vector<std::string> order;         // identifiers of the inputs, in fold order
};

namespace detail {

// Dempster's rule on raw arrays; returns the normalization factor N.
// Shared with the gradient tape so the trained path and the inference path
// evaluate the identical expressions.
double dempster_raw(const double* b1, double u1, const double* b2, double u2,
                    std::size_t num_classes, double* b_out, double& u_out);

} // namespace detail

// Combined beliefs b_c = (b1_c b2_c + b1_c u2 + b2_c u1) / N with
// N = 1 - sum_{i != j} b1_i b2_j; combined u = u1 u2 / N.
FusionResult combine_pair(const Opinion& d1, const Opinion& d2);

// Left fold of combine_pair over the inputs: D1 (+) D2 (+) ... (+) Dn.
FusionResult combine_many(const std::vector<Opinion>& ds);
FusionResult combine_many(const std::vector<Opinion>& ds, std::vector<std::string> ids);

} // namespace evidfuse
