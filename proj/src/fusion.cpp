#include "evidfuse/fusion.hpp"

#include <string>

#include "evidfuse/errors.hpp"

namespace evidfuse {

namespace detail {

double dempster_raw(const double* b1, double u1, const double* b2, double u2,
                    std::size_t num_classes, double* b_out, double& u_out) {
    double sum1 = 0.0, sum2 = 0.0, agree = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        sum1 += b1[c];
        sum2 += b2[c];
        agree += b1[c] * b2[c];
    }
    // N = 1 - sum_{i != j} b1_i b2_j = 1 - sum1*sum2 + sum_c b1_c b2_c
    const double n = 1.0 - sum1 * sum2 + agree;
    for (std::size_t c = 0; c < num_classes; ++c) {
        b_out[c] = (b1[c] * b2[c] + b1[c] * u2 + b2[c] * u1) / n;
    }
    u_out = u1 * u2 / n;
    return n;
}

} // namespace detail

FusionResult combine_pair(const Opinion& d1, const Opinion& d2) {
    if (d1.num_classes() != d2.num_classes()) {
        throw domain_error("cannot combine opinions over different class counts");
    }
    const std::size_t c = d1.num_classes();
    std::vector<double> beliefs(c);
    double u = 0.0;
    const double n = detail::dempster_raw(d1.beliefs().data(), d1.uncertainty(),
                                          d2.beliefs().data(), d2.uncertainty(),
                                          c, beliefs.data(), u);
    if (n <= kConflictFloor) {
        throw domain_error("total conflict between opinions (N <= 1e-12)");
    }
    return FusionResult{Opinion(std::move(beliefs), u), n, {n}, {"0", "1"}};
}

FusionResult combine_many(const std::vector<Opinion>& ds, std::vector<std::string> ids) {
    if (ds.empty()) throw domain_error("combine_many needs at least one opinion");
    if (ids.size() != ds.size()) throw domain_error("one identifier per opinion required");
    for (const Opinion& d : ds) {
        if (d.num_classes() != ds.front().num_classes()) {
            throw domain_error("cannot combine opinions over different class counts");
        }
    }
    FusionResult result{ds.front(), 1.0, {}, {ids.front()}};
    for (std::size_t i = 1; i < ds.size(); ++i) {
        FusionResult step = combine_pair(result.combined, ds[i]);
        result.combined = std::move(step.combined);
        result.conflict = step.conflict;
        result.step_conflicts.push_back(step.conflict);
        result.order.push_back(std::move(ids[i]));
    }
    return result;
}

FusionResult combine_many(const std::vector<Opinion>& ds) {
    std::vector<std::string> ids(ds.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
    return combine_many(ds, std::move(ids));
}

} // namespace evidfuse
