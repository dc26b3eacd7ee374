#include "evidfuse/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evidfuse/errors.hpp"
#include "evidfuse/special_functions.hpp"

namespace evidfuse {

OneHotLabel::OneHotLabel(std::size_t true_class, std::size_t num_classes)
    : true_class_(true_class), num_classes_(num_classes) {
    if (num_classes_ < 2) throw domain_error("label needs at least 2 classes");
    if (true_class_ >= num_classes_) {
        throw domain_error("class index " + std::to_string(true_class_) +
                           " out of range for " + std::to_string(num_classes_) + " classes");
    }
}

OneHotLabel OneHotLabel::from_vector(const std::vector<double>& y) {
    std::size_t ones = 0;
    std::size_t hot = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1.0) {
            ++ones;
            hot = i;
        } else if (y[i] != 0.0) {
            throw domain_error("one-hot vector entries must be 0 or 1");
        }
    }
    if (ones != 1) throw domain_error("one-hot vector must contain exactly one 1");
    return OneHotLabel(hot, y.size());
}

std::vector<double> OneHotLabel::to_vector() const {
    std::vector<double> y(num_classes_, 0.0);
    y[true_class_] = 1.0;
    return y;
}

double AnnealSchedule::lambda_at(std::int64_t step) const {
    if (total_steps < 1) throw domain_error("anneal schedule needs total_steps >= 1");
    if (step < 0) throw domain_error("anneal step must be non-negative");
    return std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
}

double integrated_ce(const DirichletParams& a, const OneHotLabel& y) {
    if (a.num_classes() != y.num_classes()) {
        throw domain_error("alpha / label class count mismatch");
    }
    return digamma(a.strength()) - digamma(a.alpha()[y.true_class()]);
}

double kl_to_uniform(const DirichletParams& a_tilde) {
    const std::size_t c = a_tilde.num_classes();
    const double s = a_tilde.strength();
    double value = log_gamma(s) - log_gamma(static_cast<double>(c));
    const double psi_s = digamma(s);
    for (double a : a_tilde.alpha()) {
        value -= log_gamma(a);
        value += (a - 1.0) * (digamma(a) - psi_s);
    }
    return value;
}

DirichletParams masked_alpha(const DirichletParams& a, const OneHotLabel& y) {
    if (a.num_classes() != y.num_classes()) {
        throw domain_error("alpha / label class count mismatch");
    }
    std::vector<double> masked(a.alpha());
    masked[y.true_class()] = 1.0;
    return DirichletParams(std::move(masked));
}

double view_loss(const DirichletParams& a, const OneHotLabel& y, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw domain_error("lambda must lie in [0, 1]");
    }
    double loss = integrated_ce(a, y);
    if (lambda > 0.0) {
        loss += lambda * kl_to_uniform(masked_alpha(a, y));
    }
    return loss;
}

double overall_loss(const std::vector<DirichletParams>& views,
                    const DirichletParams& global,
                    const DirichletParams& combined,
                    const OneHotLabel& y, double lambda) {
    double loss = view_loss(combined, y, lambda) + view_loss(global, y, lambda);
    for (const DirichletParams& view : views) {
        loss += view_loss(view, y, lambda);
    }
    return loss;
}

} // namespace evidfuse
