#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "evidfuse/opinion.hpp"

namespace evidfuse {

class OneHotLabel {
public:
    OneHotLabel(std::size_t true_class, std::size_t num_classes);

    // Validates that y has exactly one 1 and zeros elsewhere.
    static OneHotLabel from_vector(const std::vector<double>& y);

    std::size_t true_class() const { return true_class_; }
    std::size_t num_classes() const { return num_classes_; }
    std::vector<double> to_vector() const;

private:
    std::size_t true_class_;
    std::size_t num_classes_;
};

// Balance factor schedule: lambda(step) = min(1, step / total_steps),
// clamped at 1 once total_steps is reached.
struct AnnealSchedule {
    std::int64_t total_steps = 1;
    std::int64_t current_step = 0;

    double lambda_at(std::int64_t step) const;
    double lambda() const { return lambda_at(current_step); }
    void advance() { ++current_step; }
};

// Integrated cross-entropy E_{p~Dir(alpha)}[CE(p, y)] = sum_c y_c (psi(S) - psi(alpha_c)).
double integrated_ce(const DirichletParams& a, const OneHotLabel& y);

// KL[Dir(p|alpha_tilde) || Dir(p|1)] in closed form.
double kl_to_uniform(const DirichletParams& a_tilde);

// alpha_tilde = y + (1 - y) .* alpha: the true-class entry is forced to 1 so
// the regularizer only shrinks misleading evidence.
DirichletParams masked_alpha(const DirichletParams& a, const OneHotLabel& y);

// L = integrated_ce + lambda * kl_to_uniform(masked_alpha); lambda in [0, 1].
double view_loss(const DirichletParams& a, const OneHotLabel& y, double lambda);

// L_overall = L_combined + L_global + sum_k L_k, each term a view_loss with
// the shared lambda.
double overall_loss(const std::vector<DirichletParams>& views,
                    const DirichletParams& global,
                    const DirichletParams& combined,
                    const OneHotLabel& y, double lambda);

} // namespace evidfuse
