#pragma once

// Shared generators and independent oracle implementations. Everything here
// stays deliberately separate from the library code paths it checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "evidfuse/opinion.hpp"
#include "evidfuse/rng.hpp"

namespace evidfuse::testing {

inline Evidence random_evidence(SplitMix64& rng, std::size_t num_classes, double hi = 10.0) {
    std::vector<double> values(num_classes);
    for (double& v : values) v = rng.uniform(0.0, hi);
    return Evidence(std::move(values));
}

inline Opinion random_opinion(SplitMix64& rng, std::size_t num_classes) {
    const double u = rng.uniform_pos();
    std::vector<double> raw(num_classes);
    double total = 0.0;
    for (double& v : raw) {
        v = rng.uniform_pos();
        total += v;
    }
    for (double& v : raw) v *= (1.0 - u) / total;
    return Opinion(std::move(raw), u);
}

// Marsaglia-Tsang Gamma(shape, 1) sampler for shape >= 1.
inline double sample_gamma(SplitMix64& rng, double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

inline std::vector<double> sample_dirichlet(SplitMix64& rng, const std::vector<double>& alpha) {
    std::vector<double> draw(alpha.size());
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        draw[i] = sample_gamma(rng, alpha[i]);
        total += draw[i];
    }
    for (double& v : draw) v /= total;
    return draw;
}

// Central finite differences of a scalar function of a flat vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = f(x);
        x[i] = saved - h;
        const double down = f(x);
        x[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline double fd_partial(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double> x, std::size_t i, double h = 1e-5) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// All-pairs AUC with half credit for ties; quadratic on purpose.
inline double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

inline double shannon_entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

struct MeanAndError {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MeanAndError running_mean(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

} // namespace evidfuse::testing
