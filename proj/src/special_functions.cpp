#include "evidfuse/special_functions.hpp"

#include <cmath>
#include <string>

#include "evidfuse/errors.hpp"

namespace evidfuse {

namespace {

constexpr double kSeriesStart = 10.0;
constexpr double kHalfLogTwoPi = 0.918938533204672741780329736406;

void require_positive(double x, const char* name) {
    if (!(x > 0.0)) {
        throw domain_error(std::string(name) + " requires x > 0, got " + std::to_string(x));
    }
}

} // namespace

double digamma(double x) {
    require_positive(x, "digamma");
    double acc = 0.0;
    while (x < kSeriesStart) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // psi(x) ~ ln x - 1/(2x) - sum_n B_2n / (2n x^2n), truncated where the
    // next term is below 1e-16 for x >= 10.
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * (-1.0 / 12 +
        inv2 * (1.0 / 120 +
        inv2 * (-1.0 / 252 +
        inv2 * (1.0 / 240 +
        inv2 * (-1.0 / 132 +
        inv2 * (691.0 / 32760 +
        inv2 * (-1.0 / 12)))))));
    return acc + std::log(x) - 0.5 * inv + series;
}

double trigamma(double x) {
    require_positive(x, "trigamma");
    double acc = 0.0;
    while (x < kSeriesStart) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    // psi'(x) ~ 1/x + 1/(2x^2) + sum_n B_2n / x^(2n+1)
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * inv * (1.0 / 6 +
        inv2 * (-1.0 / 30 +
        inv2 * (1.0 / 42 +
        inv2 * (-1.0 / 30 +
        inv2 * (5.0 / 66 +
        inv2 * (-691.0 / 2730 +
        inv2 * (7.0 / 6)))))));
    return acc + inv + 0.5 * inv2 + series;
}

double log_gamma(double x) {
    require_positive(x, "log_gamma");
    double shift = 0.0;
    while (x < kSeriesStart) {
        shift += std::log(x);
        x += 1.0;
    }
    // ln Gamma(x) ~ (x - 1/2) ln x - x + ln(2 pi)/2
    //              + sum_n B_2n / (2n (2n-1) x^(2n-1))
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv * (1.0 / 12 +
        inv2 * (-1.0 / 360 +
        inv2 * (1.0 / 1260 +
        inv2 * (-1.0 / 1680 +
        inv2 * (1.0 / 1188 +
        inv2 * (-691.0 / 360360 +
        inv2 * (1.0 / 156)))))));
    return (x - 0.5) * std::log(x) - x + kHalfLogTwoPi + series - shift;
}

} // namespace evidfuse
