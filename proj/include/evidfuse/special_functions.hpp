#pragma once

namespace evidfuse {

// Digamma psi(x) for x > 0. Recurrence psi(x) = psi(x+1) - 1/x below 10,
// then the Bernoulli asymptotic series. Absolute error <= 1e-10 on
// [1e-3, 1e6] (well under 1e-13 over the range the losses touch).
double digamma(double x);

// Trigamma psi'(x) for x > 0, same recurrence-plus-series scheme. Needed by
// the analytic gradients of the Dirichlet losses.
double trigamma(double x);

// ln Gamma(x) for x > 0 via the Stirling series after shifting x above 10.
// Absolute error <= 1e-10 on [1e-3, 1e4]; relative error stays at machine
// level beyond that (an absolute 1e-10 at x = 1e6 is not representable in
// doubles since ln Gamma(1e6) ~ 1.3e7).
double log_gamma(double x);

} // namespace evidfuse
