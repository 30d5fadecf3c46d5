#pragma once

#include <span>

#include "neada/core.hpp"

namespace neada {

// grad0 * (1 + eta_x (L^2 - r))^T, the exact GDA gradient on the quadratic family.
double lemma1_gda_predict(double L, double r, double eta_x, double grad0, std::int64_t T);

// grad0 * prod_t [1 + (L eta_x / sqrt(v_t)) (1 - beta) (L - r)] over the
// first T entries of v_trace, where v_trace[t] is the x second moment used
// by the update at step t.
double lemma1_adaptive_bound(double L, double r, double eta_x, double beta,
                             std::span<const double> v_trace, double grad0, std::int64_t T);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of log-space residuals
  std::size_t points = 0;
};

// Least-squares line through (log x, log y). Needs >= 3 positive points.
SlopeFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys);

// Same after dropping the leading `burn_in` fraction of the points.
SlopeFit fit_loglog_slope_window(std::span<const double> xs, std::span<const double> ys,
                                 double burn_in = 0.1);

Vec running_min(std::span<const double> values);

// Least-squares slope of log(values[i]) against log(i + 1) - for sequences
// indexed by outer iteration.
SlopeFit fit_rate(std::span<const double> values, double burn_in = 0.1);

}  // namespace neada
