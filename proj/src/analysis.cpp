#include "neada/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace neada {

double lemma1_gda_predict(double L, double r, double eta_x, double grad0, std::int64_t T) {
  if (!(L > 0.0) || !(r > 0.0) || !(eta_x > 0.0) || T < 0) {
    throw Error(ErrorCode::kInvalidArgument, "L, r, eta_x must be > 0 and T >= 0");
  }
  const double factor = 1.0 + eta_x * (L * L - r);
  double g = grad0;
  for (std::int64_t t = 0; t < T; ++t) g *= factor;
  return g;
}

double lemma1_adaptive_bound(double L, double r, double eta_x, double beta,
                             std::span<const double> v_trace, double grad0, std::int64_t T) {
  if (!(L > 0.0) || !(r > 0.0) || !(eta_x > 0.0) || T < 0) {
    throw Error(ErrorCode::kInvalidArgument, "L, r, eta_x must be > 0 and T >= 0");
  }
  if (static_cast<std::size_t>(T) > v_trace.size()) {
    throw Error(ErrorCode::kShapeError, "v trace shorter than T");
  }
  double g = grad0;
  for (std::int64_t t = 0; t < T; ++t) {
    const double v = v_trace[static_cast<std::size_t>(t)];
    g *= 1.0 + L * eta_x / std::sqrt(v) * (1.0 - beta) * (L - r);
  }
  return g;
}

SlopeFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  require_dim(ys.size(), xs.size(), "ys");
  if (xs.size() < 3) throw Error(ErrorCode::kInvalidArgument, "slope fit needs >= 3 points");
  const std::size_t n = xs.size();
  Vec lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw Error(ErrorCode::kLogDomainError, "log-log fit needs strictly positive points");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kInvalidArgument, "slope fit needs distinct xs");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / static_cast<double>(n));
  fit.points = n;
  return fit;
}

SlopeFit fit_loglog_slope_window(std::span<const double> xs, std::span<const double> ys,
                                 double burn_in) {
  require_dim(ys.size(), xs.size(), "ys");
  const auto skip = static_cast<std::size_t>(std::floor(burn_in * static_cast<double>(xs.size())));
  return fit_loglog_slope(xs.subspan(skip), ys.subspan(skip));
}

Vec running_min(std::span<const double> values) {
  Vec out(values.size());
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    m = std::min(m, values[i]);
    out[i] = m;
  }
  return out;
}

SlopeFit fit_rate(std::span<const double> values, double burn_in) {
  Vec ts(values.size());
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<double>(i + 1);
  return fit_loglog_slope_window(ts, values, burn_in);
}

}  // namespace neada
