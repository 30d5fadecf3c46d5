#include "neada/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "neada/subroutine.hpp"

namespace neada {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kShapeError: return "shape-error";
    case ErrorCode::kStationarityUnavailable: return "stationarity-unavailable";
    case ErrorCode::kInnerOracleNonconvergent: return "inner-oracle-nonconvergent";
    case ErrorCode::kCompactDomainRequired: return "compact-domain-required";
    case ErrorCode::kLogDomainError: return "log-domain-error";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kShapeError, std::string(what) + " has dimension " +
                                            std::to_string(got) + ", expected " +
                                            std::to_string(want));
  }
}

double dot(ConstSpan a, ConstSpan b) {
  require_dim(b.size(), a.size(), "dot operand");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(ConstSpan a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

double norm(ConstSpan a) { return std::sqrt(norm2(a)); }

double distance(ConstSpan a, ConstSpan b) {
  require_dim(b.size(), a.size(), "distance operand");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

bool all_finite(ConstSpan a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
  return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "index range is empty");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

Vec MinimaxProblem::grad_x(ConstSpan x, ConstSpan y) const {
  Vec out(dim_x());
  grad_x(x, y, out);
  return out;
}

Vec MinimaxProblem::grad_y(ConstSpan x, ConstSpan y) const {
  Vec out(dim_y());
  grad_y(x, y, out);
  return out;
}

Vec MinimaxProblem::projected_y(ConstSpan y) const {
  Vec out(y.begin(), y.end());
  project_y(out);
  return out;
}

double gradient_mapping_from(const MinimaxProblem& problem, ConstSpan y, ConstSpan g) {
  require_dim(g.size(), y.size(), "gradient");
  if (problem.y_unconstrained()) return norm(g);
  Vec moved(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) moved[i] = y[i] + g[i];
  problem.project_y(moved);
  return distance(y, moved);
}

double gradient_mapping(const MinimaxProblem& problem, ConstSpan x, ConstSpan y) {
  require_dim(x.size(), problem.dim_x(), "x");
  require_dim(y.size(), problem.dim_y(), "y");
  const Vec g = problem.grad_y(x, y);
  return gradient_mapping_from(problem, y, g);
}

Stationarity stationarity(const MinimaxProblem& problem, ConstSpan x, ConstSpan y,
                          double approx_tol) {
  require_dim(x.size(), problem.dim_x(), "x");
  require_dim(y.size(), problem.dim_y(), "y");
  std::optional<Vec> ystar = problem.y_star(x);
  if (!ystar) {
    if (approx_tol <= 0.0) {
      throw Error(ErrorCode::kStationarityUnavailable,
                  "problem has no closed-form y* and the approximate solver is disabled");
    }
    ystar = approx_y_star(problem, x, approx_tol);
  }
  Stationarity s;
  s.grad_x_norm = norm(problem.grad_x(x, y));
  s.dist_y = distance(y, *ystar);
  return s;
}

NoisyOracle::NoisyOracle(const MinimaxProblem& problem, double sigma, std::uint64_t seed)
    : problem_(problem), sigma_(sigma), rng_(seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be >= 0");
}

void NoisyOracle::add_noise(MutSpan g, double scale) {
  if (sigma_ == 0.0) return;
  for (double& v : g) v += scale * rng_.normal();
}

void NoisyOracle::sample_grads(ConstSpan x, ConstSpan y, MutSpan gx, MutSpan gy) {
  problem_.grad_x(x, y, gx);
  problem_.grad_y(x, y, gy);
  add_noise(gx, sigma_);
  add_noise(gy, sigma_);
  ++calls_x_;
  ++calls_y_;
}

void NoisyOracle::sample_grad_y(ConstSpan x, ConstSpan y, MutSpan gy) {
  problem_.grad_y(x, y, gy);
  add_noise(gy, sigma_);
  ++calls_y_;
}

void NoisyOracle::sample_grad_x(ConstSpan x, ConstSpan y, std::size_t batch, MutSpan gx) {
  if (batch == 0) throw Error(ErrorCode::kInvalidArgument, "batch must be >= 1");
  problem_.grad_x(x, y, gx);
  calls_x_ += batch;
  if (sigma_ == 0.0) return;
  // Mean of `batch` independent noise draws per coordinate.
  const double inv = 1.0 / static_cast<double>(batch);
  for (double& v : gx) {
    double s = 0.0;
    for (std::size_t i = 0; i < batch; ++i) s += rng_.normal();
    v += sigma_ * s * inv;
  }
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kOk: return "ok";
    case RunStatus::kInnerCapExceeded: return "inner-cap-exceeded";
    case RunStatus::kDivergedNonfinite: return "diverged-nonfinite";
  }
  return "unknown";
}

void fill_metrics(const MinimaxProblem& problem, TrajectoryRow& row, double approx_tol) {
  const Vec gx = problem.grad_x(row.x, row.y);
  const Vec gy = problem.grad_y(row.x, row.y);
  row.grad_x_norm = norm(gx);
  row.grad_map_y = gradient_mapping_from(problem, row.y, gy);
  row.value = problem.value(row.x, row.y);
  std::optional<Vec> ystar = problem.y_star(row.x);
  if (!ystar && approx_tol > 0.0) ystar = approx_y_star(problem, row.x, approx_tol);
  if (ystar) {
    row.dist_y_star = distance(row.y, *ystar);
    row.stationarity = std::max(row.grad_x_norm, row.dist_y_star);
  } else {
    row.dist_y_star = std::numeric_limits<double>::quiet_NaN();
    row.stationarity = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace neada
