#include "neada/problems.hpp"

#include <algorithm>
#include <cmath>

namespace neada {

QuadraticFamily::QuadraticFamily(double L) : L_(L) {
  if (!(L > 0.0)) throw Error(ErrorCode::kInvalidArgument, "L must be > 0");
}

double QuadraticFamily::value(ConstSpan x, ConstSpan y) const {
  require_dim(x.size(), 1, "x");
  require_dim(y.size(), 1, "y");
  return -0.5 * y[0] * y[0] + L_ * x[0] * y[0] - 0.5 * L_ * L_ * x[0] * x[0];
}

void QuadraticFamily::grad_x(ConstSpan x, ConstSpan y, MutSpan out) const {
  require_dim(x.size(), 1, "x");
  require_dim(y.size(), 1, "y");
  require_dim(out.size(), 1, "grad_x buffer");
  out[0] = -L_ * L_ * x[0] + L_ * y[0];
}

void QuadraticFamily::grad_y(ConstSpan x, ConstSpan y, MutSpan out) const {
  require_dim(x.size(), 1, "x");
  require_dim(y.size(), 1, "y");
  require_dim(out.size(), 1, "grad_y buffer");
  out[0] = L_ * x[0] - y[0];
}

std::optional<Vec> QuadraticFamily::y_star(ConstSpan x) const {
  require_dim(x.size(), 1, "x");
  return Vec{L_ * x[0]};
}

// Lipschitz constant of the joint gradient map in the
// max(||dgx||, ||dgy||) <= l (||dx|| + ||dy||) sense.
std::optional<double> QuadraticFamily::smoothness() const { return std::max(L_ * L_, L_); }

double McCormickComposite::primal(ConstSpan x) {
  require_dim(x.size(), 2, "x");
  const double a = x[0], b = x[1];
  return std::sin(a + b) + (a - b) * (a - b) - 1.5 * a + 2.5 * b + 1.0 + 0.5 * (a * a + b * b);
}

double McCormickComposite::value(ConstSpan x, ConstSpan y) const {
  require_dim(x.size(), 2, "x");
  require_dim(y.size(), 2, "y");
  const double a = x[0], b = x[1];
  return std::sin(a + b) + (a - b) * (a - b) - 1.5 * a + 2.5 * b + 1.0 + a * y[0] + b * y[1] -
         0.5 * (y[0] * y[0] + y[1] * y[1]);
}

void McCormickComposite::grad_x(ConstSpan x, ConstSpan y, MutSpan out) const {
  require_dim(x.size(), 2, "x");
  require_dim(y.size(), 2, "y");
  require_dim(out.size(), 2, "grad_x buffer");
  const double c = std::cos(x[0] + x[1]);
  const double d = 2.0 * (x[0] - x[1]);
  out[0] = c + d - 1.5 + y[0];
  out[1] = c - d + 2.5 + y[1];
}

void McCormickComposite::grad_y(ConstSpan x, ConstSpan y, MutSpan out) const {
  require_dim(x.size(), 2, "x");
  require_dim(y.size(), 2, "y");
  require_dim(out.size(), 2, "grad_y buffer");
  out[0] = x[0] - y[0];
  out[1] = x[1] - y[1];
}

std::optional<Vec> McCormickComposite::y_star(ConstSpan x) const {
  require_dim(x.size(), 2, "x");
  return Vec{x[0], x[1]};
}

std::unique_ptr<MinimaxProblem> make_quadratic(double L) {
  return std::make_unique<QuadraticFamily>(L);
}

std::unique_ptr<MinimaxProblem> make_mccormick() { return std::make_unique<McCormickComposite>(); }

std::unique_ptr<NoisyOracle> add_noise(const MinimaxProblem& problem, NoiseSpec spec,
                                       std::uint64_t seed) {
  return std::make_unique<NoisyOracle>(problem, spec.sigma, seed);
}

}  // namespace neada
