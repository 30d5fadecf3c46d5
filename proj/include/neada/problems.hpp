#pragma once

#include <memory>

#include "neada/core.hpp"

namespace neada {

// f(x, y) = -1/2 y^2 + L x y - (L^2 / 2) x^2 on scalars, Y = R.
// Every point of the line y = L x is stationary and max_y f(x, .) = 0.
class QuadraticFamily final : public MinimaxProblem {
 public:
  explicit QuadraticFamily(double L);

  using MinimaxProblem::grad_x;
  using MinimaxProblem::grad_y;

  double L() const { return L_; }

  std::size_t dim_x() const override { return 1; }
  std::size_t dim_y() const override { return 1; }
  double value(ConstSpan x, ConstSpan y) const override;
  void grad_x(ConstSpan x, ConstSpan y, MutSpan out) const override;
  void grad_y(ConstSpan x, ConstSpan y, MutSpan out) const override;
  std::optional<Vec> y_star(ConstSpan x) const override;
  std::optional<double> smoothness() const override;
  std::optional<double> strong_concavity() const override { return 1.0; }

 private:
  double L_;
};

// McCormick in x, bilinear coupling, -1/2 ||y||^2 in y:
// sin(x1 + x2) + (x1 - x2)^2 - 1.5 x1 + 2.5 x2 + 1 + <x, y> - 1/2 ||y||^2.
class McCormickComposite final : public MinimaxProblem {
 public:
  using MinimaxProblem::grad_x;
  using MinimaxProblem::grad_y;

  std::size_t dim_x() const override { return 2; }
  std::size_t dim_y() const override { return 2; }
  double value(ConstSpan x, ConstSpan y) const override;
  void grad_x(ConstSpan x, ConstSpan y, MutSpan out) const override;
  void grad_y(ConstSpan x, ConstSpan y, MutSpan out) const override;
  std::optional<Vec> y_star(ConstSpan x) const override;
  std::optional<double> smoothness() const override { return 4.0; }
  std::optional<double> strong_concavity() const override { return 1.0; }

  // McCormick(x) + 1/2 ||x||^2, the primal function max_y f(x, .).
  static double primal(ConstSpan x);
};

std::unique_ptr<MinimaxProblem> make_quadratic(double L);
std::unique_ptr<MinimaxProblem> make_mccormick();

struct NoiseSpec {
  double sigma = 0.0;
};

std::unique_ptr<NoisyOracle> add_noise(const MinimaxProblem& problem, NoiseSpec spec,
                                       std::uint64_t seed);

}  // namespace neada
