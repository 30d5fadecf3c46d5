#pragma once

// Outer loops: simultaneous non-nested updates and the nested (NeAda)
// framework, either with scalar AdaGrad on x or with any psi averager.

#include <chrono>
#include <cstdint>

#include "neada/averagers.hpp"
#include "neada/core.hpp"
#include "neada/subroutine.hpp"

namespace neada {

struct NonNestedConfig {
  double eta_x = 0.01;
  double eta_y = 0.01;
  double beta_x = 0.0;
  double beta_y = 0.0;
  PsiVariant psi_x = PsiVariant::gda();
  PsiVariant psi_y = PsiVariant::gda();
  double v0_x = 0.0;
  double v0_y = 0.0;
  std::int64_t steps = 1000;
  std::int64_t record_every = 1;
  double approx_tol = 0.0;  // > 0 enables approx y* for the metric columns

  double ratio() const { return eta_y / eta_x; }
};

enum class OuterKind { kScalarAdaGrad, kAveraged };

struct NeAdaConfig {
  OuterKind outer = OuterKind::kScalarAdaGrad;
  double eta = 0.1;
  double v0 = 1.0;  // scalar accumulator init, must be > 0
  // generic outer averager (OuterKind::kAveraged)
  PsiVariant psi_x = PsiVariant::adagrad();
  double beta_x = 0.0;
  double v0_x = 0.0;

  std::int64_t batch = 1;
  StoppingCriterion criterion = CriterionI{};
  InnerConfig inner{};
  std::int64_t outer_steps = 100;
  // Stop once calls_x + calls_y reaches this many; 0 = unlimited.
  std::uint64_t max_oracle_calls = 0;
  std::int64_t record_every = 1;
  double approx_tol = 0.0;
};

class NonNestedRunner {
 public:
  NonNestedRunner(GradientOracle& oracle, const NonNestedConfig& config, Vec x0, Vec y0);

  // One simultaneous update. Returns false once the run has ended.
  bool step();
  Trajectory run();

  std::int64_t t() const { return t_; }
  const Vec& x() const { return x_; }
  const Vec& y() const { return y_; }
  const AveragerState& averager_x() const { return ax_; }
  const AveragerState& averager_y() const { return ay_; }
  const Trajectory& trajectory() const { return traj_; }
  Trajectory take_trajectory() { return std::move(traj_); }

 private:
  void record();

  GradientOracle& oracle_;
  NonNestedConfig config_;
  Vec x_, y_, gx_, gy_, step_x_, step_y_;
  AveragerState ax_, ay_;
  std::int64_t t_ = 0;
  bool done_ = false;
  Trajectory traj_;
  std::chrono::steady_clock::time_point start_;
};

class NeAdaRunner {
 public:
  NeAdaRunner(GradientOracle& oracle, const NeAdaConfig& config, Vec x0, Vec y_init);

  // One outer iteration (inner loop plus x update). Returns false once the
  // run has ended.
  bool step();
  Trajectory run();

  std::int64_t t() const { return t_; }
  const Vec& x() const { return x_; }
  const Vec& y() const { return y_; }
  double v_outer() const { return v_; }
  const InnerState& inner_state() const { return inner_; }
  const Trajectory& trajectory() const { return traj_; }
  Trajectory take_trajectory() { return std::move(traj_); }

 private:
  GradientOracle& oracle_;
  NeAdaConfig config_;
  Vec x_, y_, gx_, step_x_;
  InnerState inner_;
  AveragerState ax_;
  double v_ = 0.0;
  std::int64_t t_ = 0;
  bool done_ = false;
  Trajectory traj_;
  std::chrono::steady_clock::time_point start_;
};

Trajectory nonnested_run(GradientOracle& oracle, const NonNestedConfig& config, Vec x0, Vec y0);
Trajectory neada_run(GradientOracle& oracle, const NeAdaConfig& config, Vec x0, Vec y_init);

}  // namespace neada
