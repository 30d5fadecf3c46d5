#include "neada/drivers.hpp"

#include <cmath>
#include <numeric>

namespace neada {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  const auto d = std::chrono::steady_clock::now() - start;
  return std::chrono::duration<double, std::milli>(d).count();
}

double mean_of(const Vec& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_start(const MinimaxProblem& p, const Vec& x0, const Vec& y0) {
  require_dim(x0.size(), p.dim_x(), "x0");
  require_dim(y0.size(), p.dim_y(), "y0");
}

}  // namespace

NonNestedRunner::NonNestedRunner(GradientOracle& oracle, const NonNestedConfig& config, Vec x0,
                                 Vec y0)
    : oracle_(oracle), config_(config), x_(std::move(x0)), y_(std::move(y0)) {
  const MinimaxProblem& p = oracle_.problem();
  check_start(p, x_, y_);
  if (!(config_.eta_x > 0.0) || !(config_.eta_y > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rates must be > 0");
  }
  if (config_.steps < 0) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 0");
  if (config_.record_every < 1) config_.record_every = 1;
  p.project_y(y_);
  ax_ = AveragerState(p.dim_x(), config_.psi_x, config_.beta_x, config_.v0_x);
  ay_ = AveragerState(p.dim_y(), config_.psi_y, config_.beta_y, config_.v0_y);
  gx_.resize(p.dim_x());
  step_x_.resize(p.dim_x());
  gy_.resize(p.dim_y());
  step_y_.resize(p.dim_y());
  start_ = std::chrono::steady_clock::now();
}

void NonNestedRunner::record() {
  TrajectoryRow row;
  row.outer_t = t_;
  row.x = x_;
  row.y = y_;
  fill_metrics(oracle_.problem(), row, config_.approx_tol);
  row.v_outer = mean_of(ax_.denominator());
  row.inner_iters = 0;
  row.oracle_calls_x = oracle_.calls_x();
  row.oracle_calls_y = oracle_.calls_y();
  row.wall_ms = elapsed_ms(start_);
  traj_.rows.push_back(std::move(row));
}

bool NonNestedRunner::step() {
  if (done_) return false;
  if (t_ >= config_.steps) {
    record();
    done_ = true;
    return false;
  }
  if (t_ % config_.record_every == 0) record();

  oracle_.begin_outer_step();
  oracle_.sample_grads(x_, y_, gx_, gy_);
  const auto mask = oracle_.y_mask();
  ax_.update(gx_);
  ay_.update(gy_, mask);
  ax_.effective_step(config_.eta_x, step_x_);
  ay_.effective_step(config_.eta_y, step_y_, mask);
  for (std::size_t i = 0; i < x_.size(); ++i) x_[i] -= step_x_[i];
  for (std::size_t i = 0; i < y_.size(); ++i) y_[i] += step_y_[i];
  oracle_.problem().project_y(y_);
  ++t_;

  if (!all_finite(x_) || !all_finite(y_)) {
    traj_.status = RunStatus::kDivergedNonfinite;
    done_ = true;
    return false;
  }
  return true;
}

Trajectory NonNestedRunner::run() {
  while (step()) {
  }
  return take_trajectory();
}

NeAdaRunner::NeAdaRunner(GradientOracle& oracle, const NeAdaConfig& config, Vec x0, Vec y_init)
    : oracle_(oracle), config_(config), x_(std::move(x0)), y_(std::move(y_init)) {
  const MinimaxProblem& p = oracle_.problem();
  check_start(p, x_, y_);
  if (!(config_.eta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be > 0");
  if (config_.batch < 1) throw Error(ErrorCode::kInvalidArgument, "batch must be >= 1");
  if (config_.outer_steps < 0) throw Error(ErrorCode::kInvalidArgument, "outer steps must be >= 0");
  if (config_.record_every < 1) config_.record_every = 1;
  if (config_.outer == OuterKind::kScalarAdaGrad) {
    if (!(config_.v0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "v0 must be > 0");
    v_ = config_.v0;
  } else {
    ax_ = AveragerState(p.dim_x(), config_.psi_x, config_.beta_x, config_.v0_x);
  }
  p.project_y(y_);
  inner_ = make_inner_state(config_.inner, p.dim_y());
  gx_.resize(p.dim_x());
  step_x_.resize(p.dim_x());
  start_ = std::chrono::steady_clock::now();
}

bool NeAdaRunner::step() {
  if (done_) return false;
  const std::uint64_t used = oracle_.calls_x() + oracle_.calls_y();
  if (t_ >= config_.outer_steps || (config_.max_oracle_calls > 0 && used >= config_.max_oracle_calls)) {
    done_ = true;
    return false;
  }
  const MinimaxProblem& p = oracle_.problem();

  oracle_.begin_outer_step();
  if (config_.inner.cold_start && t_ > 0) reset_inner_state(inner_, p.dim_y());
  const InnerResult inner = inner_maximize(oracle_, x_, y_, inner_, config_.criterion, t_);
  if (inner.cap_exceeded) {
    ++traj_.inner_cap_hits;
    if (traj_.status == RunStatus::kOk) traj_.status = RunStatus::kInnerCapExceeded;
  }
  if (!all_finite(y_)) {
    traj_.status = RunStatus::kDivergedNonfinite;
    done_ = true;
    return false;
  }

  // The step that exhausts the oracle budget is the last one; keep its row.
  const bool budget_spent =
      config_.max_oracle_calls > 0 &&
      oracle_.calls_x() + oracle_.calls_y() + static_cast<std::uint64_t>(config_.batch) >=
          config_.max_oracle_calls;
  const bool recording =
      t_ % config_.record_every == 0 || t_ + 1 == config_.outer_steps || budget_spent;
  TrajectoryRow row;
  if (recording) {
    row.outer_t = t_;
    row.x = x_;
    row.y = y_;
    row.inner_iters = inner.iters;
    row.oracle_calls_x = oracle_.calls_x();
    row.oracle_calls_y = oracle_.calls_y();
  }

  oracle_.sample_grad_x(x_, y_, static_cast<std::size_t>(config_.batch), gx_);
  if (config_.outer == OuterKind::kScalarAdaGrad) {
    v_ += norm2(gx_);
    const double s = config_.eta / std::sqrt(v_);
    for (std::size_t i = 0; i < x_.size(); ++i) x_[i] -= s * gx_[i];
  } else {
    ax_.update(gx_);
    ax_.effective_step(config_.eta, step_x_);
    for (std::size_t i = 0; i < x_.size(); ++i) x_[i] -= step_x_[i];
  }

  if (recording) {
    fill_metrics(p, row, config_.approx_tol);
    row.v_outer = config_.outer == OuterKind::kScalarAdaGrad ? v_ : mean_of(ax_.denominator());
    row.wall_ms = elapsed_ms(start_);
    traj_.rows.push_back(std::move(row));
  }
  ++t_;

  if (!all_finite(x_)) {
    traj_.status = RunStatus::kDivergedNonfinite;
    done_ = true;
    return false;
  }
  return true;
}

Trajectory NeAdaRunner::run() {
  while (step()) {
  }
  return take_trajectory();
}

Trajectory nonnested_run(GradientOracle& oracle, const NonNestedConfig& config, Vec x0, Vec y0) {
  return NonNestedRunner(oracle, config, std::move(x0), std::move(y0)).run();
}

Trajectory neada_run(GradientOracle& oracle, const NeAdaConfig& config, Vec x0, Vec y_init) {
  return NeAdaRunner(oracle, config, std::move(x0), std::move(y_init)).run();
}

}  // namespace neada
