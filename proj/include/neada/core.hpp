#pragma once

// Problem oracles, stochastic gradient oracles, seeded randomness and
// trajectory records shared by every driver.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace neada {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

enum class ErrorCode {
  kInvalidArgument,
  kShapeError,
  kStationarityUnavailable,
  kInnerOracleNonconvergent,
  kCompactDomainRequired,
  kLogDomainError,
  kIoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

void require_dim(std::size_t got, std::size_t want, const char* what);

// Small dense helpers.
double dot(ConstSpan a, ConstSpan b);
double norm2(ConstSpan a);
double norm(ConstSpan a);
double distance(ConstSpan a, ConstSpan b);
bool all_finite(ConstSpan a);

// Identifier of the pinned random stream; written into run metadata.
inline constexpr const char* kRngId = "mt19937_64+polar-normal/v1";

// mt19937_64 is fully specified by the standard, unlike the distribution
// adaptors, so uniforms, normals and index draws are derived by hand here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  double normal();
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// f(x, y) to be minimised in x and maximised in y over a closed convex Y.
class MinimaxProblem {
 public:
  virtual ~MinimaxProblem() = default;

  virtual std::size_t dim_x() const = 0;
  virtual std::size_t dim_y() const = 0;
  virtual double value(ConstSpan x, ConstSpan y) const = 0;
  virtual void grad_x(ConstSpan x, ConstSpan y, MutSpan out) const = 0;
  virtual void grad_y(ConstSpan x, ConstSpan y, MutSpan out) const = 0;

  // Euclidean projection onto Y, in place. Default Y = R^dim_y.
  virtual void project_y(MutSpan y) const { (void)y; }
  virtual bool y_unconstrained() const { return true; }

  // argmax_y f(x, .) when known in closed form.
  virtual std::optional<Vec> y_star(ConstSpan x) const {
    (void)x;
    return std::nullopt;
  }
  virtual std::optional<double> smoothness() const { return std::nullopt; }
  virtual std::optional<double> strong_concavity() const { return std::nullopt; }

  // Starting point for the metrics-only maximiser.
  virtual Vec y_reference() const { return Vec(dim_y(), 0.0); }

  Vec grad_x(ConstSpan x, ConstSpan y) const;
  Vec grad_y(ConstSpan x, ConstSpan y) const;
  Vec projected_y(ConstSpan y) const;
};

// ||y - P_Y(y + grad_y f(x, y))||.
double gradient_mapping(const MinimaxProblem& problem, ConstSpan x, ConstSpan y);
double gradient_mapping_from(const MinimaxProblem& problem, ConstSpan y, ConstSpan g);

struct Stationarity {
  double grad_x_norm = 0.0;
  double dist_y = 0.0;
};

// When the problem has no closed-form y*, `approx_tol` > 0 enables the
// brute-force maximiser from the subroutine module; 0 disables it.
Stationarity stationarity(const MinimaxProblem& problem, ConstSpan x, ConstSpan y,
                          double approx_tol = 0.0);

// Gradient oracle consumed by the drivers. Every gradient request is counted.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  virtual const MinimaxProblem& problem() const = 0;
  virtual bool deterministic() const = 0;

  // Called once at the start of every outer iteration.
  virtual void begin_outer_step() {}

  // Both gradients from one shared sample.
  virtual void sample_grads(ConstSpan x, ConstSpan y, MutSpan gx, MutSpan gy) = 0;
  virtual void sample_grad_y(ConstSpan x, ConstSpan y, MutSpan gy) = 0;
  // Mean of `batch` i.i.d. x-gradients.
  virtual void sample_grad_x(ConstSpan x, ConstSpan y, std::size_t batch, MutSpan gx) = 0;

  // Coordinates of y the current sample can touch; empty means all of them.
  virtual std::span<const std::uint8_t> y_mask() const { return {}; }

  std::uint64_t calls_x() const { return calls_x_; }
  std::uint64_t calls_y() const { return calls_y_; }

 protected:
  std::uint64_t calls_x_ = 0;
  std::uint64_t calls_y_ = 0;
};

// Base problem gradients plus i.i.d. isotropic Gaussian noise of standard
// deviation sigma on every coordinate, fresh for every call.
class NoisyOracle final : public GradientOracle {
 public:
  NoisyOracle(const MinimaxProblem& problem, double sigma, std::uint64_t seed);

  const MinimaxProblem& problem() const override { return problem_; }
  bool deterministic() const override { return sigma_ == 0.0; }
  double sigma() const { return sigma_; }

  void sample_grads(ConstSpan x, ConstSpan y, MutSpan gx, MutSpan gy) override;
  void sample_grad_y(ConstSpan x, ConstSpan y, MutSpan gy) override;
  void sample_grad_x(ConstSpan x, ConstSpan y, std::size_t batch, MutSpan gx) override;

 private:
  void add_noise(MutSpan g, double scale);

  const MinimaxProblem& problem_;
  double sigma_;
  Rng rng_;
};

enum class RunStatus { kOk, kInnerCapExceeded, kDivergedNonfinite };
const char* to_string(RunStatus status);

struct TrajectoryRow {
  std::int64_t outer_t = 0;
  Vec x;
  Vec y;
  double grad_x_norm = 0.0;
  double grad_map_y = 0.0;
  double dist_y_star = 0.0;   // NaN when y* is unavailable
  double stationarity = 0.0;  // max(grad_x_norm, dist_y_star)
  double value = 0.0;
  double v_outer = 0.0;
  std::int64_t inner_iters = 0;
  std::uint64_t oracle_calls_x = 0;
  std::uint64_t oracle_calls_y = 0;
  double wall_ms = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  RunStatus status = RunStatus::kOk;
  std::uint64_t inner_cap_hits = 0;
};

// Fills the metric columns of `row` from the exact problem oracle.
void fill_metrics(const MinimaxProblem& problem, TrajectoryRow& row, double approx_tol);

}  // namespace neada
