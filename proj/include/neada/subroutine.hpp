#pragma once

// Inner maximisers (generalized AdaGrad and the psi averagers) together with
// the stopping criteria of the nested framework.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <variant>

#include "neada/averagers.hpp"
#include "neada/core.hpp"

namespace neada {

// Compact convex set for the online learner: a centred Euclidean ball or a
// box. A ball with infinite radius is the unbounded whole space.
class Domain {
 public:
  static Domain ball(double radius);
  static Domain box(double lo, double hi);
  static Domain whole_space() { return ball(std::numeric_limits<double>::infinity()); }

  void project(MutSpan x) const;
  bool bounded() const;
  double diameter(std::size_t dim) const;
  bool is_box() const { return is_box_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double radius() const { return radius_; }

 private:
  bool is_box_ = false;
  double radius_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

// Stepsize eta / v^alpha with v accumulating squared gradient norms.
struct GenAdaGradState {
  double eta = 1.0;
  double alpha = 0.5;
  double v = 1.0;
  Vec x;
  Domain domain = Domain::whole_space();
};

GenAdaGradState make_gen_adagrad(Vec x0, double eta, double alpha, double v0, Domain domain);

// Descent step: v += ||g||^2; x <- P(x - eta / v^alpha * g).
void gen_adagrad_step(GenAdaGradState& state, ConstSpan g);

struct CriterionI {};                // squared gradient mapping <= 1/(t+1)
struct CriterionII {};               // exactly t+1 inner iterations
struct GradOrCap {};                 // mapping <= 1/(t+1) or t+1 iterations
struct FixedCap { std::int64_t k = 15; };

using StoppingCriterion = std::variant<CriterionI, CriterionII, GradOrCap, FixedCap>;

std::string to_string(const StoppingCriterion& criterion);
// "i", "ii", "grad-or-cap", "fixed:<k>".
StoppingCriterion parse_criterion(const std::string& text);

inline constexpr std::int64_t kInnerIterationCap = 1000000;

enum class Verdict { kContinue, kStop, kCapExceeded };

// Pure decision for outer index t after `iters` inner iterations. `mapping`
// is ignored by the count-based criteria.
Verdict evaluate_criterion(const StoppingCriterion& criterion, std::int64_t outer_t,
                           std::int64_t iters, double mapping);
bool criterion_needs_mapping(const StoppingCriterion& criterion);

enum class InnerKind { kGenAdaGrad, kAveraged };

struct InnerConfig {
  InnerKind kind = InnerKind::kGenAdaGrad;
  double eta = 1.0;
  // generalized AdaGrad
  double alpha = 0.5;
  double v0 = 1.0;
  double radius = 1e6;
  // per-coordinate averager
  PsiVariant psi = PsiVariant::adagrad();
  double beta = 0.0;
  bool cold_start = false;
};

// Learner state carried across outer iterations (warm start).
struct InnerState {
  InnerConfig config;
  GenAdaGradState gen;
  AveragerState avg;
};

InnerState make_inner_state(const InnerConfig& config, std::size_t dim_y);
// Forgets accumulated statistics, keeps the configuration.
void reset_inner_state(InnerState& state, std::size_t dim_y);

struct InnerResult {
  std::int64_t iters = 0;
  bool cap_exceeded = false;
  double last_mapping = std::numeric_limits<double>::quiet_NaN();
};

// Ascends f(x_fixed, .) from y until the criterion fires. y is updated in
// place. Gradients come from the oracle: deterministic ones are reused for
// the following step, stochastic ones are resampled for every check.
InnerResult inner_maximize(GradientOracle& oracle, ConstSpan x_fixed, Vec& y,
                           InnerState& state, const StoppingCriterion& criterion,
                           std::int64_t outer_t);

// Metrics-only high-accuracy maximiser (never used inside the drivers).
Vec approx_y_star(const MinimaxProblem& problem, ConstSpan x, double tol);

using Loss = std::function<double(ConstSpan)>;

// Sum_t f_t(x_t) - min_{x in domain} Sum_t f_t(x). The comparator is found by
// golden-section search for one-dimensional boxes and by a projected
// gradient-free coordinate search otherwise.
double regret(const std::vector<Loss>& losses, const std::vector<Vec>& iterates,
              const Domain& domain);

// Same for the stream f_t(x) = 1/2 ||x - c_t||^2, whose comparator is the
// projected mean of the centres.
double quadratic_stream_regret(const std::vector<Vec>& centers, const std::vector<Vec>& iterates,
                               const Domain& domain);

}  // namespace neada
