#include "neada/subroutine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace neada {

Domain Domain::ball(double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ball radius must be > 0");
  Domain d;
  d.radius_ = radius;
  return d;
}

Domain Domain::box(double lo, double hi) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kInvalidArgument, "box needs finite lo <= hi");
  }
  Domain d;
  d.is_box_ = true;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

void Domain::project(MutSpan x) const {
  if (is_box_) {
    for (double& v : x) v = std::clamp(v, lo_, hi_);
    return;
  }
  if (!std::isfinite(radius_)) return;
  const double n = norm(x);
  if (n > radius_) {
    const double scale = radius_ / n;
    for (double& v : x) v *= scale;
  }
}

bool Domain::bounded() const { return is_box_ || std::isfinite(radius_); }

double Domain::diameter(std::size_t dim) const {
  if (is_box_) return (hi_ - lo_) * std::sqrt(static_cast<double>(dim));
  return 2.0 * radius_;
}

GenAdaGradState make_gen_adagrad(Vec x0, double eta, double alpha, double v0, Domain domain) {
  if (!(eta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be > 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1]");
  }
  if (!(v0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "v0 must be > 0");
  GenAdaGradState s;
  s.eta = eta;
  s.alpha = alpha;
  s.v = v0;
  s.x = std::move(x0);
  s.domain = domain;
  s.domain.project(s.x);
  return s;
}

void gen_adagrad_step(GenAdaGradState& state, ConstSpan g) {
  require_dim(g.size(), state.x.size(), "gradient");
  state.v += norm2(g);
  const double step = state.eta / std::pow(state.v, state.alpha);
  for (std::size_t i = 0; i < g.size(); ++i) state.x[i] -= step * g[i];
  state.domain.project(state.x);
}

std::string to_string(const StoppingCriterion& criterion) {
  struct Visitor {
    std::string operator()(const CriterionI&) const { return "i"; }
    std::string operator()(const CriterionII&) const { return "ii"; }
    std::string operator()(const GradOrCap&) const { return "grad-or-cap"; }
    std::string operator()(const FixedCap& c) const { return "fixed:" + std::to_string(c.k); }
  };
  return std::visit(Visitor{}, criterion);
}

StoppingCriterion parse_criterion(const std::string& text) {
  if (text == "i") return CriterionI{};
  if (text == "ii") return CriterionII{};
  if (text == "grad-or-cap") return GradOrCap{};
  if (text.rfind("fixed:", 0) == 0) {
    const std::string count = text.substr(6);
    std::size_t used = 0;
    long long k = -1;
    try {
      k = std::stoll(count, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != count.size() || count.empty() || k < 1) {
      throw Error(ErrorCode::kInvalidArgument, "bad fixed cap '" + text + "'");
    }
    return FixedCap{k};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown stopping criterion '" + text + "'");
}

bool criterion_needs_mapping(const StoppingCriterion& criterion) {
  return std::holds_alternative<CriterionI>(criterion) ||
         std::holds_alternative<GradOrCap>(criterion);
}

Verdict evaluate_criterion(const StoppingCriterion& criterion, std::int64_t outer_t,
                           std::int64_t iters, double mapping) {
  const double threshold = 1.0 / static_cast<double>(outer_t + 1);
  if (std::holds_alternative<CriterionI>(criterion)) {
    if (mapping * mapping <= threshold) return Verdict::kStop;
    if (iters >= kInnerIterationCap) return Verdict::kCapExceeded;
    return Verdict::kContinue;
  }
  if (std::holds_alternative<CriterionII>(criterion)) {
    return iters >= outer_t + 1 ? Verdict::kStop : Verdict::kContinue;
  }
  if (std::holds_alternative<GradOrCap>(criterion)) {
    return (mapping <= threshold || iters >= outer_t + 1) ? Verdict::kStop : Verdict::kContinue;
  }
  const auto& cap = std::get<FixedCap>(criterion);
  return iters >= cap.k ? Verdict::kStop : Verdict::kContinue;
}

InnerState make_inner_state(const InnerConfig& config, std::size_t dim_y) {
  InnerState s;
  s.config = config;
  reset_inner_state(s, dim_y);
  return s;
}

void reset_inner_state(InnerState& state, std::size_t dim_y) {
  const InnerConfig& c = state.config;
  if (c.kind == InnerKind::kGenAdaGrad) {
    state.gen = make_gen_adagrad(Vec(dim_y, 0.0), c.eta, c.alpha, c.v0, Domain::ball(c.radius));
  } else {
    if (!(c.eta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "inner eta must be > 0");
    state.avg = AveragerState(dim_y, c.psi, c.beta, c.v0);
  }
}

namespace {

// One ascent step of the configured learner on y with ascent direction g.
void ascend(const MinimaxProblem& problem, InnerState& state, Vec& y, ConstSpan g,
            std::span<const std::uint8_t> mask, Vec& scratch) {
  if (state.config.kind == InnerKind::kGenAdaGrad) {
    GenAdaGradState& gen = state.gen;
    gen.x = y;
    scratch.assign(g.begin(), g.end());
    for (double& v : scratch) v = -v;
    gen_adagrad_step(gen, scratch);
    y = gen.x;
  } else {
    state.avg.update(g, mask);
    scratch.resize(y.size());
    state.avg.effective_step(state.config.eta, scratch, mask);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += scratch[i];
  }
  problem.project_y(y);
}

}  // namespace

InnerResult inner_maximize(GradientOracle& oracle, ConstSpan x_fixed, Vec& y,
                           InnerState& state, const StoppingCriterion& criterion,
                           std::int64_t outer_t) {
  const MinimaxProblem& problem = oracle.problem();
  require_dim(x_fixed.size(), problem.dim_x(), "x");
  require_dim(y.size(), problem.dim_y(), "y");

  const bool needs_mapping = criterion_needs_mapping(criterion);
  const bool reuse = oracle.deterministic();
  Vec g(y.size());
  Vec scratch;
  Vec best_y;
  double best_mapping = std::numeric_limits<double>::infinity();
  InnerResult result;

  for (std::int64_t k = 0;; ++k) {
    bool have_g = false;
    double mapping = std::numeric_limits<double>::quiet_NaN();
    if (needs_mapping) {
      oracle.sample_grad_y(x_fixed, y, g);
      have_g = reuse;
      mapping = gradient_mapping_from(problem, y, g);
      result.last_mapping = mapping;
      if (std::holds_alternative<CriterionI>(criterion) && mapping < best_mapping) {
        best_mapping = mapping;
        best_y = y;
      }
    }
    const Verdict verdict = evaluate_criterion(criterion, outer_t, k, mapping);
    if (verdict == Verdict::kStop) {
      result.iters = k;
      return result;
    }
    if (verdict == Verdict::kCapExceeded) {
      result.iters = k;
      result.cap_exceeded = true;
      if (!best_y.empty()) y = best_y;
      return result;
    }
    if (!have_g) oracle.sample_grad_y(x_fixed, y, g);
    ascend(problem, state, y, g, oracle.y_mask(), scratch);
  }
}

namespace {

// Deterministic oracle over a bare problem, used by the metrics maximiser.
class ExactOracle final : public GradientOracle {
 public:
  explicit ExactOracle(const MinimaxProblem& p) : p_(p) {}
  const MinimaxProblem& problem() const override { return p_; }
  bool deterministic() const override { return true; }
  void sample_grads(ConstSpan x, ConstSpan y, MutSpan gx, MutSpan gy) override {
    p_.grad_x(x, y, gx);
    p_.grad_y(x, y, gy);
  }
  void sample_grad_y(ConstSpan x, ConstSpan y, MutSpan gy) override { p_.grad_y(x, y, gy); }
  void sample_grad_x(ConstSpan x, ConstSpan y, std::size_t, MutSpan gx) override {
    p_.grad_x(x, y, gx);
  }

 private:
  const MinimaxProblem& p_;
};

}  // namespace

Vec approx_y_star(const MinimaxProblem& problem, ConstSpan x, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol must be > 0");
  require_dim(x.size(), problem.dim_x(), "x");
  ExactOracle oracle(problem);
  InnerConfig cfg;  // generalized AdaGrad, alpha = 0.5, v0 = 1, eta = 1
  InnerState state = make_inner_state(cfg, problem.dim_y());
  Vec y = problem.projected_y(problem.y_reference());
  Vec g(y.size());
  Vec scratch;
  for (std::int64_t k = 0; k <= kInnerIterationCap; ++k) {
    problem.grad_y(x, y, g);
    if (gradient_mapping_from(problem, y, g) <= tol) return y;
    ascend(problem, state, y, g, {}, scratch);
  }
  throw Error(ErrorCode::kInnerOracleNonconvergent,
              "gradient mapping still above tolerance after 1e6 iterations");
}

double quadratic_stream_regret(const std::vector<Vec>& centers, const std::vector<Vec>& iterates,
                               const Domain& domain) {
  if (!domain.bounded()) {
    throw Error(ErrorCode::kCompactDomainRequired, "regret needs a compact comparator domain");
  }
  require_dim(iterates.size(), centers.size(), "iterate sequence");
  if (centers.empty()) return 0.0;
  const std::size_t dim = centers.front().size();
  Vec mean(dim, 0.0);
  double incurred = 0.0;
  for (std::size_t t = 0; t < centers.size(); ++t) {
    require_dim(centers[t].size(), dim, "center");
    require_dim(iterates[t].size(), dim, "iterate");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += centers[t][i];
    const double d = distance(iterates[t], centers[t]);
    incurred += 0.5 * d * d;
  }
  for (double& v : mean) v /= static_cast<double>(centers.size());
  // Sum_t 1/2||x - c_t||^2 = T/2 ||x - mean||^2 + const, so its minimiser over
  // a ball or box is the projection of the mean.
  domain.project(mean);
  double best = 0.0;
  for (const Vec& c : centers) {
    const double d = distance(mean, c);
    best += 0.5 * d * d;
  }
  return incurred - best;
}

namespace {

double golden_section(const std::function<double(double)>& f, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  double best = mid, fbest = f(mid);
  for (double cand : {lo, hi}) {
    const double fv = f(cand);
    if (fv < fbest) {
      fbest = fv;
      best = cand;
    }
  }
  return best;
}

}  // namespace

double regret(const std::vector<Loss>& losses, const std::vector<Vec>& iterates,
              const Domain& domain) {
  if (!domain.bounded()) {
    throw Error(ErrorCode::kCompactDomainRequired, "regret needs a compact comparator domain");
  }
  require_dim(iterates.size(), losses.size(), "iterate sequence");
  if (losses.empty()) return 0.0;
  const std::size_t dim = iterates.front().size();

  double incurred = 0.0;
  for (std::size_t t = 0; t < losses.size(); ++t) incurred += losses[t](iterates[t]);

  auto total = [&](ConstSpan x) {
    double s = 0.0;
    for (const Loss& f : losses) s += f(x);
    return s;
  };

  // Cyclic golden-section coordinate search; exact in one dimension and
  // adequate for the smooth convex sums this is used on.
  Vec x(dim, 0.0);
  domain.project(x);
  double lo = domain.is_box() ? domain.lo() : -domain.radius();
  double hi = domain.is_box() ? domain.hi() : domain.radius();
  const int sweeps = dim == 1 ? 1 : 50;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < dim; ++i) {
      Vec probe = x;
      auto along = [&](double v) {
        probe[i] = v;
        Vec p = probe;
        domain.project(p);
        return total(p);
      };
      x[i] = golden_section(along, lo, hi);
      domain.project(x);
    }
  }
  return incurred - total(x);
}

}  // namespace neada
