#include "neada/neada.h"

#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "neada/analysis.hpp"
#include "neada/core.hpp"
#include "neada/drivers.hpp"
#include "neada/nn_dro.hpp"
#include "neada/problems.hpp"
#include "neada/subroutine.hpp"

struct neada_problem {
  std::unique_ptr<neada::MinimaxProblem> impl;
  const neada::DroProblem* dro = nullptr;
};

struct neada_oracle {
  std::unique_ptr<neada::GradientOracle> impl;
};

struct neada_trajectory {
  neada::Trajectory impl;
};

struct neada_dataset {
  neada::Dataset impl;
};

struct neada_genadagrad {
  neada::GenAdaGradState impl;
};

struct neada_dro_result {
  neada::DroTrainResult impl;
  neada_trajectory trajectory;
  std::size_t n_eps = 0;
};

namespace {

thread_local std::string g_last_error;

neada_status map_code(neada::ErrorCode code) {
  switch (code) {
    case neada::ErrorCode::kInvalidArgument: return NEADA_ERR_INVALID_ARGUMENT;
    case neada::ErrorCode::kShapeError: return NEADA_ERR_SHAPE;
    case neada::ErrorCode::kStationarityUnavailable: return NEADA_ERR_STATIONARITY_UNAVAILABLE;
    case neada::ErrorCode::kInnerOracleNonconvergent: return NEADA_ERR_INNER_NONCONVERGENT;
    case neada::ErrorCode::kCompactDomainRequired: return NEADA_ERR_COMPACT_DOMAIN_REQUIRED;
    case neada::ErrorCode::kLogDomainError: return NEADA_ERR_LOG_DOMAIN;
    case neada::ErrorCode::kIoError: return NEADA_ERR_IO;
  }
  return NEADA_ERR_INTERNAL;
}

neada_status fail(neada_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
neada_status guarded(F&& body) {
  try {
    body();
    return NEADA_OK;
  } catch (const neada::Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NEADA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NEADA_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw neada::Error(neada::ErrorCode::kInvalidArgument, what);
}

neada::ConstSpan cspan(const double* p, std::size_t n) { return {p, n}; }
neada::MutSpan mspan(double* p, std::size_t n) { return {p, n}; }

neada::PsiVariant to_psi(const neada_psi_spec& s) {
  switch (s.kind) {
    case NEADA_PSI_GDA: return neada::PsiVariant::gda();
    case NEADA_PSI_ADAGRAD: return neada::PsiVariant::adagrad();
    case NEADA_PSI_ADAM: return neada::PsiVariant::adam(s.gamma);
    case NEADA_PSI_AMSGRAD: return neada::PsiVariant::amsgrad(s.gamma);
  }
  throw neada::Error(neada::ErrorCode::kInvalidArgument, "unknown psi kind");
}

neada::StoppingCriterion to_criterion(const neada_criterion& c) {
  switch (c.kind) {
    case NEADA_CRITERION_I: return neada::CriterionI{};
    case NEADA_CRITERION_II: return neada::CriterionII{};
    case NEADA_CRITERION_GRAD_OR_CAP: return neada::GradOrCap{};
    case NEADA_CRITERION_FIXED_CAP:
      require(c.cap >= 1, "fixed criterion needs cap >= 1");
      return neada::FixedCap{c.cap};
  }
  throw neada::Error(neada::ErrorCode::kInvalidArgument, "unknown stopping criterion");
}

neada::Domain to_domain(const neada_domain* d) {
  if (d == nullptr) return neada::Domain::whole_space();
  return d->is_box ? neada::Domain::box(d->lo, d->hi) : neada::Domain::ball(d->radius);
}

neada::NonNestedConfig to_nonnested(const neada_nonnested_config& c) {
  neada::NonNestedConfig out;
  out.eta_x = c.eta_x;
  out.eta_y = c.eta_y;
  out.beta_x = c.beta_x;
  out.beta_y = c.beta_y;
  out.psi_x = to_psi(c.psi_x);
  out.psi_y = to_psi(c.psi_y);
  out.v0_x = c.v0_x;
  out.v0_y = c.v0_y;
  out.steps = c.steps;
  out.record_every = c.record_every;
  out.approx_tol = c.approx_tol;
  return out;
}

neada::NeAdaConfig to_neada(const neada_neada_config& c) {
  neada::NeAdaConfig out;
  switch (c.outer) {
    case NEADA_OUTER_SCALAR_ADAGRAD: out.outer = neada::OuterKind::kScalarAdaGrad; break;
    case NEADA_OUTER_AVERAGED: out.outer = neada::OuterKind::kAveraged; break;
    default: throw neada::Error(neada::ErrorCode::kInvalidArgument, "unknown outer kind");
  }
  out.eta = c.eta;
  out.v0 = c.v0;
  out.psi_x = to_psi(c.psi_x);
  out.beta_x = c.beta_x;
  out.v0_x = c.v0_x;
  out.batch = c.batch;
  out.criterion = to_criterion(c.criterion);
  switch (c.inner.kind) {
    case NEADA_INNER_GEN_ADAGRAD: out.inner.kind = neada::InnerKind::kGenAdaGrad; break;
    case NEADA_INNER_AVERAGED: out.inner.kind = neada::InnerKind::kAveraged; break;
    default: throw neada::Error(neada::ErrorCode::kInvalidArgument, "unknown inner kind");
  }
  out.inner.eta = c.inner.eta;
  out.inner.alpha = c.inner.alpha;
  out.inner.v0 = c.inner.v0;
  out.inner.radius = c.inner.radius;
  out.inner.psi = to_psi(c.inner.psi);
  out.inner.beta = c.inner.beta;
  out.inner.cold_start = c.inner.cold_start != 0;
  out.outer_steps = c.outer_steps;
  out.max_oracle_calls = c.max_oracle_calls;
  out.record_every = c.record_every;
  out.approx_tol = c.approx_tol;
  return out;
}

neada_run_status to_run_status(neada::RunStatus s) {
  switch (s) {
    case neada::RunStatus::kOk: return NEADA_RUN_OK;
    case neada::RunStatus::kInnerCapExceeded: return NEADA_RUN_INNER_CAP_EXCEEDED;
    case neada::RunStatus::kDivergedNonfinite: return NEADA_RUN_DIVERGED_NONFINITE;
  }
  return NEADA_RUN_OK;
}

neada::MlpArch to_arch(const std::size_t* sizes, std::size_t n) {
  require(sizes != nullptr && n >= 2, "network needs at least two layer sizes");
  return neada::MlpArch(std::vector<std::size_t>(sizes, sizes + n));
}

}  // namespace

extern "C" {

const char* neada_status_string(neada_status status) {
  switch (status) {
    case NEADA_OK: return "ok";
    case NEADA_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case NEADA_ERR_SHAPE: return "shape-error";
    case NEADA_ERR_STATIONARITY_UNAVAILABLE: return "stationarity-unavailable";
    case NEADA_ERR_INNER_NONCONVERGENT: return "inner-oracle-nonconvergent";
    case NEADA_ERR_COMPACT_DOMAIN_REQUIRED: return "compact-domain-required";
    case NEADA_ERR_LOG_DOMAIN: return "log-domain-error";
    case NEADA_ERR_IO: return "io-error";
    case NEADA_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* neada_last_error(void) { return g_last_error.c_str(); }
const char* neada_version(void) { return "1.0.0"; }
const char* neada_rng_id(void) { return neada::kRngId; }

// ---- problems

neada_status neada_problem_quadratic(double L, neada_problem** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    auto p = std::make_unique<neada_problem>();
    p->impl = neada::make_quadratic(L);
    *out = p.release();
  });
}

neada_status neada_problem_mccormick(neada_problem** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    auto p = std::make_unique<neada_problem>();
    p->impl = neada::make_mccormick();
    *out = p.release();
  });
}

neada_status neada_problem_dro(const neada_dataset* data, double gamma,
                               const size_t* layer_sizes, size_t n_layers,
                               neada_problem** out) {
  return guarded([&] {
    require(data != nullptr && out != nullptr, "null argument");
    auto dro = neada::make_dro_problem(data->impl, gamma, to_arch(layer_sizes, n_layers));
    auto p = std::make_unique<neada_problem>();
    p->dro = dro.get();
    p->impl = std::move(dro);
    *out = p.release();
  });
}

void neada_problem_free(neada_problem* problem) { delete problem; }

size_t neada_problem_dim_x(const neada_problem* problem) {
  return problem ? problem->impl->dim_x() : 0;
}

size_t neada_problem_dim_y(const neada_problem* problem) {
  return problem ? problem->impl->dim_y() : 0;
}

neada_status neada_problem_value(const neada_problem* problem, const double* x,
                                 const double* y, double* out) {
  return guarded([&] {
    require(problem && x && y && out, "null argument");
    const auto& p = *problem->impl;
    *out = p.value(cspan(x, p.dim_x()), cspan(y, p.dim_y()));
  });
}

neada_status neada_problem_grad_x(const neada_problem* problem, const double* x,
                                  const double* y, double* out) {
  return guarded([&] {
    require(problem && x && y && out, "null argument");
    const auto& p = *problem->impl;
    p.grad_x(cspan(x, p.dim_x()), cspan(y, p.dim_y()), mspan(out, p.dim_x()));
  });
}

neada_status neada_problem_grad_y(const neada_problem* problem, const double* x,
                                  const double* y, double* out) {
  return guarded([&] {
    require(problem && x && y && out, "null argument");
    const auto& p = *problem->impl;
    p.grad_y(cspan(x, p.dim_x()), cspan(y, p.dim_y()), mspan(out, p.dim_y()));
  });
}

neada_status neada_problem_y_star(const neada_problem* problem, const double* x, double* out) {
  return guarded([&] {
    require(problem && x && out, "null argument");
    const auto& p = *problem->impl;
    auto ys = p.y_star(cspan(x, p.dim_x()));
    if (!ys) {
      throw neada::Error(neada::ErrorCode::kStationarityUnavailable,
                         "problem has no closed-form maximiser");
    }
    std::copy(ys->begin(), ys->end(), out);
  });
}

neada_status neada_problem_gradient_mapping(const neada_problem* problem, const double* x,
                                            const double* y, double* out) {
  return guarded([&] {
    require(problem && x && y && out, "null argument");
    const auto& p = *problem->impl;
    *out = neada::gradient_mapping(p, cspan(x, p.dim_x()), cspan(y, p.dim_y()));
  });
}

neada_status neada_problem_stationarity(const neada_problem* problem, const double* x,
                                        const double* y, double approx_tol,
                                        double* grad_x_norm, double* dist_y) {
  return guarded([&] {
    require(problem && x && y, "null argument");
    const auto& p = *problem->impl;
    auto s = neada::stationarity(p, cspan(x, p.dim_x()), cspan(y, p.dim_y()), approx_tol);
    if (grad_x_norm) *grad_x_norm = s.grad_x_norm;
    if (dist_y) *dist_y = s.dist_y;
  });
}

neada_status neada_approx_y_star(const neada_problem* problem, const double* x, double tol,
                                 double* out) {
  return guarded([&] {
    require(problem && x && out, "null argument");
    const auto& p = *problem->impl;
    auto ys = neada::approx_y_star(p, cspan(x, p.dim_x()), tol);
    std::copy(ys.begin(), ys.end(), out);
  });
}

// ---- oracles

neada_status neada_oracle_noisy(const neada_problem* problem, double sigma, uint64_t seed,
                                neada_oracle** out) {
  return guarded([&] {
    require(problem && out, "null argument");
    auto o = std::make_unique<neada_oracle>();
    o->impl = neada::add_noise(*problem->impl, neada::NoiseSpec{sigma}, seed);
    *out = o.release();
  });
}

neada_status neada_oracle_dro_minibatch(const neada_problem* problem, size_t batch,
                                        uint64_t seed, neada_oracle** out) {
  return guarded([&] {
    require(problem && out, "null argument");
    require(problem->dro != nullptr, "minibatch oracle needs a DRO problem");
    auto o = std::make_unique<neada_oracle>();
    o->impl = std::make_unique<neada::DroMinibatchOracle>(*problem->dro, batch, seed);
    *out = o.release();
  });
}

void neada_oracle_free(neada_oracle* oracle) { delete oracle; }

neada_status neada_oracle_sample_grads(neada_oracle* oracle, const double* x, const double* y,
                                       double* gx, double* gy) {
  return guarded([&] {
    require(oracle && x && y && gx && gy, "null argument");
    const auto& p = oracle->impl->problem();
    oracle->impl->sample_grads(cspan(x, p.dim_x()), cspan(y, p.dim_y()), mspan(gx, p.dim_x()),
                               mspan(gy, p.dim_y()));
  });
}

neada_status neada_oracle_sample_grad_x(neada_oracle* oracle, const double* x, const double* y,
                                        size_t batch, double* gx) {
  return guarded([&] {
    require(oracle && x && y && gx, "null argument");
    const auto& p = oracle->impl->problem();
    oracle->impl->sample_grad_x(cspan(x, p.dim_x()), cspan(y, p.dim_y()), batch,
                                mspan(gx, p.dim_x()));
  });
}

uint64_t neada_oracle_calls_x(const neada_oracle* oracle) {
  return oracle ? oracle->impl->calls_x() : 0;
}

uint64_t neada_oracle_calls_y(const neada_oracle* oracle) {
  return oracle ? oracle->impl->calls_y() : 0;
}

// ---- configs and runs

void neada_nonnested_config_default(neada_nonnested_config* c) {
  if (!c) return;
  const neada::NonNestedConfig d;
  c->eta_x = d.eta_x;
  c->eta_y = d.eta_y;
  c->beta_x = d.beta_x;
  c->beta_y = d.beta_y;
  c->psi_x = {NEADA_PSI_GDA, 0.999};
  c->psi_y = {NEADA_PSI_GDA, 0.999};
  c->v0_x = d.v0_x;
  c->v0_y = d.v0_y;
  c->steps = d.steps;
  c->record_every = d.record_every;
  c->approx_tol = d.approx_tol;
}

void neada_neada_config_default(neada_neada_config* c) {
  if (!c) return;
  const neada::NeAdaConfig d;
  c->outer = NEADA_OUTER_SCALAR_ADAGRAD;
  c->eta = d.eta;
  c->v0 = d.v0;
  c->psi_x = {NEADA_PSI_ADAGRAD, 0.999};
  c->beta_x = d.beta_x;
  c->v0_x = d.v0_x;
  c->batch = d.batch;
  c->criterion = {NEADA_CRITERION_I, 0};
  c->inner.kind = NEADA_INNER_GEN_ADAGRAD;
  c->inner.eta = d.inner.eta;
  c->inner.alpha = d.inner.alpha;
  c->inner.v0 = d.inner.v0;
  c->inner.radius = d.inner.radius;
  c->inner.psi = {NEADA_PSI_ADAGRAD, 0.999};
  c->inner.beta = d.inner.beta;
  c->inner.cold_start = 0;
  c->outer_steps = d.outer_steps;
  c->max_oracle_calls = d.max_oracle_calls;
  c->record_every = d.record_every;
  c->approx_tol = d.approx_tol;
}

neada_status neada_run_nonnested(neada_oracle* oracle, const neada_nonnested_config* config,
                                 const double* x0, const double* y0, neada_trajectory** out) {
  return guarded([&] {
    require(oracle && config && x0 && y0 && out, "null argument");
    const auto& p = oracle->impl->problem();
    auto t = std::make_unique<neada_trajectory>();
    t->impl = neada::nonnested_run(*oracle->impl, to_nonnested(*config),
                                   neada::Vec(x0, x0 + p.dim_x()),
                                   neada::Vec(y0, y0 + p.dim_y()));
    *out = t.release();
  });
}

neada_status neada_run_neada(neada_oracle* oracle, const neada_neada_config* config,
                             const double* x0, const double* y_init, neada_trajectory** out) {
  return guarded([&] {
    require(oracle && config && x0 && y_init && out, "null argument");
    const auto& p = oracle->impl->problem();
    auto t = std::make_unique<neada_trajectory>();
    t->impl = neada::neada_run(*oracle->impl, to_neada(*config), neada::Vec(x0, x0 + p.dim_x()),
                               neada::Vec(y_init, y_init + p.dim_y()));
    *out = t.release();
  });
}

void neada_trajectory_free(neada_trajectory* trajectory) { delete trajectory; }

size_t neada_trajectory_size(const neada_trajectory* trajectory) {
  return trajectory ? trajectory->impl.rows.size() : 0;
}

neada_run_status neada_trajectory_status(const neada_trajectory* trajectory) {
  return trajectory ? to_run_status(trajectory->impl.status) : NEADA_RUN_OK;
}

uint64_t neada_trajectory_inner_cap_hits(const neada_trajectory* trajectory) {
  return trajectory ? trajectory->impl.inner_cap_hits : 0;
}

neada_status neada_trajectory_row(const neada_trajectory* trajectory, size_t index,
                                  neada_row* out) {
  return guarded([&] {
    require(trajectory && out, "null argument");
    require(index < trajectory->impl.rows.size(), "row index out of range");
    const auto& r = trajectory->impl.rows[index];
    out->outer_t = r.outer_t;
    out->inner_iters = r.inner_iters;
    out->oracle_calls_x = r.oracle_calls_x;
    out->oracle_calls_y = r.oracle_calls_y;
    out->grad_x_norm = r.grad_x_norm;
    out->grad_map_y = r.grad_map_y;
    out->dist_y_star = r.dist_y_star;
    out->stationarity = r.stationarity;
    out->value = r.value;
    out->v_outer = r.v_outer;
    out->wall_ms = r.wall_ms;
  });
}

namespace {

neada_status copy_iterate(const neada_trajectory* trajectory, size_t index, double* out,
                          size_t len, bool want_x) {
  return guarded([&] {
    require(trajectory && out, "null argument");
    require(index < trajectory->impl.rows.size(), "row index out of range");
    const auto& v = want_x ? trajectory->impl.rows[index].x : trajectory->impl.rows[index].y;
    neada::require_dim(len, v.size(), want_x ? "x buffer" : "y buffer");
    std::copy(v.begin(), v.end(), out);
  });
}

}  // namespace

neada_status neada_trajectory_x(const neada_trajectory* trajectory, size_t index, double* out,
                                size_t len) {
  return copy_iterate(trajectory, index, out, len, true);
}

neada_status neada_trajectory_y(const neada_trajectory* trajectory, size_t index, double* out,
                                size_t len) {
  return copy_iterate(trajectory, index, out, len, false);
}

// ---- analysis

neada_status neada_lemma1_gda_predict(double L, double r, double eta_x, double grad0, int64_t T,
                                      double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = neada::lemma1_gda_predict(L, r, eta_x, grad0, T);
  });
}

neada_status neada_lemma1_adaptive_bound(double L, double r, double eta_x, double beta,
                                         const double* v_trace, size_t trace_len, double grad0,
                                         int64_t T, double* out) {
  return guarded([&] {
    require(out != nullptr && (v_trace != nullptr || trace_len == 0), "null argument");
    *out = neada::lemma1_adaptive_bound(L, r, eta_x, beta, cspan(v_trace, trace_len), grad0, T);
  });
}

neada_status neada_fit_loglog_slope(const double* xs, const double* ys, size_t n,
                                    double burn_in, neada_slope_fit* out) {
  return guarded([&] {
    require(xs && ys && out, "null argument");
    auto fit = neada::fit_loglog_slope_window(cspan(xs, n), cspan(ys, n), burn_in);
    out->slope = fit.slope;
    out->intercept = fit.intercept;
    out->residual = fit.residual;
    out->points = fit.points;
  });
}

// ---- generalized AdaGrad and regret

neada_status neada_genadagrad_create(const double* x0, size_t dim, double eta, double alpha,
                                     double v0, const neada_domain* domain,
                                     neada_genadagrad** out) {
  return guarded([&] {
    require(x0 && out, "null argument");
    auto s = std::make_unique<neada_genadagrad>();
    s->impl = neada::make_gen_adagrad(neada::Vec(x0, x0 + dim), eta, alpha, v0,
                                      to_domain(domain));
    *out = s.release();
  });
}

void neada_genadagrad_free(neada_genadagrad* state) { delete state; }

neada_status neada_genadagrad_step(neada_genadagrad* state, const double* g) {
  return guarded([&] {
    require(state && g, "null argument");
    neada::gen_adagrad_step(state->impl, cspan(g, state->impl.x.size()));
  });
}

neada_status neada_genadagrad_x(const neada_genadagrad* state, double* out) {
  return guarded([&] {
    require(state && out, "null argument");
    std::copy(state->impl.x.begin(), state->impl.x.end(), out);
  });
}

double neada_genadagrad_v(const neada_genadagrad* state) {
  return state ? state->impl.v : std::nan("");
}

neada_status neada_quadratic_stream_regret(const double* centers, const double* iterates,
                                           size_t T, size_t dim, const neada_domain* domain,
                                           double* out) {
  return guarded([&] {
    require(centers && iterates && out, "null argument");
    std::vector<neada::Vec> c(T), it(T);
    for (std::size_t t = 0; t < T; ++t) {
      c[t].assign(centers + t * dim, centers + (t + 1) * dim);
      it[t].assign(iterates + t * dim, iterates + (t + 1) * dim);
    }
    *out = neada::quadratic_stream_regret(c, it, to_domain(domain));
  });
}

// ---- datasets, network, DRO

neada_status neada_dataset_synthetic(size_t n_raw, uint64_t seed, neada_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    auto d = std::make_unique<neada_dataset>();
    d->impl = neada::make_synthetic_dataset(n_raw, seed);
    *out = d.release();
  });
}

neada_status neada_dataset_synthetic_kept(size_t n_kept, uint64_t seed, neada_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    auto d = std::make_unique<neada_dataset>();
    d->impl = neada::make_synthetic_dataset_kept(n_kept, seed);
    *out = d.release();
  });
}

neada_status neada_dataset_load_csv(const char* path, neada_dataset** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto d = std::make_unique<neada_dataset>();
    d->impl = neada::load_dataset_csv(path);
    *out = d.release();
  });
}

neada_status neada_dataset_save_csv(const neada_dataset* data, const char* path) {
  return guarded([&] {
    require(data && path, "null argument");
    neada::save_dataset_csv(data->impl, path);
  });
}

void neada_dataset_free(neada_dataset* data) { delete data; }

size_t neada_dataset_size(const neada_dataset* data) { return data ? data->impl.size() : 0; }

neada_status neada_dataset_point(const neada_dataset* data, size_t index, double* v1, double* v2,
                                 double* label) {
  return guarded([&] {
    require(data != nullptr, "null argument");
    require(index < data->impl.size(), "point index out of range");
    if (v1) *v1 = data->impl.inputs[index][0];
    if (v2) *v2 = data->impl.inputs[index][1];
    if (label) *label = data->impl.labels[index];
  });
}

neada_status neada_mlp_param_count(const size_t* layer_sizes, size_t n_layers, size_t* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = to_arch(layer_sizes, n_layers).param_count();
  });
}

neada_status neada_mlp_init(const size_t* layer_sizes, size_t n_layers, uint64_t seed,
                            double* params) {
  return guarded([&] {
    require(params != nullptr, "null output");
    auto p = neada::init_mlp(to_arch(layer_sizes, n_layers), seed);
    std::copy(p.values.begin(), p.values.end(), params);
  });
}

neada_status neada_mlp_forward_backward(const size_t* layer_sizes, size_t n_layers,
                                        const double* params, const double* input, double label,
                                        double* loss, double* grad_params, double* grad_input) {
  return guarded([&] {
    require(params && input, "null argument");
    auto arch = to_arch(layer_sizes, n_layers);
    const std::size_t np = arch.param_count();
    auto r = neada::mlp_forward_backward(
        arch, cspan(params, np), cspan(input, arch.input_dim()), label,
        grad_params ? mspan(grad_params, np) : neada::MutSpan{},
        grad_input ? mspan(grad_input, arch.input_dim()) : neada::MutSpan{});
    if (loss) *loss = r.loss;
  });
}

neada_status neada_fgsm_eval(const size_t* layer_sizes, size_t n_layers, const double* params,
                             const neada_dataset* test, double epsilon, double* accuracy) {
  return guarded([&] {
    require(params && test && accuracy, "null argument");
    auto arch = to_arch(layer_sizes, n_layers);
    *accuracy = neada::fgsm_eval(arch, cspan(params, arch.param_count()), test->impl, epsilon);
  });
}

neada_status neada_dro_train(const neada_dataset* train, const neada_dataset* test,
                             const neada_dro_config* config, neada_dro_result** out) {
  return guarded([&] {
    require(train && test && config && out, "null argument");
    neada::DroTrainConfig c;
    if (config->layer_sizes != nullptr) {
      c.arch.assign(config->layer_sizes, config->layer_sizes + config->n_layers);
    }
    c.gamma = config->gamma;
    c.batch = config->batch;
    c.epochs = config->epochs;
    c.neada = to_neada(config->neada);
    require(config->fgsm_eps != nullptr || config->n_fgsm_eps == 0, "null fgsm_eps");
    c.fgsm_eps.assign(config->fgsm_eps, config->fgsm_eps + config->n_fgsm_eps);
    c.seed = config->seed;
    auto r = std::make_unique<neada_dro_result>();
    r->impl = neada::train_dro(train->impl, test->impl, c);
    r->trajectory.impl = std::move(r->impl.trajectory);
    r->n_eps = c.fgsm_eps.size();
    *out = r.release();
  });
}

void neada_dro_result_free(neada_dro_result* result) { delete result; }

size_t neada_dro_result_epochs(const neada_dro_result* result) {
  return result ? result->impl.epochs.size() : 0;
}

neada_status neada_dro_result_epoch(const neada_dro_result* result, size_t index,
                                    neada_dro_epoch* out, double* fgsm_out) {
  return guarded([&] {
    require(result != nullptr, "null argument");
    require(index < result->impl.epochs.size(), "epoch index out of range");
    const auto& e = result->impl.epochs[index];
    if (out) {
      out->epoch = e.epoch;
      out->robust_loss = e.robust_loss;
      out->clean_loss = e.clean_loss;
      out->clean_accuracy = e.clean_accuracy;
    }
    if (fgsm_out) std::copy(e.fgsm_accuracy.begin(), e.fgsm_accuracy.end(), fgsm_out);
  });
}

const neada_trajectory* neada_dro_result_trajectory(const neada_dro_result* result) {
  return result ? &result->trajectory : nullptr;
}

}  // extern "C"
