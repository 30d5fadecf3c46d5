// Experiment runner: expands a flag set into (config, seed) runs, executes
// them on a small worker pool through the C API and writes one CSV per run
// plus a per-config mean file.

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "neada/neada.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

const char* const kColumns =
    "run_id,seed,outer_t,inner_iters,oracle_calls_x,oracle_calls_y,grad_x_norm,grad_map_y,"
    "dist_y_star,stationarity,value,v_outer,wall_ms";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LibraryError : std::runtime_error {
  LibraryError(neada_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  neada_status status;
};

void check(neada_status s, const char* where) {
  if (s != NEADA_OK) {
    throw LibraryError(s, std::string(where) + ": " + neada_status_string(s) + ": " +
                              neada_last_error());
  }
}

struct Options {
  std::string experiment;
  std::vector<std::string> algos;
  std::vector<std::string> psis;
  std::vector<std::string> criteria;
  std::optional<double> eta_x, eta_y;
  std::optional<double> ratio;
  std::vector<double> ratios;
  double beta_x = 0.0, beta_y = 0.0;
  double gamma_ema = 0.999;
  double v0 = 0.0;
  double v0_outer = 1.0;
  std::vector<double> alphas;
  double sigma = 0.0;
  std::int64_t batch = 0;  // 0 = experiment default
  std::int64_t steps = 1000;
  std::int64_t record_every = 1;
  std::uint64_t max_calls = 0;
  int seeds = 1;
  std::uint64_t seed_base = 0;
  std::string out = "runs";
  int jobs = 1;
  double L = 2.0;
  double gamma = 1.3;
  std::int64_t epochs = 50;
  std::vector<double> fgsm_eps{0.1, 0.05, 0.02};
  std::size_t n_train = 2000, n_test = 500;
  std::uint64_t data_seed = 11;
  std::string train_csv, test_csv;
  bool timing = false;
  std::string replay;
  // Arguments minus scheduling, output and filter flags; written into headers.
  std::vector<std::string> argv;
  // replay filters
  std::string only_run;
  std::optional<std::uint64_t> only_seed;
};

// One configuration of the sweep; seeds fan out below it.
struct RunConfig {
  std::string run_id;
  std::string algo;
  std::string psi;
  std::string criterion;
  double eta_x = 0.0, eta_y = 0.0;
  double ratio = 0.0;
  double alpha = 0.5;
};

struct RunOutput {
  std::vector<neada_row> rows;
  std::string status = "ok";
  std::uint64_t inner_cap_hits = 0;
  std::string epochs_csv;  // DRO only
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

bool is_one_of(const std::string& s, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (s == n) return true;
  }
  return false;
}

neada_psi_spec parse_psi(const std::string& name, double gamma) {
  if (name == "gda") return {NEADA_PSI_GDA, gamma};
  if (name == "adagrad") return {NEADA_PSI_ADAGRAD, gamma};
  if (name == "adam") return {NEADA_PSI_ADAM, gamma};
  if (name == "amsgrad") return {NEADA_PSI_AMSGRAD, gamma};
  throw UsageError("--psi: unknown averaging rule '" + name + "'");
}

neada_criterion parse_criterion(const std::string& text) {
  if (text == "i") return {NEADA_CRITERION_I, 0};
  if (text == "ii") return {NEADA_CRITERION_II, 0};
  if (text == "grad-or-cap") return {NEADA_CRITERION_GRAD_OR_CAP, 0};
  if (text.rfind("fixed:", 0) == 0) {
    const std::string k = text.substr(6);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(k.c_str(), &end, 10);
    if (!k.empty() && *end == '\0' && errno == 0 && v >= 1) return {NEADA_CRITERION_FIXED_CAP, v};
  }
  throw UsageError("--criterion: expected i, ii, grad-or-cap or fixed:<k>, got '" + text + "'");
}

void build_app(CLI::App& app, Options& o) {
  app.add_option("--experiment", o.experiment, "lemma1 | quadratic | mccormick | dro | regret");
  app.add_option("--algo", o.algos, "nonnested | neada | neada-adagrad | genadagrad")
      ->delimiter(',');
  app.add_option("--psi", o.psis, "gda | adagrad | adam | amsgrad")->delimiter(',');
  app.add_option("--eta-x", o.eta_x, "primal stepsize");
  app.add_option("--eta-y", o.eta_y, "dual stepsize");
  app.add_option("--ratio", o.ratio, "eta_y / eta_x");
  app.add_option("--ratios", o.ratios, "list of eta_y / eta_x")->delimiter(',');
  app.add_option("--beta-x", o.beta_x, "first-moment weight on x");
  app.add_option("--beta-y", o.beta_y, "first-moment weight on y");
  app.add_option("--gamma-ema", o.gamma_ema, "Adam / AMSGrad second-moment decay");
  app.add_option("--v0", o.v0, "initial second moment of the averagers / inner learner");
  app.add_option("--v0-outer", o.v0_outer, "initial scalar accumulator of neada-adagrad");
  app.add_option("--alpha", o.alphas, "generalized AdaGrad exponent(s)")->delimiter(',');
  app.add_option("--sigma", o.sigma, "gradient noise standard deviation");
  app.add_option("--batch", o.batch, "x minibatch size (dro: sample minibatch)");
  app.add_option("--criterion", o.criteria, "i | ii | grad-or-cap | fixed:k")->delimiter(',');
  app.add_option("--steps", o.steps, "steps (outer steps for nested runs)");
  app.add_option("--record-every", o.record_every, "trajectory stride");
  app.add_option("--max-calls", o.max_calls, "oracle-call budget for nested runs (0 = none)");
  app.add_option("--seeds", o.seeds, "number of seeds");
  app.add_option("--seed-base", o.seed_base, "first seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--jobs", o.jobs, "worker threads (NEADA_JOBS overrides)");
  app.add_option("--L", o.L, "coupling of the quadratic family");
  app.add_option("--gamma", o.gamma, "DRO perturbation penalty");
  app.add_option("--epochs", o.epochs, "DRO epochs");
  app.add_option("--fgsm-eps", o.fgsm_eps, "FGSM radii")->delimiter(',');
  app.add_option("--n-train", o.n_train, "DRO training points");
  app.add_option("--n-test", o.n_test, "DRO test points");
  app.add_option("--data-seed", o.data_seed, "seed of the synthetic DRO data");
  app.add_option("--train-csv", o.train_csv, "load DRO training data (v1,v2,label)");
  app.add_option("--test-csv", o.test_csv, "load DRO test data (v1,v2,label)");
  app.add_flag("--timing", o.timing, "fill the wall_ms column");
  app.add_option("--only-run", o.only_run, "run a single run_id of the sweep");
  app.add_option("--only-seed", o.only_seed, "run a single seed of the sweep");
}

// Fills experiment defaults and rejects inconsistent combinations.
void resolve(Options& o) {
  const std::string& e = o.experiment;
  if (e.empty()) throw UsageError("--experiment: required");
  if (!is_one_of(e, {"lemma1", "quadratic", "mccormick", "dro", "regret"})) {
    throw UsageError("--experiment: unknown experiment '" + e + "'");
  }
  if (o.algos.empty()) {
    if (e == "lemma1") o.algos = {"nonnested"};
    else if (e == "quadratic") o.algos = {"neada-adagrad"};
    else if (e == "mccormick") o.algos = {"nonnested", "neada"};
    else if (e == "dro") o.algos = {"neada"};
    else o.algos = {"genadagrad"};
  }
  for (const auto& a : o.algos) {
    if (!is_one_of(a, {"nonnested", "neada", "neada-adagrad", "genadagrad"})) {
      throw UsageError("--algo: unknown algorithm '" + a + "'");
    }
    if ((a == "genadagrad") != (e == "regret")) {
      throw UsageError("--algo: '" + a + "' is not available for experiment " + e);
    }
  }
  if (o.psis.empty()) o.psis = {e == "dro" ? "adam" : "adagrad"};
  for (const auto& p : o.psis) parse_psi(p, 0.5);
  if (o.criteria.empty()) o.criteria = {(e == "dro" || o.sigma > 0.0) ? "ii" : "i"};
  for (const auto& c : o.criteria) parse_criterion(c);
  if (o.alphas.empty()) o.alphas = {0.5};
  for (double a : o.alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw UsageError("--alpha: must lie in (0, 1]");
  }

  if (o.ratio && !o.ratios.empty()) throw UsageError("--ratio: cannot be combined with --ratios");
  if (o.ratio) o.ratios = {*o.ratio};
  for (double r : o.ratios) {
    if (!(r > 0.0)) throw UsageError("--ratios: ratios must be positive");
  }
  if (!o.ratios.empty() && o.eta_x && o.eta_y) {
    throw UsageError("--ratios: over-determined with both --eta-x and --eta-y");
  }
  if (o.eta_x && !(*o.eta_x > 0.0)) throw UsageError("--eta-x: must be positive");
  if (o.eta_y && !(*o.eta_y > 0.0)) throw UsageError("--eta-y: must be positive");
  if (!(o.beta_x >= 0.0 && o.beta_x < 1.0)) throw UsageError("--beta-x: must lie in [0, 1)");
  if (!(o.beta_y >= 0.0 && o.beta_y < 1.0)) throw UsageError("--beta-y: must lie in [0, 1)");
  if (!(o.gamma_ema > 0.0 && o.gamma_ema < 1.0)) {
    throw UsageError("--gamma-ema: must lie in (0, 1)");
  }
  if (!(o.v0 >= 0.0)) throw UsageError("--v0: must be nonnegative");
  if (!(o.v0_outer > 0.0)) throw UsageError("--v0-outer: must be positive");
  if (!(o.sigma >= 0.0)) throw UsageError("--sigma: must be nonnegative");
  if (o.batch < 0) throw UsageError("--batch: must be positive");
  if (o.batch == 0) o.batch = e == "dro" ? 128 : 1;
  if (o.steps < 1) throw UsageError("--steps: must be positive");
  if (o.record_every < 1) throw UsageError("--record-every: must be positive");
  if (o.seeds < 1) throw UsageError("--seeds: must be positive");
  if (o.jobs < 1) throw UsageError("--jobs: must be positive");
  if (!(o.L > 0.0)) throw UsageError("--L: must be positive");
  if (!(o.gamma > 0.0)) throw UsageError("--gamma: must be positive");
  if (o.epochs < 1) throw UsageError("--epochs: must be positive");
  for (double eps : o.fgsm_eps) {
    if (!(eps >= 0.0)) throw UsageError("--fgsm-eps: radii must be nonnegative");
  }
  if (e == "dro" && o.n_train == 0) throw UsageError("--n-train: must be positive");
  if (e == "dro" && o.n_test == 0) throw UsageError("--n-test: must be positive");

  if (const char* env = std::getenv("NEADA_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*env == '\0' || *end != '\0' || v < 1) {
      throw UsageError("NEADA_JOBS: expected a positive integer, got '" + std::string(env) + "'");
    }
    o.jobs = static_cast<int>(v);
  }
}

std::vector<RunConfig> expand(const Options& o) {
  const std::string& e = o.experiment;
  const double default_eta_x = e == "regret" ? 1.0 : 0.01;
  const double default_eta_y = e == "dro" ? 0.08 : 0.01;
  std::vector<std::optional<double>> ratios;
  if (o.ratios.empty()) ratios.push_back(std::nullopt);
  for (double r : o.ratios) ratios.push_back(r);

  std::vector<RunConfig> out;
  for (const auto& algo : o.algos) {
    const bool uses_psi = algo == "nonnested" || algo == "neada";
    const bool nested = algo == "neada" || algo == "neada-adagrad";
    const bool uses_alpha = algo == "neada-adagrad" || algo == "genadagrad";
    const std::vector<std::string> psis = uses_psi ? o.psis : std::vector<std::string>{""};
    const std::vector<std::string> crits = nested ? o.criteria : std::vector<std::string>{""};
    const std::vector<double> alphas = uses_alpha ? o.alphas : std::vector<double>{0.5};
    for (const auto& psi : psis) {
      for (const auto& r : ratios) {
        for (const auto& crit : crits) {
          for (double alpha : alphas) {
            RunConfig c;
            c.algo = algo;
            c.psi = psi;
            c.criterion = crit;
            c.alpha = alpha;
            if (r) {
              if (o.eta_y && !o.eta_x) {
                c.eta_y = *o.eta_y;
                c.eta_x = *o.eta_y / *r;
              } else {
                c.eta_x = o.eta_x.value_or(default_eta_x);
                c.eta_y = *r * c.eta_x;
              }
            } else {
              c.eta_x = o.eta_x.value_or(default_eta_x);
              c.eta_y = o.eta_y.value_or(default_eta_y);
            }
            c.ratio = c.eta_y / c.eta_x;
            std::string id = e + "_" + algo;
            if (!psi.empty()) id += "_" + psi;
            if (algo != "genadagrad") id += "_r" + short_num(c.ratio);
            if (!crit.empty()) id += "_c" + crit;
            if (uses_alpha) id += "_a" + short_num(alpha);
            std::replace(id.begin(), id.end(), ':', '-');
            c.run_id = id;
            out.push_back(c);
          }
        }
      }
    }
  }
  return out;
}

json config_json(const Options& o, const RunConfig& c) {
  json j;
  j["experiment"] = o.experiment;
  j["algo"] = c.algo;
  if (!c.psi.empty()) j["psi"] = c.psi;
  if (!c.criterion.empty()) j["criterion"] = c.criterion;
  j["eta_x"] = c.eta_x;
  j["eta_y"] = c.eta_y;
  j["ratio"] = c.ratio;
  j["beta_x"] = o.beta_x;
  j["beta_y"] = o.beta_y;
  j["gamma_ema"] = o.gamma_ema;
  j["v0"] = o.v0;
  j["v0_outer"] = o.v0_outer;
  j["alpha"] = c.alpha;
  j["sigma"] = o.sigma;
  j["batch"] = o.batch;
  j["steps"] = o.steps;
  j["record_every"] = o.record_every;
  j["max_calls"] = o.max_calls;
  if (o.experiment == "lemma1" || o.experiment == "quadratic") {
    j["L"] = o.L;
    j["x0"] = {1.0};
    j["y0"] = {0.0};
  } else if (o.experiment == "mccormick") {
    j["x0"] = {1.0, 1.0};
    j["y0"] = {0.0, 0.0};
  } else if (o.experiment == "dro") {
    j["gamma"] = o.gamma;
    j["epochs"] = o.epochs;
    j["fgsm_eps"] = o.fgsm_eps;
    j["arch"] = {2, 16, 16, 1};
    j["n_train"] = o.n_train;
    j["n_test"] = o.n_test;
    j["data_seed"] = o.data_seed;
    if (!o.train_csv.empty()) j["train_csv"] = o.train_csv;
    if (!o.test_csv.empty()) j["test_csv"] = o.test_csv;
  } else {
    j["stream"] = "alternating 1/2 (x - c_t)^2, c_t = +1, -1, ...";
    j["domain"] = "[-1, 1]";
    j["x0"] = {0.0};
  }
  return j;
}

std::vector<neada_row> collect_rows(const neada_trajectory* t) {
  std::vector<neada_row> rows(neada_trajectory_size(t));
  for (std::size_t i = 0; i < rows.size(); ++i) check(neada_trajectory_row(t, i, &rows[i]), "row");
  return rows;
}

std::string run_status_name(neada_run_status s) {
  switch (s) {
    case NEADA_RUN_OK: return "ok";
    case NEADA_RUN_INNER_CAP_EXCEEDED: return "inner-cap-exceeded";
    case NEADA_RUN_DIVERGED_NONFINITE: return "diverged-nonfinite";
  }
  return "ok";
}

neada_neada_config nested_config(const Options& o, const RunConfig& c) {
  neada_neada_config n;
  neada_neada_config_default(&n);
  n.batch = o.batch;
  n.criterion = parse_criterion(c.criterion);
  n.outer_steps = o.steps;
  n.max_oracle_calls = o.max_calls;
  n.record_every = o.record_every;
  if (c.algo == "neada-adagrad") {
    n.outer = NEADA_OUTER_SCALAR_ADAGRAD;
    n.eta = c.eta_x;
    n.v0 = o.v0_outer;
    n.inner.kind = NEADA_INNER_GEN_ADAGRAD;
    n.inner.eta = c.eta_y;
    n.inner.alpha = c.alpha;
    n.inner.v0 = o.v0 > 0.0 ? o.v0 : 1.0;
  } else {
    const neada_psi_spec psi = parse_psi(c.psi, o.gamma_ema);
    n.outer = NEADA_OUTER_AVERAGED;
    n.eta = c.eta_x;
    n.psi_x = psi;
    n.beta_x = o.beta_x;
    n.v0_x = o.v0;
    n.inner.kind = NEADA_INNER_AVERAGED;
    n.inner.eta = c.eta_y;
    n.inner.psi = psi;
    n.inner.beta = o.beta_y;
    n.inner.v0 = o.v0;
  }
  return n;
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using ProblemH = Handle<neada_problem, neada_problem_free>;
using OracleH = Handle<neada_oracle, neada_oracle_free>;
using TrajH = Handle<neada_trajectory, neada_trajectory_free>;
using DataH = Handle<neada_dataset, neada_dataset_free>;
using DroH = Handle<neada_dro_result, neada_dro_result_free>;
using GenH = Handle<neada_genadagrad, neada_genadagrad_free>;

RunOutput run_regret(const Options& o, const RunConfig& c) {
  // Alternating stream on [-1, 1]; the comparator of the quadratic stream is
  // the projected mean of the centres, so regret is tracked incrementally.
  neada_domain dom{1, -1.0, 1.0, 0.0};
  const double x0 = 0.0;
  GenH g;
  check(neada_genadagrad_create(&x0, 1, c.eta_x, c.alpha, o.v0 > 0.0 ? o.v0 : 1.0, &dom, &g.p),
        "genadagrad");
  RunOutput out;
  double incurred = 0.0, sum_c = 0.0, sum_c2 = 0.0;
  for (std::int64_t t = 0; t < o.steps; ++t) {
    const double ct = (t % 2 == 0) ? 1.0 : -1.0;
    double x = 0.0;
    check(neada_genadagrad_x(g.p, &x), "genadagrad");
    incurred += 0.5 * (x - ct) * (x - ct);
    sum_c += ct;
    sum_c2 += ct * ct;
    const double grad = x - ct;
    check(neada_genadagrad_step(g.p, &grad), "genadagrad");
    const std::int64_t T = t + 1;
    if (T % o.record_every == 0 || T == o.steps) {
      const double xs = std::clamp(sum_c / static_cast<double>(T), -1.0, 1.0);
      const double best = 0.5 * static_cast<double>(T) * xs * xs - xs * sum_c + 0.5 * sum_c2;
      neada_row r{};
      r.outer_t = T;
      r.oracle_calls_x = static_cast<std::uint64_t>(T);
      r.grad_x_norm = std::abs(grad);
      r.grad_map_y = std::nan("");
      r.dist_y_star = std::nan("");
      r.stationarity = std::nan("");
      r.value = incurred - best;
      r.v_outer = neada_genadagrad_v(g.p);
      out.rows.push_back(r);
    }
  }
  return out;
}

struct DroData {
  DataH train, test;
};

RunOutput run_dro(const Options& o, const RunConfig& c, std::uint64_t seed, const DroData& d) {
  const std::size_t arch[] = {2, 16, 16, 1};
  neada_dro_config cfg{};
  cfg.layer_sizes = arch;
  cfg.n_layers = 4;
  cfg.gamma = o.gamma;
  cfg.batch = static_cast<std::size_t>(o.batch);
  cfg.epochs = o.epochs;
  cfg.neada = nested_config(o, c);
  cfg.fgsm_eps = o.fgsm_eps.data();
  cfg.n_fgsm_eps = o.fgsm_eps.size();
  cfg.seed = seed;
  DroH res;
  check(neada_dro_train(d.train.p, d.test.p, &cfg, &res.p), "dro");
  const neada_trajectory* t = neada_dro_result_trajectory(res.p);
  RunOutput out;
  out.rows = collect_rows(t);
  out.status = run_status_name(neada_trajectory_status(t));
  out.inner_cap_hits = neada_trajectory_inner_cap_hits(t);

  std::ostringstream ep;
  ep << "epoch,robust_loss,clean_loss,clean_accuracy";
  for (double eps : o.fgsm_eps) ep << ",fgsm_acc_" << short_num(eps);
  ep << "\n";
  std::vector<double> acc(o.fgsm_eps.size());
  for (std::size_t i = 0; i < neada_dro_result_epochs(res.p); ++i) {
    neada_dro_epoch e;
    check(neada_dro_result_epoch(res.p, i, &e, acc.data()), "dro epoch");
    ep << e.epoch << "," << fmt(e.robust_loss) << "," << fmt(e.clean_loss) << ","
       << fmt(e.clean_accuracy);
    for (double a : acc) ep << "," << fmt(a);
    ep << "\n";
  }
  out.epochs_csv = ep.str();
  return out;
}

RunOutput run_one(const Options& o, const RunConfig& c, std::uint64_t seed, const DroData& d) {
  if (o.experiment == "regret") return run_regret(o, c);
  if (o.experiment == "dro") return run_dro(o, c, seed, d);

  ProblemH problem;
  std::vector<double> x0, y0;
  if (o.experiment == "mccormick") {
    check(neada_problem_mccormick(&problem.p), "problem");
    x0 = {1.0, 1.0};
    y0 = {0.0, 0.0};
  } else {
    check(neada_problem_quadratic(o.L, &problem.p), "problem");
    x0 = {1.0};
    y0 = {0.0};
  }
  OracleH oracle;
  check(neada_oracle_noisy(problem.p, o.sigma, seed, &oracle.p), "oracle");
  TrajH traj;
  if (c.algo == "nonnested") {
    const neada_psi_spec psi = parse_psi(c.psi, o.gamma_ema);
    neada_nonnested_config n;
    neada_nonnested_config_default(&n);
    n.eta_x = c.eta_x;
    n.eta_y = c.eta_y;
    n.beta_x = o.beta_x;
    n.beta_y = o.beta_y;
    n.psi_x = psi;
    n.psi_y = psi;
    n.v0_x = o.v0;
    n.v0_y = o.v0;
    n.steps = o.steps;
    n.record_every = o.record_every;
    check(neada_run_nonnested(oracle.p, &n, x0.data(), y0.data(), &traj.p), "nonnested");
  } else {
    const neada_neada_config n = nested_config(o, c);
    check(neada_run_neada(oracle.p, &n, x0.data(), y0.data(), &traj.p), "neada");
  }
  RunOutput out;
  out.rows = collect_rows(traj.p);
  out.status = run_status_name(neada_trajectory_status(traj.p));
  out.inner_cap_hits = neada_trajectory_inner_cap_hits(traj.p);
  return out;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("io-error: cannot open " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("io-error: cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string data_row(const std::string& run_id, const std::string& seed, const neada_row& r,
                     bool timing) {
  std::string s = run_id + "," + seed + "," + std::to_string(r.outer_t) + "," +
                  std::to_string(r.inner_iters) + "," + std::to_string(r.oracle_calls_x) + "," +
                  std::to_string(r.oracle_calls_y);
  for (double v : {r.grad_x_norm, r.grad_map_y, r.dist_y_star, r.stationarity, r.value,
                   r.v_outer, timing ? r.wall_ms : 0.0}) {
    s += "," + fmt(v);
  }
  return s + "\n";
}

std::string header(const json& argv, const Options& o, const RunConfig& c,
                   const std::string& seed, const std::string& extra) {
  std::string h;
  h += std::string("# neada ") + neada_version() + "\n";
  h += "# argv: " + argv.dump() + "\n";
  h += "# run_id: " + c.run_id + "\n";
  h += "# seed: " + seed + "\n";
  h += std::string("# rng: ") + neada_rng_id() + "\n";
  h += "# config: " + config_json(o, c).dump() + "\n";
  h += extra;
  h += std::string(kColumns) + "\n";
  return h;
}

std::string mean_row(const std::string& run_id, const std::vector<const RunOutput*>& runs,
                     std::size_t i, bool timing) {
  const double n = static_cast<double>(runs.size());
  double acc[13] = {};
  for (const RunOutput* r : runs) {
    const neada_row& row = r->rows[i];
    const double vals[] = {static_cast<double>(row.outer_t), static_cast<double>(row.inner_iters),
                           static_cast<double>(row.oracle_calls_x),
                           static_cast<double>(row.oracle_calls_y), row.grad_x_norm,
                           row.grad_map_y, row.dist_y_star, row.stationarity, row.value,
                           row.v_outer, timing ? row.wall_ms : 0.0};
    for (int k = 0; k < 11; ++k) acc[k] += vals[k];
  }
  std::string s = run_id + ",mean";
  for (int k = 0; k < 11; ++k) s += "," + fmt(acc[k] / n);
  return s + "\n";
}

Options parse_args(const std::vector<std::string>& args) {
  CLI::App app{"nested adaptive minimax experiments"};
  Options o;
  build_app(app, o);
  std::string replay;
  app.add_option("--replay", replay, "re-run the run recorded in a CSV header");
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
  o.replay = replay;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    const std::string name = a.substr(0, a.find('='));
    if (is_one_of(name, {"--out", "--jobs", "--only-run", "--only-seed", "--replay"})) {
      if (name == a) ++i;
      continue;
    }
    o.argv.push_back(a);
  }
  return o;
}

// Reads the metadata header of an emitted CSV back into options.
Options load_replay(const Options& cli, const std::vector<std::string>& raw_args) {
  std::ifstream f(cli.replay);
  if (!f) throw UsageError("--replay: cannot open " + cli.replay);
  std::string line, run_id, seed;
  json argv;
  while (std::getline(f, line) && line.rfind("#", 0) == 0) {
    if (line.rfind("# argv: ", 0) == 0) argv = json::parse(line.substr(8));
    if (line.rfind("# run_id: ", 0) == 0) run_id = line.substr(10);
    if (line.rfind("# seed: ", 0) == 0) seed = line.substr(8);
  }
  if (!argv.is_array() || run_id.empty() || seed.empty() || seed == "mean") {
    throw UsageError("--replay: " + cli.replay + " has no per-seed run metadata");
  }
  std::vector<std::string> args;
  for (const auto& a : argv) args.push_back(a.get<std::string>());
  bool has_out = false;
  for (const auto& a : raw_args) {
    if (a == "--out" || a.rfind("--out=", 0) == 0) has_out = true;
  }
  args.push_back("--out");
  args.push_back(has_out ? cli.out : fs::path(cli.replay).parent_path().string() + "/replay");
  args.push_back("--only-run");
  args.push_back(run_id);
  args.push_back("--only-seed");
  args.push_back(seed);
  Options o = parse_args(args);
  o.jobs = cli.jobs;
  return o;
}

struct Task {
  std::size_t config;
  std::size_t seed_index;
};

int run_main(int argc, char** argv) {
  std::vector<std::string> raw(argv + 1, argv + argc);
  Options o;
  try {
    o = parse_args(raw);
    if (!o.replay.empty()) o = load_replay(o, raw);
    resolve(o);
  } catch (const CLI::CallForHelp&) {
    CLI::App app{"nested adaptive minimax experiments"};
    Options dummy;
    build_app(app, dummy);
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "usage error: --replay: malformed metadata: " << e.what() << "\n";
    return kExitUsage;
  }

  std::vector<RunConfig> configs = expand(o);
  if (!o.only_run.empty()) {
    std::erase_if(configs, [&](const RunConfig& c) { return c.run_id != o.only_run; });
    if (configs.empty()) {
      std::cerr << "usage error: --only-run: no run named " << o.only_run << "\n";
      return kExitUsage;
    }
  }
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < o.seeds; ++k) seeds.push_back(o.seed_base + static_cast<std::uint64_t>(k));
  if (o.only_seed) seeds = {*o.only_seed};
  const bool single = !o.only_run.empty() || o.only_seed.has_value();

  json argv_json = json::array();
  for (const auto& a : o.argv) argv_json.push_back(a);

  try {
    fs::create_directories(o.out);
  } catch (const std::exception& e) {
    std::cerr << "error: io-error: cannot create " << o.out << ": " << e.what() << "\n";
    return kExitFailure;
  }

  DroData data;
  try {
    if (o.experiment == "dro") {
      if (!o.train_csv.empty()) {
        check(neada_dataset_load_csv(o.train_csv.c_str(), &data.train.p), "train data");
      } else {
        check(neada_dataset_synthetic_kept(o.n_train, o.data_seed, &data.train.p), "train data");
      }
      if (!o.test_csv.empty()) {
        check(neada_dataset_load_csv(o.test_csv.c_str(), &data.test.p), "test data");
      } else {
        check(neada_dataset_synthetic_kept(o.n_test, o.data_seed + 1, &data.test.p), "test data");
      }
      if (!single) {
        check(neada_dataset_save_csv(data.train.p, (fs::path(o.out) / "dro_train.csv").c_str()),
              "save data");
        check(neada_dataset_save_csv(data.test.p, (fs::path(o.out) / "dro_test.csv").c_str()),
              "save data");
      }
    }
  } catch (const LibraryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.status == NEADA_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
  }

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::size_t s = 0; s < seeds.size(); ++s) tasks.push_back({c, s});
  }
  std::vector<std::vector<RunOutput>> results(configs.size(),
                                              std::vector<RunOutput>(seeds.size()));
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;
  neada_status first_status = NEADA_OK;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const RunConfig& c = configs[task.config];
      const std::uint64_t seed = seeds[task.seed_index];
      try {
        RunOutput r = run_one(o, c, seed, data);
        const std::string seed_s = std::to_string(seed);
        std::string extra = "# status: " + r.status + "\n# inner_cap_hits: " +
                            std::to_string(r.inner_cap_hits) + "\n";
        std::string body = header(argv_json, o, c, seed_s, extra);
        for (const auto& row : r.rows) body += data_row(c.run_id, seed_s, row, o.timing);
        const fs::path base = fs::path(o.out) / (c.run_id + "_s" + seed_s);
        write_atomic(base.string() + ".csv", body);
        if (!r.epochs_csv.empty()) write_atomic(base.string() + "_epochs.csv", r.epochs_csv);
        results[task.config][task.seed_index] = std::move(r);
      } catch (const LibraryError& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (first_error.empty()) {
          first_error = e.what();
          first_status = e.status;
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (first_error.empty()) {
          first_error = e.what();
          first_status = NEADA_ERR_INTERNAL;
        }
      }
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(o.jobs), std::max<std::size_t>(1, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (!first_error.empty()) {
    std::cerr << "error: " << first_error << "\n";
    return first_status == NEADA_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
  }

  // Means over the common prefix of the seeds' trajectories, in seed order.
  bool diverged = false;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<const RunOutput*> runs;
    std::size_t n_rows = SIZE_MAX;
    for (const auto& r : results[c]) {
      runs.push_back(&r);
      n_rows = std::min(n_rows, r.rows.size());
      if (r.status == "diverged-nonfinite") diverged = true;
    }
    if (single) continue;
    std::string seeds_s;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      seeds_s += (s ? "," : "") + std::to_string(seeds[s]);
    }
    std::string body = header(argv_json, o, configs[c], "mean",
                              "# seeds: " + seeds_s + "\n# rows: common prefix of all seeds\n");
    for (std::size_t i = 0; i < n_rows; ++i) body += mean_row(configs[c].run_id, runs, i, o.timing);
    try {
      write_atomic((fs::path(o.out) / (configs[c].run_id + "_mean.csv")).string(), body);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }
  for (const auto& c : configs) std::cout << c.run_id << "\n";
  if (diverged) {
    std::cerr << "warning: at least one run ended diverged-nonfinite\n";
    return kExitDiverged;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run_main(argc, argv); }
