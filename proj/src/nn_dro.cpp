#include "neada/nn_dro.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace neada {

MlpArch::MlpArch(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "network needs >= 2 layer sizes");
  for (std::size_t s : sizes_) {
    if (s == 0) throw Error(ErrorCode::kInvalidArgument, "layer sizes must be positive");
  }
  if (sizes_.back() != 1) throw Error(ErrorCode::kInvalidArgument, "output layer must be scalar");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  param_count_ = offset;
  for (std::size_t s : sizes_) max_width_ = std::max(max_width_, s);
}

MlpParams init_mlp(const MlpArch& arch, std::uint64_t seed) {
  Rng rng(seed);
  MlpParams p{arch, Vec(arch.param_count(), 0.0)};
  const auto& sizes = arch.sizes();
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const double scale = std::sqrt(1.0 / static_cast<double>(sizes[l]));
    const std::size_t w = arch.weight_offset(l);
    for (std::size_t k = 0; k < sizes[l] * sizes[l + 1]; ++k) p.values[w + k] = scale * rng.normal();
  }
  return p;
}

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }

double logistic_loss(double output, double label) {
  const double m = label * output;
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

namespace {

struct Workspace {
  // pre[l], act[l] for l = 0..num_layers; act[0] is the input.
  std::vector<Vec> pre;
  std::vector<Vec> act;
  Vec delta, delta_prev;
};

Workspace& workspace(const MlpArch& arch) {
  thread_local Workspace ws;
  const auto& sizes = arch.sizes();
  ws.pre.resize(sizes.size());
  ws.act.resize(sizes.size());
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    ws.pre[l].resize(sizes[l]);
    ws.act[l].resize(sizes[l]);
  }
  ws.delta.resize(arch.max_width());
  ws.delta_prev.resize(arch.max_width());
  return ws;
}

double forward_into(const MlpArch& arch, ConstSpan params, ConstSpan input, Workspace& ws) {
  const auto& sizes = arch.sizes();
  const std::size_t layers = arch.num_layers();
  std::copy(input.begin(), input.end(), ws.act[0].begin());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n_in = sizes[l], n_out = sizes[l + 1];
    const double* W = params.data() + arch.weight_offset(l);
    const double* b = params.data() + arch.bias_offset(l);
    const Vec& a = ws.act[l];
    Vec& z = ws.pre[l + 1];
    Vec& out = ws.act[l + 1];
    const bool hidden = l + 1 < layers;
    for (std::size_t j = 0; j < n_out; ++j) {
      double s = b[j];
      const double* row = W + j * n_in;
      for (std::size_t i = 0; i < n_in; ++i) s += row[i] * a[i];
      z[j] = s;
      out[j] = hidden ? elu(s) : s;
    }
  }
  return ws.act[layers][0];
}

void check_network_input(const MlpArch& arch, ConstSpan params, ConstSpan input) {
  require_dim(params.size(), arch.param_count(), "parameter vector");
  require_dim(input.size(), arch.input_dim(), "network input");
}

}  // namespace

double mlp_forward(const MlpArch& arch, ConstSpan params, ConstSpan input) {
  check_network_input(arch, params, input);
  return forward_into(arch, params, input, workspace(arch));
}

MlpOutput mlp_forward_backward(const MlpArch& arch, ConstSpan params, ConstSpan input,
                               double label, MutSpan grad_params, MutSpan grad_input) {
  check_network_input(arch, params, input);
  if (!grad_params.empty()) require_dim(grad_params.size(), arch.param_count(), "grad_params");
  if (!grad_input.empty()) require_dim(grad_input.size(), arch.input_dim(), "grad_input");

  Workspace& ws = workspace(arch);
  MlpOutput out;
  out.output = forward_into(arch, params, input, ws);
  out.loss = logistic_loss(out.output, label);
  if (grad_params.empty() && grad_input.empty()) return out;

  // d loss / d output = -label * sigmoid(-label * output)
  const double m = label * out.output;
  const double sig = m > 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
  const auto& sizes = arch.sizes();
  const std::size_t layers = arch.num_layers();
  ws.delta[0] = -label * sig;

  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t n_in = sizes[l], n_out = sizes[l + 1];
    const double* W = params.data() + arch.weight_offset(l);
    const Vec& a = ws.act[l];
    if (!grad_params.empty()) {
      double* gW = grad_params.data() + arch.weight_offset(l);
      double* gb = grad_params.data() + arch.bias_offset(l);
      for (std::size_t j = 0; j < n_out; ++j) {
        const double d = ws.delta[j];
        gb[j] = d;
        for (std::size_t i = 0; i < n_in; ++i) gW[j * n_in + i] = d * a[i];
      }
    }
    if (l == 0 && grad_input.empty()) break;
    for (std::size_t i = 0; i < n_in; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_out; ++j) s += W[j * n_in + i] * ws.delta[j];
      // a[i] = elu(pre[i]) on hidden layers; elu'(z) = 1 for z > 0, exp(z) otherwise
      if (l > 0) s *= ws.pre[l][i] > 0.0 ? 1.0 : std::exp(ws.pre[l][i]);
      ws.delta_prev[i] = s;
    }
    if (l == 0) {
      std::copy_n(ws.delta_prev.begin(), n_in, grad_input.begin());
    } else {
      std::swap(ws.delta, ws.delta_prev);
    }
  }
  return out;
}

double synthetic_label(double v1, double v2) {
  const double r = std::hypot(v1, v2);
  const double root2 = std::sqrt(2.0);
  if (r > root2 / kMarginFactor && r < kMarginFactor * root2) return 0.0;
  return r - root2 > 0.0 ? 1.0 : -1.0;
}

Dataset make_synthetic_dataset(std::size_t n_raw, std::uint64_t seed) {
  if (n_raw == 0) throw Error(ErrorCode::kInvalidArgument, "n_raw must be > 0");
  Rng rng(seed);
  Dataset data;
  for (std::size_t i = 0; i < n_raw; ++i) {
    const double a = rng.normal();
    const double b = rng.normal();
    const double label = synthetic_label(a, b);
    if (label == 0.0) continue;
    data.inputs.push_back({a, b});
    data.labels.push_back(label);
  }
  return data;
}

Dataset make_synthetic_dataset_kept(std::size_t n_kept, std::uint64_t seed) {
  if (n_kept == 0) throw Error(ErrorCode::kInvalidArgument, "n_kept must be > 0");
  Rng rng(seed);
  Dataset data;
  while (data.size() < n_kept) {
    const double a = rng.normal();
    const double b = rng.normal();
    const double label = synthetic_label(a, b);
    if (label == 0.0) continue;
    data.inputs.push_back({a, b});
    data.labels.push_back(label);
  }
  return data;
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  out << "v1,v2,label\n";
  char buf[128];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", data.inputs[i][0], data.inputs[i][1],
                  data.labels[i] > 0 ? 1 : -1);
    out << buf;
  }
  if (!out) throw Error(ErrorCode::kIoError, "write to '" + path + "' failed");
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("v1,v2,label", 0) != 0) {
    throw Error(ErrorCode::kIoError, "'" + path + "' lacks the v1,v2,label header");
  }
  Dataset data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw Error(ErrorCode::kIoError, path + ":" + std::to_string(lineno) + ": expected 3 columns");
    }
    try {
      const double label = std::stod(c);
      if (label != 1.0 && label != -1.0) throw std::invalid_argument("label");
      data.inputs.push_back({std::stod(a), std::stod(b)});
      data.labels.push_back(label);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIoError, path + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  return data;
}

DroProblem::DroProblem(Dataset data, double gamma, MlpArch arch)
    : data_(std::move(data)), gamma_(gamma), arch_(std::move(arch)) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be > 0");
  if (data_.size() == 0) throw Error(ErrorCode::kInvalidArgument, "dataset is empty");
  if (arch_.input_dim() != 2) throw Error(ErrorCode::kShapeError, "DRO network takes 2-d inputs");
}

Vec DroProblem::clean_inputs() const {
  Vec y(dim_y());
  for (std::size_t i = 0; i < data_.size(); ++i) {
    y[2 * i] = data_.inputs[i][0];
    y[2 * i + 1] = data_.inputs[i][1];
  }
  return y;
}

double DroProblem::sample_term(std::size_t i, ConstSpan x, ConstSpan y_i, MutSpan grad_params,
                               MutSpan grad_yi) const {
  const auto& v = data_.inputs[i];
  const MlpOutput o = mlp_forward_backward(arch_, x, y_i, data_.labels[i], grad_params, grad_yi);
  const double d0 = y_i[0] - v[0], d1 = y_i[1] - v[1];
  if (!grad_yi.empty()) {
    grad_yi[0] -= 2.0 * gamma_ * d0;
    grad_yi[1] -= 2.0 * gamma_ * d1;
  }
  return o.loss - gamma_ * (d0 * d0 + d1 * d1);
}

double DroProblem::value(ConstSpan x, ConstSpan y) const {
  require_dim(x.size(), dim_x(), "x");
  require_dim(y.size(), dim_y(), "y");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += sample_term(i, x, y.subspan(2 * i, 2), {}, {});
  return s / static_cast<double>(data_.size());
}

void DroProblem::grad_x(ConstSpan x, ConstSpan y, MutSpan out) const {
  require_dim(x.size(), dim_x(), "x");
  require_dim(y.size(), dim_y(), "y");
  require_dim(out.size(), dim_x(), "grad_x buffer");
  std::fill(out.begin(), out.end(), 0.0);
  Vec g(dim_x());
  for (std::size_t i = 0; i < data_.size(); ++i) {
    sample_term(i, x, y.subspan(2 * i, 2), g, {});
    for (std::size_t k = 0; k < g.size(); ++k) out[k] += g[k];
  }
  const double inv = 1.0 / static_cast<double>(data_.size());
  for (double& v : out) v *= inv;
}

void DroProblem::grad_y(ConstSpan x, ConstSpan y, MutSpan out) const {
  require_dim(x.size(), dim_x(), "x");
  require_dim(y.size(), dim_y(), "y");
  require_dim(out.size(), dim_y(), "grad_y buffer");
  const double inv = 1.0 / static_cast<double>(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) {
    MutSpan block = out.subspan(2 * i, 2);
    sample_term(i, x, y.subspan(2 * i, 2), {}, block);
    block[0] *= inv;
    block[1] *= inv;
  }
}

double DroProblem::clean_loss(ConstSpan x) const {
  require_dim(x.size(), dim_x(), "x");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double out = mlp_forward(arch_, x, data_.inputs[i]);
    s += logistic_loss(out, data_.labels[i]);
  }
  return s / static_cast<double>(data_.size());
}

std::unique_ptr<DroProblem> make_dro_problem(Dataset data, double gamma, MlpArch arch) {
  return std::make_unique<DroProblem>(std::move(data), gamma, std::move(arch));
}

DroMinibatchOracle::DroMinibatchOracle(const DroProblem& problem, std::size_t batch,
                                       std::uint64_t seed)
    : problem_(problem), batch_(batch), rng_(seed), mask_(problem.dim_y(), 0) {
  if (batch == 0) throw Error(ErrorCode::kInvalidArgument, "batch must be >= 1");
  scratch_.resize(problem.dim_x());
  begin_outer_step();
}

void DroMinibatchOracle::begin_outer_step() {
  for (std::size_t i : indices_) mask_[2 * i] = mask_[2 * i + 1] = 0;
  indices_.resize(batch_);
  for (std::size_t& i : indices_) {
    i = rng_.index(problem_.data().size());
    mask_[2 * i] = mask_[2 * i + 1] = 1;
  }
}

void DroMinibatchOracle::sample_grad_y(ConstSpan x, ConstSpan y, MutSpan gy) {
  require_dim(gy.size(), problem_.dim_y(), "grad_y buffer");
  std::fill(gy.begin(), gy.end(), 0.0);
  for (std::size_t i : indices_) {
    problem_.sample_term(i, x, y.subspan(2 * i, 2), {}, gy.subspan(2 * i, 2));
  }
  calls_y_ += indices_.size();
}

void DroMinibatchOracle::sample_grad_x(ConstSpan x, ConstSpan y, std::size_t, MutSpan gx) {
  require_dim(gx.size(), problem_.dim_x(), "grad_x buffer");
  std::fill(gx.begin(), gx.end(), 0.0);
  for (std::size_t i : indices_) {
    problem_.sample_term(i, x, y.subspan(2 * i, 2), scratch_, {});
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += scratch_[k];
  }
  const double inv = 1.0 / static_cast<double>(indices_.size());
  for (double& v : gx) v *= inv;
  calls_x_ += indices_.size();
}

void DroMinibatchOracle::sample_grads(ConstSpan x, ConstSpan y, MutSpan gx, MutSpan gy) {
  sample_grad_x(x, y, batch_, gx);
  sample_grad_y(x, y, gy);
}

std::array<double, 2> fgsm_perturb(std::array<double, 2> input, std::array<double, 2> grad,
                                   double epsilon) {
  auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  return {input[0] + epsilon * sign(grad[0]), input[1] + epsilon * sign(grad[1])};
}

double fgsm_eval(const MlpArch& arch, ConstSpan params, const Dataset& test, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  if (test.size() == 0) throw Error(ErrorCode::kInvalidArgument, "test set is empty");
  std::size_t correct = 0;
  std::array<double, 2> grad{};
  for (std::size_t i = 0; i < test.size(); ++i) {
    mlp_forward_backward(arch, params, test.inputs[i], test.labels[i], {}, grad);
    const auto adv = fgsm_perturb(test.inputs[i], grad, epsilon);
    const double out = mlp_forward(arch, params, adv);
    const double predicted = out > 0.0 ? 1.0 : -1.0;
    if (predicted == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

namespace {

DroEpochRecord evaluate_epoch(std::int64_t epoch, const DroProblem& problem, ConstSpan x,
                              ConstSpan y, const Dataset& test, const std::vector<double>& eps) {
  DroEpochRecord r;
  r.epoch = epoch;
  r.robust_loss = problem.value(x, y);
  r.clean_loss = problem.clean_loss(x);
  r.clean_accuracy = fgsm_eval(problem.arch(), x, test, 0.0);
  for (double e : eps) r.fgsm_accuracy.push_back(fgsm_eval(problem.arch(), x, test, e));
  return r;
}

}  // namespace

DroTrainResult train_dro(const Dataset& train, const Dataset& test, const DroTrainConfig& config) {
  if (config.epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  MlpArch arch(config.arch);
  DroProblem problem(train, config.gamma, arch);
  // Independent streams for the weights and for the minibatch draws.
  DroMinibatchOracle oracle(problem, config.batch, config.seed * 2 + 1);
  const MlpParams init = init_mlp(arch, config.seed * 2);

  const std::int64_t per_epoch =
      static_cast<std::int64_t>((train.size() + config.batch - 1) / config.batch);
  NeAdaConfig cfg = config.neada;
  cfg.outer_steps = per_epoch * config.epochs;
  cfg.record_every = per_epoch;
  cfg.approx_tol = 0.0;
  cfg.batch = static_cast<std::int64_t>(config.batch);

  NeAdaRunner runner(oracle, cfg, init.values, problem.clean_inputs());
  DroTrainResult result;
  result.epochs.push_back(
      evaluate_epoch(0, problem, runner.x(), runner.y(), test, config.fgsm_eps));
  for (std::int64_t e = 1; e <= config.epochs; ++e) {
    bool alive = true;
    for (std::int64_t s = 0; s < per_epoch && alive; ++s) alive = runner.step();
    if (runner.trajectory().status == RunStatus::kDivergedNonfinite) break;
    result.epochs.push_back(
        evaluate_epoch(e, problem, runner.x(), runner.y(), test, config.fgsm_eps));
  }
  result.params = runner.x();
  result.trajectory = runner.take_trajectory();
  return result;
}

}  // namespace neada
