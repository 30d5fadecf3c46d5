#pragma once

// Desk-scale distributionally robust training: a dense ELU network with
// hand-written reverse mode, synthetic circle data, the penalised DRO
// objective and FGSM evaluation.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "neada/core.hpp"
#include "neada/drivers.hpp"

namespace neada {

// Layer widths from input to the scalar output, e.g. {2, 16, 16, 1}.
class MlpArch {
 public:
  explicit MlpArch(std::vector<std::size_t> sizes);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t param_count() const { return param_count_; }
  // Offset of layer l's weight block (row-major n_out x n_in) and bias block.
  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
  std::size_t bias_offset(std::size_t l) const {
    return offsets_[l] + sizes_[l + 1] * sizes_[l];
  }
  std::size_t max_width() const { return max_width_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
  std::size_t max_width_ = 0;
};

struct MlpParams {
  MlpArch arch;
  Vec values;
};

// Scaled-normal weights (std sqrt(1 / fan_in)), zero biases.
MlpParams init_mlp(const MlpArch& arch, std::uint64_t seed);

struct MlpOutput {
  double output = 0.0;
  double loss = 0.0;
};

double elu(double z);

// Forward pass only.
double mlp_forward(const MlpArch& arch, ConstSpan params, ConstSpan input);

// Logistic loss log(1 + exp(-label * out)) with gradients. Either gradient
// span may be empty to skip it; non-empty ones are overwritten.
MlpOutput mlp_forward_backward(const MlpArch& arch, ConstSpan params, ConstSpan input,
                               double label, MutSpan grad_params, MutSpan grad_input);

double logistic_loss(double output, double label);

struct Dataset {
  std::vector<std::array<double, 2>> inputs;
  std::vector<double> labels;  // +1 / -1

  std::size_t size() const { return labels.size(); }
};

inline constexpr double kMarginFactor = 1.3;

// Draws n_raw points from N(0, I_2), labels sign(||v|| - sqrt 2), drops the
// band sqrt2/1.3 < ||v|| < 1.3 sqrt2.
Dataset make_synthetic_dataset(std::size_t n_raw, std::uint64_t seed);
// Keeps drawing until exactly n_kept points survive the band filter.
Dataset make_synthetic_dataset_kept(std::size_t n_kept, std::uint64_t seed);
// Label of a point, or 0 when the point falls in the removed band.
double synthetic_label(double v1, double v2);

void save_dataset_csv(const Dataset& data, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

// f(x, y) = (1/n) sum_i [l_i(x, y_i) - gamma ||y_i - v_i||^2] with x the
// network parameters and y the n perturbed inputs stacked.
class DroProblem final : public MinimaxProblem {
 public:
  DroProblem(Dataset data, double gamma, MlpArch arch);

  using MinimaxProblem::grad_x;
  using MinimaxProblem::grad_y;

  std::size_t dim_x() const override { return arch_.param_count(); }
  std::size_t dim_y() const override { return 2 * data_.size(); }
  double value(ConstSpan x, ConstSpan y) const override;
  void grad_x(ConstSpan x, ConstSpan y, MutSpan out) const override;
  void grad_y(ConstSpan x, ConstSpan y, MutSpan out) const override;
  Vec y_reference() const override { return clean_inputs(); }

  const Dataset& data() const { return data_; }
  double gamma() const { return gamma_; }
  const MlpArch& arch() const { return arch_; }
  Vec clean_inputs() const;

  // Per-sample term l_i - gamma ||y_i - v_i||^2 and its gradients.
  double sample_term(std::size_t i, ConstSpan x, ConstSpan y_i, MutSpan grad_params,
                     MutSpan grad_yi) const;
  // Mean clean logistic loss of the parameters.
  double clean_loss(ConstSpan x) const;

 private:
  Dataset data_;
  double gamma_;
  MlpArch arch_;
};

std::unique_ptr<DroProblem> make_dro_problem(Dataset data, double gamma, MlpArch arch);

// Minibatch oracle: begin_outer_step draws `batch` indices uniformly with
// replacement; y gradients are the per-sample block gradients on the drawn
// blocks and zero elsewhere (with a matching mask), x gradients average the
// per-sample parameter gradients over the draw.
class DroMinibatchOracle final : public GradientOracle {
 public:
  DroMinibatchOracle(const DroProblem& problem, std::size_t batch, std::uint64_t seed);

  const MinimaxProblem& problem() const override { return problem_; }
  bool deterministic() const override { return false; }
  void begin_outer_step() override;
  void sample_grads(ConstSpan x, ConstSpan y, MutSpan gx, MutSpan gy) override;
  void sample_grad_y(ConstSpan x, ConstSpan y, MutSpan gy) override;
  void sample_grad_x(ConstSpan x, ConstSpan y, std::size_t batch, MutSpan gx) override;
  std::span<const std::uint8_t> y_mask() const override { return mask_; }

  const std::vector<std::size_t>& current_batch() const { return indices_; }

 private:
  const DroProblem& problem_;
  std::size_t batch_;
  Rng rng_;
  std::vector<std::size_t> indices_;
  std::vector<std::uint8_t> mask_;
  Vec scratch_;
};

// FGSM accuracy: each input moves by epsilon * sign(d loss / d input), the
// prediction is +1 iff the network output is positive.
double fgsm_eval(const MlpArch& arch, ConstSpan params, const Dataset& test, double epsilon);
std::array<double, 2> fgsm_perturb(std::array<double, 2> input, std::array<double, 2> grad,
                                   double epsilon);

struct DroTrainConfig {
  std::vector<std::size_t> arch{2, 16, 16, 1};
  double gamma = 1.3;
  std::size_t batch = 128;
  std::int64_t epochs = 50;
  NeAdaConfig neada{};
  std::vector<double> fgsm_eps{0.1, 0.05, 0.02};
  std::uint64_t seed = 0;
};

struct DroEpochRecord {
  std::int64_t epoch = 0;  // 0 = before training
  double robust_loss = 0.0;
  double clean_loss = 0.0;
  double clean_accuracy = 0.0;
  std::vector<double> fgsm_accuracy;  // one per fgsm_eps
};

struct DroTrainResult {
  Trajectory trajectory;
  std::vector<DroEpochRecord> epochs;
  Vec params;
};

// Nested training on the minibatch oracle; outer steps per epoch =
// ceil(n / batch).
DroTrainResult train_dro(const Dataset& train, const Dataset& test, const DroTrainConfig& config);

}  // namespace neada
