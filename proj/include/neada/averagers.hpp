#pragma once

// First-moment (beta) averaging and the psi second-moment rules:
//   GDA      v = 1
//   AdaGrad  v = v0 + sum g_i^2
//   Adam     v = gamma^{t+1} v0 + (1 - gamma) sum gamma^{t-i} g_i^2
//   AMSGrad  running max of the Adam track
// No bias correction and no denominator epsilon: the recurrences are kept
// exactly as written so the scale-homogeneity of v is preserved.

#include <cstdint>
#include <span>

#include "neada/core.hpp"

namespace neada {

enum class PsiKind { kGda, kAdaGrad, kAdam, kAmsGrad };

struct PsiVariant {
  PsiKind kind = PsiKind::kAdaGrad;
  double gamma = 0.0;  // Adam / AMSGrad decay, strictly inside (0, 1)

  static PsiVariant gda() { return {PsiKind::kGda, 0.0}; }
  static PsiVariant adagrad() { return {PsiKind::kAdaGrad, 0.0}; }
  static PsiVariant adam(double gamma);
  static PsiVariant amsgrad(double gamma);
};

const char* to_string(PsiKind kind);
PsiKind parse_psi_kind(const std::string& name);

enum class AveragerMode { kPerCoordinate, kScalar };

class AveragerState {
 public:
  AveragerState() = default;
  // v0 is broadcast to every coordinate (or the single scalar accumulator).
  AveragerState(std::size_t dim, PsiVariant variant, double beta, double v0,
                AveragerMode mode = AveragerMode::kPerCoordinate);

  // m <- beta m + (1 - beta) g, then the psi recurrence. With a non-empty
  // mask only coordinates whose mask byte is set are touched (per-coordinate
  // mode only).
  void update(ConstSpan g, std::span<const std::uint8_t> mask = {});

  // (eta / sqrt(v)) * m coordinate-wise, with 0/0 -> 0. Masked-out
  // coordinates get a zero step.
  Vec effective_step(double eta, std::span<const std::uint8_t> mask = {}) const;
  void effective_step(double eta, MutSpan out, std::span<const std::uint8_t> mask = {}) const;

  // Second moment currently used in the denominator.
  const Vec& denominator() const;

  std::size_t dim() const { return m_.size(); }
  const Vec& m() const { return m_; }
  const Vec& v() const { return v_; }
  const Vec& v_hat() const { return v_hat_; }
  double beta() const { return beta_; }
  const PsiVariant& variant() const { return variant_; }
  AveragerMode mode() const { return mode_; }
  std::uint64_t updates() const { return updates_; }

 private:
  PsiVariant variant_{};
  AveragerMode mode_ = AveragerMode::kPerCoordinate;
  double beta_ = 0.0;
  Vec m_;
  Vec v_;      // psi accumulator (the Adam track for AMSGrad)
  Vec v_hat_;  // AMSGrad running max
  std::uint64_t updates_ = 0;
};

}  // namespace neada
