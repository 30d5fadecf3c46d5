#include "neada/averagers.hpp"

#include <algorithm>
#include <cmath>

namespace neada {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "psi gamma must lie strictly inside (0, 1)");
  }
}

bool active(std::span<const std::uint8_t> mask, std::size_t i) {
  return mask.empty() || mask[i] != 0;
}

}  // namespace

PsiVariant PsiVariant::adam(double gamma) {
  check_gamma(gamma);
  return {PsiKind::kAdam, gamma};
}

PsiVariant PsiVariant::amsgrad(double gamma) {
  check_gamma(gamma);
  return {PsiKind::kAmsGrad, gamma};
}

const char* to_string(PsiKind kind) {
  switch (kind) {
    case PsiKind::kGda: return "gda";
    case PsiKind::kAdaGrad: return "adagrad";
    case PsiKind::kAdam: return "adam";
    case PsiKind::kAmsGrad: return "amsgrad";
  }
  return "unknown";
}

PsiKind parse_psi_kind(const std::string& name) {
  if (name == "gda") return PsiKind::kGda;
  if (name == "adagrad") return PsiKind::kAdaGrad;
  if (name == "adam") return PsiKind::kAdam;
  if (name == "amsgrad") return PsiKind::kAmsGrad;
  throw Error(ErrorCode::kInvalidArgument, "unknown psi variant '" + name + "'");
}

AveragerState::AveragerState(std::size_t dim, PsiVariant variant, double beta, double v0,
                             AveragerMode mode)
    : variant_(variant), mode_(mode), beta_(beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "beta must lie in [0, 1)");
  }
  if (!(v0 >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "v0 must be >= 0");
  if (variant.kind == PsiKind::kAdam || variant.kind == PsiKind::kAmsGrad) {
    check_gamma(variant.gamma);
  }
  const std::size_t vdim = mode == AveragerMode::kScalar ? 1 : dim;
  m_.assign(dim, 0.0);
  v_.assign(vdim, variant.kind == PsiKind::kGda ? 1.0 : v0);
  v_hat_.assign(vdim, 0.0);
}

void AveragerState::update(ConstSpan g, std::span<const std::uint8_t> mask) {
  require_dim(g.size(), m_.size(), "gradient");
  if (!mask.empty()) {
    require_dim(mask.size(), m_.size(), "mask");
    if (mode_ == AveragerMode::kScalar) {
      throw Error(ErrorCode::kInvalidArgument, "masked updates need per-coordinate mode");
    }
  }

  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (active(mask, i)) m_[i] = beta_ * m_[i] + (1.0 - beta_) * g[i];
  }

  auto psi = [this](double& v, double& vhat, double g2) {
    switch (variant_.kind) {
      case PsiKind::kGda:
        v = 1.0;
        break;
      case PsiKind::kAdaGrad:
        v += g2;
        break;
      case PsiKind::kAdam:
        v = variant_.gamma * v + (1.0 - variant_.gamma) * g2;
        break;
      case PsiKind::kAmsGrad:
        v = variant_.gamma * v + (1.0 - variant_.gamma) * g2;
        vhat = std::max(vhat, v);
        break;
    }
  };

  if (mode_ == AveragerMode::kScalar) {
    psi(v_[0], v_hat_[0], norm2(g));
  } else {
    for (std::size_t i = 0; i < v_.size(); ++i) {
      if (active(mask, i)) psi(v_[i], v_hat_[i], g[i] * g[i]);
    }
  }
  ++updates_;
}

const Vec& AveragerState::denominator() const {
  if (variant_.kind == PsiKind::kAmsGrad && updates_ > 0) return v_hat_;
  return v_;
}

void AveragerState::effective_step(double eta, MutSpan out,
                                   std::span<const std::uint8_t> mask) const {
  require_dim(out.size(), m_.size(), "step buffer");
  if (!mask.empty()) require_dim(mask.size(), m_.size(), "mask");
  const Vec& den = denominator();
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double d = den[mode_ == AveragerMode::kScalar ? 0 : i];
    if (!active(mask, i) || m_[i] == 0.0 || d == 0.0) {
      out[i] = 0.0;
    } else {
      out[i] = eta / std::sqrt(d) * m_[i];
    }
  }
}

Vec AveragerState::effective_step(double eta, std::span<const std::uint8_t> mask) const {
  Vec out(m_.size());
  effective_step(eta, out, mask);
  return out;
}

}  // namespace neada
