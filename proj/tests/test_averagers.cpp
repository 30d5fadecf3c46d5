#include <cmath>
#include <vector>

#include "doctest.h"
#include "neada/averagers.hpp"
#include "test_util.hpp"

using namespace neada;

namespace {

Vec one(double v) { return Vec{v}; }

}  // namespace

TEST_SUITE("averagers") {

TEST_CASE("GDA keeps v at one") {
  AveragerState s(3, PsiVariant::gda(), 0.0, 0.0);
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    s.update(Vec{rng.normal(), 10.0 * rng.normal(), 0.0});
    for (double v : s.denominator()) CHECK(v == 1.0);
  }
}

TEST_CASE("AdaGrad running sum") {
  AveragerState s(1, PsiVariant::adagrad(), 0.0, 0.0);
  s.update(one(2.0));
  CHECK(s.v()[0] == 4.0);
  s.update(one(1.0));
  CHECK(s.v()[0] == 5.0);
}

TEST_CASE("Adam and AMSGrad recurrences") {
  AveragerState adam(1, PsiVariant::adam(0.9), 0.0, 0.0);
  adam.update(one(1.0));
  CHECK(adam.v()[0] == doctest::Approx(0.1).epsilon(1e-15));
  adam.update(one(1.0));
  CHECK(adam.v()[0] == doctest::Approx(0.19).epsilon(1e-15));

  AveragerState ams(1, PsiVariant::amsgrad(0.9), 0.0, 0.0);
  ams.update(one(1.0));
  CHECK(ams.denominator()[0] == doctest::Approx(0.1).epsilon(1e-15));
  ams.update(one(1.0));
  CHECK(ams.denominator()[0] == doctest::Approx(0.19).epsilon(1e-15));
  ams.update(one(0.0));
  CHECK(ams.v()[0] == doctest::Approx(0.171).epsilon(1e-15));
  CHECK(ams.v_hat()[0] == doctest::Approx(0.19).epsilon(1e-15));
  CHECK(ams.denominator()[0] == doctest::Approx(0.19).epsilon(1e-15));
}

TEST_CASE("gamma must lie inside (0, 1)") {
  CHECK_THROWS_AS(PsiVariant::adam(0.0), Error);
  CHECK_THROWS_AS(PsiVariant::adam(1.0), Error);
  CHECK_THROWS_AS(PsiVariant::amsgrad(-0.5), Error);
  CHECK_THROWS_AS(AveragerState(1, PsiVariant::adagrad(), 1.0, 0.0), Error);
  CHECK_THROWS_AS(AveragerState(1, PsiVariant::adagrad(), 0.0, -1.0), Error);
}

TEST_CASE("psi names round-trip") {
  for (PsiKind k : {PsiKind::kGda, PsiKind::kAdaGrad, PsiKind::kAdam, PsiKind::kAmsGrad}) {
    CHECK(parse_psi_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_psi_kind("rmsprop"), Error);
}

TEST_CASE("dimension mismatch is a shape error") {
  AveragerState s(2, PsiVariant::adagrad(), 0.0, 0.0);
  try {
    s.update(Vec{1.0, 2.0, 3.0});
    FAIL("expected shape-error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeError);
  }
}

TEST_CASE("effective step") {
  SUBCASE("scalar AdaGrad") {
    AveragerState s(2, PsiVariant::adagrad(), 0.0, 0.0, AveragerMode::kScalar);
    s.update(Vec{3.0, 4.0});
    CHECK(s.v()[0] == 25.0);
    const Vec step = s.effective_step(0.5);
    CHECK(step[0] == doctest::Approx(0.5 / 5.0 * 3.0).epsilon(1e-15));
    CHECK(step[1] == doctest::Approx(0.5 / 5.0 * 4.0).epsilon(1e-15));
  }
  SUBCASE("zero moment gives zero step") {
    AveragerState s(2, PsiVariant::adagrad(), 0.0, 1.0);
    const Vec step = s.effective_step(1.0);
    CHECK(step[0] == 0.0);
    CHECK(step[1] == 0.0);
  }
  SUBCASE("zero over zero") {
    AveragerState s(2, PsiVariant::adam(0.9), 0.5, 0.0);
    s.update(Vec{0.0, 2.0});
    const Vec step = s.effective_step(1.0);
    CHECK(step[0] == 0.0);
    CHECK(std::isfinite(step[1]));
  }
  SUBCASE("GDA is a plain gradient step") {
    AveragerState s(2, PsiVariant::gda(), 0.0, 0.0);
    s.update(Vec{0.3, -7.0});
    const Vec step = s.effective_step(0.01);
    CHECK(step[0] == 0.01 * 0.3);
    CHECK(step[1] == 0.01 * -7.0);
  }
  SUBCASE("masked coordinates stay put") {
    AveragerState s(3, PsiVariant::adagrad(), 0.0, 1.0);
    const std::vector<std::uint8_t> mask{1, 0, 1};
    s.update(Vec{1.0, 5.0, 2.0}, mask);
    CHECK(s.v()[1] == 1.0);
    const Vec step = s.effective_step(1.0, mask);
    CHECK(step[1] == 0.0);
    CHECK(step[0] != 0.0);
  }
}

TEST_CASE("incremental recurrences equal the explicit formulas") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const double v0 = trial % 2 == 0 ? 0.0 : std::abs(rng.normal());
    const double gamma = 0.5 + 0.49 * rng.uniform();
    const double beta = 0.9 * rng.uniform();
    const int T = 1 + static_cast<int>(rng.index(50));
    std::vector<double> g(T);
    for (auto& v : g) v = 3.0 * rng.normal();

    AveragerState gda(1, PsiVariant::gda(), beta, v0);
    AveragerState ada(1, PsiVariant::adagrad(), beta, v0);
    AveragerState adam(1, PsiVariant::adam(gamma), beta, v0);
    AveragerState ams(1, PsiVariant::amsgrad(gamma), beta, v0);
    double running_max = 0.0;
    for (int t = 0; t < T; ++t) {
      for (auto* s : {&gda, &ada, &adam, &ams}) s->update(one(g[t]));
      double sum = 0.0, ema = std::pow(gamma, t + 1) * v0, m = 0.0;
      for (int i = 0; i <= t; ++i) {
        sum += g[i] * g[i];
        ema += (1.0 - gamma) * std::pow(gamma, t - i) * g[i] * g[i];
        m += (1.0 - beta) * std::pow(beta, t - i) * g[i];
      }
      running_max = std::max(running_max, ema);
      CHECK(gda.denominator()[0] == 1.0);
      CHECK(testutil::rel_close(ada.denominator()[0], v0 + sum, 1e-12));
      CHECK(testutil::rel_close(adam.denominator()[0], ema, 1e-12));
      CHECK(testutil::rel_close(ams.denominator()[0], running_max, 1e-12));
      CHECK(testutil::rel_close(ada.m()[0], m, 1e-12, 1e-12));
    }
  }
}

TEST_CASE("second moments are homogeneous in the squared-gradient scale") {
  Rng rng(77);
  for (double tau : {0.25, 4.0, 9.0}) {
    for (PsiVariant psi : {PsiVariant::adagrad(), PsiVariant::adam(0.99),
                           PsiVariant::amsgrad(0.9)}) {
      const double v0y = 0.5;
      AveragerState sy(1, psi, 0.0, v0y);
      AveragerState sx(1, psi, 0.0, tau * v0y);
      for (int t = 0; t < 40; ++t) {
        const double gy = rng.normal();
        sy.update(one(gy));
        sx.update(one(std::sqrt(tau) * gy));
        CHECK(testutil::rel_close(sx.denominator()[0], tau * sy.denominator()[0], 1e-12));
      }
    }
  }
}

TEST_CASE("AdaGrad v and AMSGrad v_hat never decrease") {
  Rng rng(8);
  AveragerState ada(4, PsiVariant::adagrad(), 0.3, 0.0);
  AveragerState ams(4, PsiVariant::amsgrad(0.8), 0.3, 0.0);
  Vec prev_ada(4, 0.0), prev_ams(4, 0.0);
  for (int t = 0; t < 200; ++t) {
    Vec g(4);
    for (auto& v : g) v = (t % 17 == 0 ? 10.0 : 0.1) * rng.normal();
    ada.update(g);
    ams.update(g);
    for (int i = 0; i < 4; ++i) {
      CHECK(ada.v()[i] >= prev_ada[i]);
      CHECK(ams.denominator()[i] >= prev_ams[i]);
    }
    prev_ada = ada.v();
    prev_ams = ams.denominator();
  }
}

}  // TEST_SUITE
