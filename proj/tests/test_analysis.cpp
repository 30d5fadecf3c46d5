#include <cmath>
#include <vector>

#include "doctest.h"
#include "neada/analysis.hpp"
#include "neada/drivers.hpp"
#include "neada/problems.hpp"
#include "test_util.hpp"

using namespace neada;

TEST_SUITE("analysis") {

TEST_CASE("GDA prediction examples") {
  CHECK(lemma1_gda_predict(2.0, 1.0, 0.1, -4.0, 1) == doctest::Approx(-5.2).epsilon(1e-14));
  CHECK(lemma1_gda_predict(2.0, 1.0, 0.1, -4.0, 2) == doctest::Approx(-6.76).epsilon(1e-14));
  CHECK(lemma1_gda_predict(2.0, 4.0, 0.1, -4.0, 50) == -4.0);
  CHECK(lemma1_gda_predict(2.0, 1.0, 0.1, -4.0, 0) == -4.0);
  // 1 + eta (L^2 - r) = 0 kills the gradient after one step.
  CHECK(lemma1_gda_predict(2.0, 14.0, 0.1, -4.0, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(lemma1_gda_predict(0.0, 1.0, 0.1, 1.0, 1), Error);
  CHECK_THROWS_AS(lemma1_gda_predict(2.0, 1.0, -0.1, 1.0, 1), Error);
  CHECK_THROWS_AS(lemma1_gda_predict(2.0, 1.0, 0.1, 1.0, -1), Error);
}

TEST_CASE("adaptive bound examples") {
  const std::vector<double> v{4.0, 16.0};
  // factors 1 + (2 * 0.1 / 2)(1)(1) = 1.1 and 1 + (0.2 / 4) = 1.05
  CHECK(lemma1_adaptive_bound(2.0, 1.0, 0.1, 0.0, v, -4.0, 2) ==
        doctest::Approx(-4.0 * 1.1 * 1.05).epsilon(1e-14));
  CHECK(lemma1_adaptive_bound(2.0, 2.0, 0.1, 0.0, v, -4.0, 2) == -4.0);
  CHECK(lemma1_adaptive_bound(2.0, 1.0, 0.1, 0.5, v, -4.0, 1) ==
        doctest::Approx(-4.0 * 1.05).epsilon(1e-14));
  CHECK_THROWS_AS(lemma1_adaptive_bound(2.0, 1.0, 0.1, 0.0, v, -4.0, 3), Error);
}

TEST_CASE("adaptive bound is met by a short AdaGrad run") {
  auto q = make_quadratic(2.0);
  NoisyOracle o(*q, 0.0, 0);
  NonNestedConfig c;
  c.eta_x = 0.1;
  c.eta_y = 0.1;  // r = 1 < L
  c.psi_x = c.psi_y = PsiVariant::adagrad();
  NonNestedRunner run(o, c, Vec{1.0}, Vec{0.0});
  std::vector<double> v_trace;
  const double g0 = q->grad_x(Vec{1.0}, Vec{0.0})[0];
  for (int t = 1; t <= 10; ++t) {
    run.step();
    v_trace.push_back(run.averager_x().denominator()[0]);
    const double g = q->grad_x(run.x(), run.y())[0];
    const double bound = lemma1_adaptive_bound(2.0, 1.0, 0.1, 0.0, v_trace, g0, t);
    CHECK(std::abs(g) >= std::abs(bound) * (1.0 - 1e-12));
  }
}

TEST_CASE("log-log slope fits") {
  std::vector<double> xs, ys, ys2;
  for (int i = 1; i <= 50; ++i) {
    xs.push_back(i);
    ys.push_back(3.0 / i);
    ys2.push_back(0.2 * std::sqrt(static_cast<double>(i)));
  }
  const SlopeFit a = fit_loglog_slope(xs, ys);
  CHECK(std::abs(a.slope + 1.0) <= 1e-9);
  CHECK(std::abs(a.intercept - std::log(3.0)) <= 1e-9);
  CHECK(a.residual <= 1e-9);
  CHECK(a.points == 50);
  CHECK(std::abs(fit_loglog_slope(xs, ys2).slope - 0.5) <= 1e-9);

  const SlopeFit w = fit_loglog_slope_window(xs, ys, 0.5);
  CHECK(w.points == 25);
  CHECK(std::abs(w.slope + 1.0) <= 1e-9);

  std::vector<double> bad = ys;
  bad[3] = 0.0;
  try {
    fit_loglog_slope(xs, bad);
    FAIL("expected log-domain-error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLogDomainError);
  }
  const std::vector<double> two{1.0, 2.0};
  CHECK_THROWS_AS(fit_loglog_slope(two, two), Error);
  const std::vector<double> same{2.0, 2.0, 2.0};
  CHECK_THROWS_AS(fit_loglog_slope(same, same), Error);
  CHECK_THROWS_AS(fit_loglog_slope(xs, two), Error);
}

TEST_CASE("running min and rate fits") {
  const std::vector<double> v{3.0, 1.0, 2.0, 0.5, 4.0};
  const Vec m = running_min(v);
  CHECK(m == Vec{3.0, 1.0, 1.0, 0.5, 0.5});

  std::vector<double> seq;
  for (int t = 0; t < 1000; ++t) seq.push_back(1.0 / std::sqrt(t + 1.0));
  const SlopeFit f = fit_rate(seq);
  CHECK(std::abs(f.slope + 0.5) <= 1e-9);
}

TEST_CASE("criterion II drives the inner distance down like 1/t") {
  // Averaged over seeds, the running mean of ||y_t - y*(x_t)||^2 along a
  // nested run with t + 1 noisy inner steps decays at rate about 1/t.
  const int seeds = 10;
  const std::int64_t T = 400;
  std::vector<double> mean_sq(T, 0.0);
  auto m = make_mccormick();
  for (int s = 0; s < seeds; ++s) {
    NoisyOracle o(*m, 0.1, 100 + s);
    NeAdaConfig c;
    c.eta = 0.1;
    c.criterion = CriterionII{};
    c.outer_steps = T;
    const auto tr = neada_run(o, c, Vec{1.0, 1.0}, Vec{0.0, 0.0});
    REQUIRE(tr.rows.size() == static_cast<std::size_t>(T));
    double acc = 0.0;
    for (std::int64_t t = 0; t < T; ++t) {
      acc += tr.rows[t].dist_y_star * tr.rows[t].dist_y_star;
      mean_sq[t] += acc / static_cast<double>(t + 1) / seeds;
    }
  }
  const SlopeFit f = fit_rate(mean_sq, 0.1);
  CAPTURE(f.slope);
  CHECK(f.slope <= -0.7);
  CHECK(f.slope >= -1.3);
}

}  // TEST_SUITE
