#include <cmath>

#include "doctest.h"
#include "neada/problems.hpp"
#include "test_util.hpp"

using namespace neada;

namespace {

// Central differences of value() against grad_x / grad_y at random points.
void check_fd(const MinimaxProblem& p, std::uint64_t seed, int probes, double h, double tol) {
  Rng rng(seed);
  for (int k = 0; k < probes; ++k) {
    Vec x(p.dim_x()), y(p.dim_y());
    for (auto& v : x) v = 2.0 * rng.normal();
    for (auto& v : y) v = 2.0 * rng.normal();
    const Vec gx = p.grad_x(x, y);
    const Vec gy = p.grad_y(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fd = testutil::central_diff([&](const Vec& z) { return p.value(z, y); }, x, i, h);
      CHECK(std::abs(fd - gx[i]) <= tol);
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double fd = testutil::central_diff([&](const Vec& z) { return p.value(x, z); }, y, i, h);
      CHECK(std::abs(fd - gy[i]) <= tol);
    }
  }
}

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("quadratic family closed forms") {
  auto q = make_quadratic(2.0);
  CHECK(q->dim_x() == 1);
  CHECK(q->dim_y() == 1);
  CHECK(q->grad_x(Vec{1.0}, Vec{0.0})[0] == -4.0);
  CHECK(q->grad_y(Vec{1.0}, Vec{0.0})[0] == 2.0);
  CHECK(q->value(Vec{1.0}, Vec{0.0}) == -2.0);
  CHECK((*q->y_star(Vec{3.0}))[0] == 6.0);
  for (double x : {-2.5, 0.0, 0.7, 3.0}) {
    CHECK(q->grad_y(Vec{x}, Vec{2.0 * x})[0] == 0.0);
    CHECK(q->value(Vec{x}, Vec{2.0 * x}) == 0.0);
  }
  CHECK(*q->smoothness() == 4.0);
  CHECK(*q->strong_concavity() == 1.0);
  CHECK_THROWS_AS(make_quadratic(0.0), Error);
  CHECK_THROWS_AS(make_quadratic(-1.0), Error);
}

TEST_CASE("McCormick composite closed forms") {
  auto m = make_mccormick();
  const Vec gx = m->grad_x(Vec{0.0, 0.0}, Vec{0.0, 0.0});
  CHECK(gx[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(gx[1] == doctest::Approx(3.5).epsilon(1e-15));
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    Vec x{rng.normal(), rng.normal()};
    const Vec gy = m->grad_y(x, x);
    CHECK(gy[0] == 0.0);
    CHECK(gy[1] == 0.0);
    CHECK((*m->y_star(x)) == x);
  }
}

TEST_CASE("analytic gradients match central differences") {
  check_fd(*make_quadratic(2.0), 1, 100, 1e-6, 1e-6);
  check_fd(*make_quadratic(0.5), 2, 100, 1e-6, 1e-6);
  check_fd(*make_mccormick(), 3, 100, 1e-6, 1e-6);
}

TEST_CASE("McCormick primal function equals f at y*") {
  auto m = make_mccormick();
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    Vec x{3.0 * rng.normal(), 3.0 * rng.normal()};
    const double f = m->value(x, *m->y_star(x));
    CHECK(std::abs(f - McCormickComposite::primal(x)) <= 1e-12 * std::max(1.0, std::abs(f)));
  }
}

TEST_CASE("noise wrapper") {
  auto m = make_mccormick();
  const Vec x{0.3, -0.2}, y{0.1, 0.4};

  SUBCASE("sigma zero is the base oracle") {
    auto o = add_noise(*m, NoiseSpec{0.0}, 1);
    Vec gx(2), gy(2);
    o->sample_grads(x, y, gx, gy);
    CHECK(gx == m->grad_x(x, y));
    CHECK(gy == m->grad_y(x, y));
  }
  SUBCASE("same seed, same stream") {
    auto a = add_noise(*m, NoiseSpec{0.01}, 17);
    auto b = add_noise(*m, NoiseSpec{0.01}, 17);
    auto c = add_noise(*m, NoiseSpec{0.01}, 18);
    Vec ga(2), gb(2), gc(2), hy(2);
    bool differs = false;
    for (int k = 0; k < 100; ++k) {
      a->sample_grads(x, y, ga, hy);
      b->sample_grads(x, y, gb, hy);
      c->sample_grads(x, y, gc, hy);
      CHECK(ga == gb);
      if (ga != gc) differs = true;
    }
    CHECK(differs);
  }
  SUBCASE("noise mean is zero") {
    const double sigma = 0.01;
    auto o = add_noise(*m, NoiseSpec{sigma}, 5);
    const Vec base = m->grad_y(x, y);
    const int n = 100000;
    double sum = 0.0;
    Vec gy(2);
    for (int k = 0; k < n; ++k) {
      o->sample_grad_y(x, y, gy);
      sum += gy[0] - base[0];
    }
    CHECK(std::abs(sum / n) <= 5.0 * sigma / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("minibatch x-gradient shrinks the spread") {
    const double sigma = 0.01;
    const std::size_t M = 100;
    auto o = add_noise(*m, NoiseSpec{sigma}, 9);
    const Vec base = m->grad_x(x, y);
    const int n = 10000;
    double s2 = 0.0;
    Vec gx(2);
    for (int k = 0; k < n; ++k) {
      o->sample_grad_x(x, y, M, gx);
      s2 += (gx[0] - base[0]) * (gx[0] - base[0]);
    }
    const double std_est = std::sqrt(s2 / n);
    CHECK(std_est == doctest::Approx(0.001).epsilon(0.2));
    CHECK(o->calls_x() == static_cast<std::uint64_t>(n) * M);
  }
  SUBCASE("negative sigma is rejected") {
    CHECK_THROWS_AS(add_noise(*m, NoiseSpec{-1.0}, 0), Error);
  }
}

}  // TEST_SUITE
