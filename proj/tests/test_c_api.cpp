#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "neada/neada.h"

TEST_SUITE("c_api") {

TEST_CASE("version and status strings") {
  CHECK(std::string(neada_version()) == "1.0.0");
  CHECK(std::string(neada_rng_id()) == "mt19937_64+polar-normal/v1");
  CHECK(std::string(neada_status_string(NEADA_OK)) == "ok");
  CHECK(std::string(neada_status_string(NEADA_ERR_SHAPE)) == "shape-error");
  CHECK(std::string(neada_status_string(NEADA_ERR_LOG_DOMAIN)) == "log-domain-error");
}

TEST_CASE("problem handles") {
  neada_problem* q = nullptr;
  REQUIRE(neada_problem_quadratic(2.0, &q) == NEADA_OK);
  CHECK(neada_problem_dim_x(q) == 1);
  const double x = 1.0, y = 0.0;
  double v = 0.0, g = 0.0;
  CHECK(neada_problem_value(q, &x, &y, &v) == NEADA_OK);
  CHECK(v == -2.0);
  CHECK(neada_problem_grad_x(q, &x, &y, &g) == NEADA_OK);
  CHECK(g == -4.0);
  CHECK(neada_problem_grad_y(q, &x, &y, &g) == NEADA_OK);
  CHECK(g == 2.0);
  CHECK(neada_problem_y_star(q, &x, &g) == NEADA_OK);
  CHECK(g == 2.0);
  double gx = 0.0, dy = 0.0;
  CHECK(neada_problem_stationarity(q, &x, &y, 0.0, &gx, &dy) == NEADA_OK);
  CHECK(gx == 4.0);
  CHECK(dy == 2.0);
  CHECK(neada_problem_gradient_mapping(q, &x, &y, &g) == NEADA_OK);
  CHECK(g == 2.0);
  neada_problem_free(q);

  neada_problem* bad = nullptr;
  CHECK(neada_problem_quadratic(-1.0, &bad) == NEADA_ERR_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(std::strlen(neada_last_error()) > 0);
  CHECK(neada_problem_mccormick(nullptr) == NEADA_ERR_INVALID_ARGUMENT);
}

TEST_CASE("stationarity unavailable without a closed-form maximiser") {
  neada_dataset* d = nullptr;
  REQUIRE(neada_dataset_synthetic_kept(6, 1, &d) == NEADA_OK);
  const size_t sizes[] = {2, 3, 1};
  neada_problem* p = nullptr;
  REQUIRE(neada_problem_dro(d, 1.3, sizes, 3, &p) == NEADA_OK);
  CHECK(neada_problem_dim_y(p) == 12);
  size_t n = 0;
  REQUIRE(neada_mlp_param_count(sizes, 3, &n) == NEADA_OK);
  CHECK(neada_problem_dim_x(p) == n);
  std::vector<double> x(n), y(12), out(12);
  REQUIRE(neada_mlp_init(sizes, 3, 2, x.data()) == NEADA_OK);
  for (size_t i = 0; i < 6; ++i) {
    double lab = 0.0;
    neada_dataset_point(d, i, &y[2 * i], &y[2 * i + 1], &lab);
  }
  CHECK(neada_problem_y_star(p, x.data(), out.data()) == NEADA_ERR_STATIONARITY_UNAVAILABLE);
  double gx = 0.0, dy = 0.0;
  CHECK(neada_problem_stationarity(p, x.data(), y.data(), 0.0, &gx, &dy) ==
        NEADA_ERR_STATIONARITY_UNAVAILABLE);
  CHECK(neada_problem_stationarity(p, x.data(), y.data(), 1e-8, &gx, &dy) == NEADA_OK);
  CHECK(dy > 0.0);
  CHECK(neada_approx_y_star(p, x.data(), 1e-8, out.data()) == NEADA_OK);
  neada_problem_free(p);
  neada_dataset_free(d);
}

TEST_CASE("nonnested GDA run through the C interface") {
  neada_problem* q = nullptr;
  REQUIRE(neada_problem_quadratic(2.0, &q) == NEADA_OK);
  neada_oracle* o = nullptr;
  REQUIRE(neada_oracle_noisy(q, 0.0, 0, &o) == NEADA_OK);
  neada_nonnested_config c;
  neada_nonnested_config_default(&c);
  c.psi_x.kind = c.psi_y.kind = NEADA_PSI_GDA;
  c.eta_x = 0.01;
  c.eta_y = 0.04;
  c.steps = 100;
  const double x0 = 1.0, y0 = 0.0;
  neada_trajectory* t = nullptr;
  REQUIRE(neada_run_nonnested(o, &c, &x0, &y0, &t) == NEADA_OK);
  CHECK(neada_trajectory_size(t) == 101);
  CHECK(neada_trajectory_status(t) == NEADA_RUN_OK);
  neada_row row;
  REQUIRE(neada_trajectory_row(t, 100, &row) == NEADA_OK);
  CHECK(row.outer_t == 100);
  CHECK(row.grad_x_norm == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(neada_trajectory_row(t, 101, &row) == NEADA_ERR_INVALID_ARGUMENT);
  double buf[2];
  CHECK(neada_trajectory_x(t, 0, buf, 1) == NEADA_OK);
  CHECK(buf[0] == 1.0);
  CHECK(neada_trajectory_x(t, 0, buf, 2) == NEADA_ERR_SHAPE);
  CHECK(neada_oracle_calls_x(o) == 100);
  neada_trajectory_free(t);
  neada_oracle_free(o);
  neada_problem_free(q);
}

TEST_CASE("nested run through the C interface") {
  neada_problem* m = nullptr;
  REQUIRE(neada_problem_mccormick(&m) == NEADA_OK);
  neada_oracle* o = nullptr;
  REQUIRE(neada_oracle_noisy(m, 0.0, 0, &o) == NEADA_OK);
  neada_neada_config c;
  neada_neada_config_default(&c);
  c.outer_steps = 200;
  c.eta = 0.5;
  const double x0[] = {1.0, 1.0}, y0[] = {0.0, 0.0};
  neada_trajectory* t = nullptr;
  REQUIRE(neada_run_neada(o, &c, x0, y0, &t) == NEADA_OK);
  REQUIRE(neada_trajectory_size(t) == 200);
  neada_row first, last;
  neada_trajectory_row(t, 0, &first);
  neada_trajectory_row(t, 199, &last);
  CHECK(last.stationarity < first.stationarity);
  neada_trajectory_free(t);

  c.v0 = 0.0;
  CHECK(neada_run_neada(o, &c, x0, y0, &t) == NEADA_ERR_INVALID_ARGUMENT);
  neada_oracle_free(o);
  neada_problem_free(m);
}

TEST_CASE("analysis functions") {
  double out = 0.0;
  CHECK(neada_lemma1_gda_predict(2.0, 1.0, 0.1, -4.0, 2, &out) == NEADA_OK);
  CHECK(out == doctest::Approx(-6.76).epsilon(1e-14));
  const double v[] = {4.0, 16.0};
  CHECK(neada_lemma1_adaptive_bound(2.0, 1.0, 0.1, 0.0, v, 2, -4.0, 2, &out) == NEADA_OK);
  CHECK(out == doctest::Approx(-4.62).epsilon(1e-14));
  CHECK(neada_lemma1_adaptive_bound(2.0, 1.0, 0.1, 0.0, v, 2, -4.0, 3, &out) == NEADA_ERR_SHAPE);

  std::vector<double> xs, ys;
  for (int i = 1; i <= 20; ++i) {
    xs.push_back(i);
    ys.push_back(1.0 / i);
  }
  neada_slope_fit fit;
  CHECK(neada_fit_loglog_slope(xs.data(), ys.data(), xs.size(), 0.0, &fit) == NEADA_OK);
  CHECK(std::abs(fit.slope + 1.0) <= 1e-9);
  ys[2] = -1.0;
  CHECK(neada_fit_loglog_slope(xs.data(), ys.data(), xs.size(), 0.0, &fit) ==
        NEADA_ERR_LOG_DOMAIN);
}

TEST_CASE("generalized AdaGrad and regret") {
  const double x0 = 0.0;
  neada_domain box{1, -1.0, 1.0, 0.0};
  neada_genadagrad* s = nullptr;
  REQUIRE(neada_genadagrad_create(&x0, 1, 1.0, 0.5, 1.0, &box, &s) == NEADA_OK);
  const double g = -2.0;
  CHECK(neada_genadagrad_step(s, &g) == NEADA_OK);
  double x = 0.0;
  neada_genadagrad_x(s, &x);
  CHECK(x == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-15));
  CHECK(neada_genadagrad_v(s) == 5.0);
  neada_genadagrad_free(s);
  neada_genadagrad* bad = nullptr;
  CHECK(neada_genadagrad_create(&x0, 1, 1.0, 0.5, 0.0, &box, &bad) == NEADA_ERR_INVALID_ARGUMENT);

  const double centers[] = {1.0, -1.0};
  const double iters[] = {0.0, 0.0};
  double r = 0.0;
  CHECK(neada_quadratic_stream_regret(centers, iters, 2, 1, &box, &r) == NEADA_OK);
  CHECK(r == doctest::Approx(0.0).epsilon(1e-15));
  neada_domain whole{0, 0.0, 0.0, INFINITY};
  CHECK(neada_quadratic_stream_regret(centers, iters, 2, 1, &whole, &r) ==
        NEADA_ERR_COMPACT_DOMAIN_REQUIRED);
}

TEST_CASE("datasets, network and training") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "neada_c_api_data.csv").string();
  neada_dataset* d = nullptr;
  REQUIRE(neada_dataset_synthetic(300, 4, &d) == NEADA_OK);
  const size_t n = neada_dataset_size(d);
  CHECK(n < 300);
  REQUIRE(neada_dataset_save_csv(d, path.c_str()) == NEADA_OK);
  neada_dataset* back = nullptr;
  REQUIRE(neada_dataset_load_csv(path.c_str(), &back) == NEADA_OK);
  CHECK(neada_dataset_size(back) == n);
  double a1, a2, al, b1, b2, bl;
  neada_dataset_point(d, n - 1, &a1, &a2, &al);
  neada_dataset_point(back, n - 1, &b1, &b2, &bl);
  CHECK(a1 == b1);
  CHECK(a2 == b2);
  CHECK(al == bl);
  CHECK(neada_dataset_point(d, n, &a1, &a2, &al) == NEADA_ERR_INVALID_ARGUMENT);
  neada_dataset_free(back);
  std::filesystem::remove(path);
  neada_dataset* missing = nullptr;
  CHECK(neada_dataset_load_csv("/nonexistent/dir/file.csv", &missing) == NEADA_ERR_IO);

  const size_t sizes[] = {2, 6, 1};
  size_t np = 0;
  neada_mlp_param_count(sizes, 3, &np);
  CHECK(np == 2 * 6 + 6 + 6 + 1);
  std::vector<double> params(np, 0.0), gp(np);
  const double in[] = {0.5, 0.5};
  double loss = 0.0, gi[2];
  CHECK(neada_mlp_forward_backward(sizes, 3, params.data(), in, 1.0, &loss, gp.data(), gi) ==
        NEADA_OK);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(neada_mlp_forward_backward(sizes, 3, params.data(), in, 1.0, &loss, nullptr, nullptr) ==
        NEADA_OK);
  double acc = 0.0;
  CHECK(neada_fgsm_eval(sizes, 3, params.data(), d, 0.1, &acc) == NEADA_OK);
  CHECK(acc > 0.0);

  neada_dataset* test = nullptr;
  neada_dataset_synthetic_kept(50, 5, &test);
  neada_dro_config cfg;
  std::memset(&cfg, 0, sizeof cfg);
  cfg.layer_sizes = sizes;
  cfg.n_layers = 3;
  cfg.gamma = 1.3;
  cfg.batch = 32;
  cfg.epochs = 2;
  neada_neada_config_default(&cfg.neada);
  cfg.neada.criterion.kind = NEADA_CRITERION_II;
  const double eps[] = {0.1};
  cfg.fgsm_eps = eps;
  cfg.n_fgsm_eps = 1;
  cfg.seed = 1;
  neada_dro_result* res = nullptr;
  REQUIRE(neada_dro_train(d, test, &cfg, &res) == NEADA_OK);
  CHECK(neada_dro_result_epochs(res) == 3);
  neada_dro_epoch e;
  double f = -1.0;
  CHECK(neada_dro_result_epoch(res, 2, &e, &f) == NEADA_OK);
  CHECK(e.epoch == 2);
  CHECK(f >= 0.0);
  CHECK(f <= 1.0);
  CHECK(neada_trajectory_size(neada_dro_result_trajectory(res)) > 0);
  neada_dro_result_free(res);
  neada_dataset_free(test);
  neada_dataset_free(d);
}

}  // TEST_SUITE
