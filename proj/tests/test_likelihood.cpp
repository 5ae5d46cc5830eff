#include <doctest.h>

#include <cmath>

#include "sfa/likelihood.hpp"
#include "sfa/simulate.hpp"

using namespace sfa;

namespace {

// Random demeaned vector of length t.
Eigen::VectorXd random_demeaned(Rng& rng, int t) {
  Eigen::VectorXd v(t);
  for (int i = 0; i < t; ++i) v(i) = rng.normal();
  demean_in_place(v);
  return v;
}

TransformedPanel small_panel(std::uint64_t seed, int firms, int t_min, int t_max) {
  DgpSpec spec = DgpSpec::defaults();
  spec.n_firms = firms;
  spec.t_min = t_min;
  spec.t_max = t_max;
  spec.seed = seed;
  return transform_panel(generate_panel(spec).data, spec.base_year);
}

ParameterVector random_params(Rng& rng, int n_det) {
  Eigen::VectorXd beta(14);
  for (int j = 0; j < 14; ++j) beta(j) = rng.normal(0.3);
  Eigen::VectorXd delta(n_det);
  for (int k = 0; k < n_det; ++k) delta(k) = rng.normal(0.4);
  return ParameterVector::pack(beta, delta, std::log(0.2 + rng.uniform()),
                               std::log(0.1 + 0.5 * rng.uniform()));
}

}  // namespace

TEST_CASE("scaling_values") {
  SUBCASE("delta = 0 gives h = 1") {
    const Eigen::MatrixXd z = Eigen::MatrixXd::Random(5, 2);
    const Eigen::VectorXd h = scaling_values(Eigen::Vector2d::Zero(), z);
    CHECK((h.array() - 1.0).abs().maxCoeff() == 0.0);
  }
  SUBCASE("single time determinant") {
    Eigen::MatrixXd z(3, 1);
    z << 0, 1, 2;
    Eigen::VectorXd delta(1);
    delta << 0.1;
    const Eigen::VectorXd h = scaling_values(delta, z);
    CHECK(h(0) == doctest::Approx(1.0));
    CHECK(h(1) == doctest::Approx(std::exp(0.1)));
    CHECK(h(2) == doctest::Approx(std::exp(0.2)));
  }
  SUBCASE("ownership-dummy effect reproduces the 57% reading") {
    Eigen::MatrixXd z(1, 1);
    z << 1.0;
    Eigen::VectorXd delta(1);
    delta << -0.835;
    const Eigen::VectorXd h = scaling_values(delta, z);
    CHECK(h(0) == doctest::Approx(0.4339).epsilon(1e-4));
    CHECK(1.0 - h(0) == doctest::Approx(0.5661).epsilon(1e-3));
  }
  SUBCASE("overflow is an error, not saturation") {
    Eigen::MatrixXd z(1, 1);
    z << 1.0;
    Eigen::VectorXd delta(1);
    delta << 710.0;
    CHECK_THROWS_AS(scaling_values(delta, z), EvaluationError);
  }
}

TEST_CASE("quadratic_form against dense pseudo-inverse oracle") {
  SUBCASE("explicit 2x2 case") {
    Eigen::VectorXd eps(2);
    eps << -1.0, 1.0;
    CHECK(quadratic_form(eps, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
    const Eigen::MatrixXd pinv = dense_pseudo_inverse(dense_pi(2, 1.0));
    CHECK(eps.dot(pinv * eps) == doctest::Approx(2.0).epsilon(1e-10));
  }
  SUBCASE("zero vector") {
    CHECK(quadratic_form(Eigen::VectorXd::Zero(4), 0.7) == 0.0);
  }
  SUBCASE("random demeaned vectors, T = 5") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd eps = random_demeaned(rng, 5);
      const double sigma_v = 0.5 + rng.uniform();
      const Eigen::MatrixXd pinv = dense_pseudo_inverse(dense_pi(5, sigma_v));
      const double oracle = eps.dot(pinv * eps);
      CHECK(quadratic_form(eps, sigma_v) == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
  SUBCASE("non-demeaned input rejected") {
    Eigen::VectorXd eps(3);
    eps << 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(quadratic_form(eps, 1.0), ConfigError);
  }
}

TEST_CASE("pseudo-inverse identities for T in 2..6") {
  for (int t = 2; t <= 6; ++t) {
    const Eigen::MatrixXd pi = dense_pi(t, 0.8);
    const Eigen::MatrixXd pinv = dense_pseudo_inverse(pi);
    CHECK((pi * pinv * pi - pi).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((pinv * pi * pinv - pinv).cwiseAbs().maxCoeff() <= 1e-10);
    // Closed form: Pi^- = sigma_v^{-2} (I - J/T).
    const Eigen::MatrixXd closed =
        (Eigen::MatrixXd::Identity(t, t) - Eigen::MatrixXd::Constant(t, t, 1.0 / t)) /
        (0.8 * 0.8);
    CHECK((pinv - closed).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("mu1_sigma1") {
  SUBCASE("h demeaned to zero collapses to the prior") {
    Rng rng(5);
    const Eigen::VectorXd eps = random_demeaned(rng, 4);
    const Posterior post = mu1_sigma1(eps, Eigen::VectorXd::Zero(4), 0.7, 0.3);
    CHECK(post.mu1 == 0.0);
    CHECK(post.sigma1 == doctest::Approx(0.7).epsilon(1e-14));
  }
  SUBCASE("orthogonal residual with nonzero h") {
    Eigen::VectorXd h(4), eps(4);
    h << -1, 1, -1, 1;
    eps << -1, -1, 1, 1;  // eps . h = 0
    const Posterior post = mu1_sigma1(eps, h, 0.7, 0.3);
    CHECK(post.mu1 == 0.0);
    const double expected = 1.0 / std::sqrt(4.0 / 0.09 + 1.0 / 0.49);
    CHECK(post.sigma1 == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("random instance matches the dense linear-algebra oracle, T = 3") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd eps = random_demeaned(rng, 3);
      const Eigen::VectorXd h = random_demeaned(rng, 3);
      const double sigma_u = 0.3 + rng.uniform();
      const double sigma_v = 0.2 + rng.uniform();
      const Posterior post = mu1_sigma1(eps, h, sigma_u, sigma_v);

      const Eigen::MatrixXd pinv = dense_pseudo_inverse(dense_pi(3, sigma_v));
      const double denom = h.dot(pinv * h) + 1.0 / (sigma_u * sigma_u);
      const double mu1 = -eps.dot(pinv * h) / denom;  // production sign
      const double sigma1 = 1.0 / std::sqrt(denom);
      CHECK(post.mu1 == doctest::Approx(mu1).epsilon(1e-12));
      CHECK(post.sigma1 == doctest::Approx(sigma1).epsilon(1e-12));
    }
  }
  SUBCASE("cost frontier flips the cross-term sign") {
    Rng rng(13);
    const Eigen::VectorXd eps = random_demeaned(rng, 3);
    const Eigen::VectorXd h = random_demeaned(rng, 3);
    const Posterior prod = mu1_sigma1(eps, h, 0.5, 0.4, Frontier::Production);
    const Posterior cost = mu1_sigma1(eps, h, 0.5, 0.4, Frontier::Cost);
    CHECK(prod.mu1 == doctest::Approx(-cost.mu1).epsilon(1e-14));
    CHECK(prod.sigma1 == doctest::Approx(cost.sigma1).epsilon(1e-14));
  }
}

TEST_CASE("panel_loglik: inefficiency-free limit") {
  TransformedPanel data = small_panel(21, 1, 4, 4);
  const FirmBlock& firm = data.firms[0];
  const int n_det = data.n_determinants;

  const Eigen::VectorXd beta = Eigen::VectorXd::Random(14) * 0.1;
  const double sigma_v = 0.4;
  // delta = 0 makes h constant, so h-demeaned = 0 and the likelihood equals
  // the demeaned Gaussian regardless of sigma_u; take sigma_u tiny as well.
  const ParameterVector params = ParameterVector::pack(
      beta, Eigen::VectorXd::Zero(n_det), std::log(1e-8), std::log(sigma_v));

  const Eigen::VectorXd eps = firm.y_demeaned - firm.x_demeaned * beta;
  const double t1 = firm.length() - 1;
  const double expected = -0.5 * t1 * std::log(2.0 * M_PI * sigma_v * sigma_v) -
                          0.5 * eps.squaredNorm() / (sigma_v * sigma_v);
  CHECK(panel_loglik(firm, params) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("panel_loglik matches the quadrature oracle") {
  Rng rng(31);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int t_len = 2 + (trial % 2);
    TransformedPanel data = small_panel(1000 + trial, 1, t_len, t_len);
    const ParameterVector params = random_params(rng, data.n_determinants);
    for (Frontier frontier : {Frontier::Production, Frontier::Cost}) {
      const double closed = panel_loglik(data.firms[0], params, frontier);
      const double oracle = oracle_loglik(data.firms[0], params, frontier);
      CHECK(closed == doctest::Approx(oracle).epsilon(1e-6));
      ++checked;
    }
  }
  CHECK(checked == 80);
}

TEST_CASE("total_loglik composition") {
  TransformedPanel data = small_panel(55, 1, 3, 3);
  Rng rng(17);
  const ParameterVector params = random_params(rng, data.n_determinants);

  SUBCASE("single firm equals panel_loglik") {
    CHECK(total_loglik(data, params) ==
          doctest::Approx(panel_loglik(data.firms[0], params)).epsilon(1e-14));
  }
  SUBCASE("duplicated firm doubles the total") {
    TransformedPanel two = data;
    two.firms.push_back(two.firms[0]);
    two.firms[1].firm_id = "copy";
    CHECK(total_loglik(two, params) ==
          doctest::Approx(2.0 * panel_loglik(data.firms[0], params)).epsilon(1e-14));
  }
}

TEST_CASE("total_loglik is exactly invariant to per-firm output shifts") {
  DgpSpec spec = DgpSpec::defaults();
  spec.n_firms = 12;
  spec.t_min = 3;
  spec.t_max = 8;
  spec.seed = 97;
  const SimulatedPanel sim = generate_panel(spec);

  PanelDataset shifted = sim.data;
  Rng rng(5);
  for (auto& firm : shifted.firms) {
    const double shift = rng.normal(2.0);
    for (auto& obs : firm.observations) obs.output *= std::exp(shift);
  }

  const TransformedPanel base = transform_panel(sim.data, spec.base_year);
  const TransformedPanel moved = transform_panel(shifted, spec.base_year);
  Rng prng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const ParameterVector params = random_params(prng, base.n_determinants);
    CHECK(total_loglik(base, params) ==
          doctest::Approx(total_loglik(moved, params)).epsilon(1e-12));
  }
}

TEST_CASE("loglik_gradient is exact on a quadratic surrogate") {
  // The same differencing scheme applied to a known quadratic must recover
  // its gradient to 1e-8: validates step sizes and stencil.
  const int p = 5;
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(p, p);
  a = (a + a.transpose()).eval();
  const Eigen::VectorXd b = Eigen::VectorXd::Random(p);
  auto quadratic = [&](const Eigen::VectorXd& x) {
    return (0.5 * x.dot(a * x) + b.dot(x));
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Random(p);
  Eigen::VectorXd grad(p);
  for (int j = 0; j < p; ++j) {
    const double step = std::max(1e-6, 1e-7 * std::abs(x0(j)));
    Eigen::VectorXd up = x0, down = x0;
    up(j) += step;
    down(j) -= step;
    grad(j) = (quadratic(up) - quadratic(down)) / (2.0 * step);
  }
  const Eigen::VectorXd exact = a * x0 + b;
  CHECK((grad - exact).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("loglik_gradient determinism and failure propagation") {
  TransformedPanel data = small_panel(119, 3, 3, 5);
  Rng rng(41);
  const ParameterVector params = random_params(rng, data.n_determinants);

  const Eigen::VectorXd g1 = loglik_gradient(data, params);
  const Eigen::VectorXd g2 = loglik_gradient(data, params);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() == 0.0);  // same packing, same bits

  ParameterVector broken = params;
  broken.theta(14) = 1e6;  // delta explodes h
  CHECK_THROWS_AS(loglik_gradient(data, broken), EvaluationError);
}

TEST_CASE("perturbing beta away from the truth never improves the likelihood") {
  DgpSpec spec = DgpSpec::defaults();
  spec.n_firms = 400;
  spec.seed = 2024;
  const SimulatedPanel sim = generate_panel(spec);
  const TransformedPanel data = transform_panel(sim.data, spec.base_year);
  const double at_truth = total_loglik(data, sim.true_params);

  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    ParameterVector perturbed = sim.true_params;
    for (int j = 0; j < 14; ++j) perturbed.theta(j) += rng.normal(0.05);
    // Monte Carlo noise allowance: the truth is not the exact sample
    // optimum, but large perturbations must not win.
    CHECK(total_loglik(data, perturbed) < at_truth + 50.0);
  }
  ParameterVector far = sim.true_params;
  far.theta(0) += 1.0;
  CHECK(total_loglik(data, far) < at_truth);
}
