#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "cep/expfam.hpp"

using cep::GammaFactor;
using cep::GaussianFactor;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

GaussianFactor random_full(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = normal(rng);
  Eigen::MatrixXd cov = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd mean(dim);
  for (Eigen::Index i = 0; i < dim; ++i) mean(i) = normal(rng);
  return GaussianFactor::from_moments(mean, cov);
}

}  // namespace

TEST_CASE("multiply adds natural parameters") {
  const auto f = GaussianFactor::diagonal(vec({1.0}), vec({-0.5}));
  const auto unit = GaussianFactor::unit(1);
  const auto same = cep::multiply(f, unit);
  CHECK(same.eta1()(0) == doctest::Approx(1.0));
  CHECK(same.eta2()(0, 0) == doctest::Approx(-0.5));

  const auto g = cep::multiply(GaussianFactor::diagonal(vec({1.0}), vec({-1.0})),
                               GaussianFactor::diagonal(vec({0.5}), vec({-0.5})));
  CHECK(g.eta1()(0) == doctest::Approx(1.5));
  CHECK(g.eta2()(0, 0) == doctest::Approx(-1.5));
}

TEST_CASE("product of N(0,1) and N(2,1) is N(1,1/2)") {
  const auto p = cep::multiply(GaussianFactor::scalar(0.0, 1.0), GaussianFactor::scalar(2.0, 1.0));
  const auto m = cep::moments(p);
  CHECK(m.mean(0) == doctest::Approx(1.0));
  CHECK(m.covariance(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("divide subtracts and may produce non-normalizable factors") {
  const auto r = cep::divide(GaussianFactor::diagonal(vec({1.5}), vec({-1.5})),
                             GaussianFactor::diagonal(vec({0.5}), vec({-0.5})));
  CHECK(r.eta1()(0) == doctest::Approx(1.0));
  CHECK(r.eta2()(0, 0) == doctest::Approx(-1.0));

  const auto f = GaussianFactor::scalar(0.3, 2.0);
  const auto self = cep::divide(f, f);
  CHECK(self.eta1()(0) == 0.0);
  CHECK(self.eta2()(0, 0) == 0.0);

  const auto bad = cep::divide(GaussianFactor::scalar(0.0, 1.0), GaussianFactor::scalar(0.0, 0.5));
  CHECK(bad.eta2()(0, 0) == doctest::Approx(0.5));
  CHECK_FALSE(bad.is_normalizable());
  CHECK_THROWS_AS(cep::moments(bad), std::domain_error);
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(cep::multiply(GaussianFactor::unit(1), GaussianFactor::unit(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(cep::divide(GaussianFactor::unit(3), GaussianFactor::unit(2)),
                  std::invalid_argument);
}

TEST_CASE("moments of diagonal and full factors") {
  auto m = cep::moments(GaussianFactor::diagonal(vec({0.0}), vec({-0.5})));
  CHECK(m.mean(0) == doctest::Approx(0.0));
  CHECK(m.covariance(0, 0) == doctest::Approx(1.0));

  m = cep::moments(GaussianFactor::diagonal(vec({2.0}), vec({-1.0})));
  CHECK(m.mean(0) == doctest::Approx(1.0));
  CHECK(m.covariance(0, 0) == doctest::Approx(0.5));

  m = cep::moments(GaussianFactor::full(vec({1.0, -1.0}), -0.5 * Eigen::MatrixXd::Identity(2, 2)));
  CHECK(m.mean(0) == doctest::Approx(1.0));
  CHECK(m.mean(1) == doctest::Approx(-1.0));
  CHECK((m.covariance - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("non-normalizable error names the coordinate") {
  const auto f = GaussianFactor::diagonal(vec({0.0, 0.0}), vec({-1.0, 0.25}));
  try {
    cep::moments(f);
    FAIL("expected an exception");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
}

TEST_CASE("mixed forms promote to full") {
  const auto d = GaussianFactor::scalar(1.0, 2.0);
  const auto f = GaussianFactor::full(vec({0.5}), Eigen::MatrixXd::Constant(1, 1, -0.25));
  const auto p = cep::multiply(d, f);
  CHECK_FALSE(p.is_diagonal());
  CHECK(p.eta1()(0) == doctest::Approx(1.0));
  CHECK(p.eta2()(0, 0) == doctest::Approx(-0.5));
}

TEST_CASE("gamma algebra") {
  const auto a = cep::multiply(GammaFactor(2.0, 1.0), GammaFactor::unit());
  CHECK(a.shape() == doctest::Approx(2.0));
  CHECK(a.rate() == doctest::Approx(1.0));

  const auto b = cep::divide(GammaFactor(2.0, 3.0), GammaFactor(2.0, 3.0));
  CHECK(b.shape() == doctest::Approx(1.0));
  CHECK(b.rate() == doctest::Approx(0.0));

  const auto c = cep::multiply(GammaFactor(1.5, 0.5), GammaFactor(1.5, 0.5));
  CHECK(c.shape() == doctest::Approx(2.0));
  CHECK(c.rate() == doctest::Approx(1.0));

  CHECK_FALSE(GammaFactor::unit().is_normalizable());
  CHECK_THROWS_AS(GammaFactor::unit().mean(), std::domain_error);
  CHECK(GammaFactor(3.0, 2.0).mean() == doctest::Approx(1.5));
}

TEST_CASE("gamma mean of a product of unit-mean factors") {
  for (int n : {1, 2, 5, 20}) {
    for (double c : {0.5, 1.0, 4.0}) {
      GammaFactor product = GammaFactor::unit();
      for (int i = 0; i < n; ++i) product = cep::multiply(product, GammaFactor(1.0 + c, c));
      const double a = n * c + 1.0;
      const double b = n * c;
      CHECK(product.mean() == doctest::Approx(a / b).epsilon(1e-12));
    }
  }
}

TEST_CASE("KL divergence closed forms") {
  const auto n01 = GaussianFactor::scalar(0.0, 1.0);
  CHECK(cep::kl_divergence(n01, n01) == doctest::Approx(0.0));
  CHECK(cep::kl_divergence(GaussianFactor::scalar(1.0, 1.0), n01) == doctest::Approx(0.5));
  CHECK(cep::kl_divergence(GaussianFactor::scalar(0.0, 2.0), n01) ==
        doctest::Approx(0.5 * (2.0 - 1.0 - std::log(2.0))));
  CHECK_THROWS(cep::kl_divergence(GaussianFactor::unit(1), n01));
}

TEST_CASE("KL is zero on identical and non-negative on random pairs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_full(rng, 3);
    const auto q = random_full(rng, 3);
    CHECK(std::abs(cep::kl_divergence(p, p)) < 1e-10);
    CHECK(cep::kl_divergence(p, q) >= 0.0);
    // Diagonal fast path agrees with the full path.
    const auto md = cep::moments(p);
    const auto pd = GaussianFactor::from_moments(md.mean, Eigen::VectorXd(md.variances()));
    const auto mq = cep::moments(q);
    const auto qd = GaussianFactor::from_moments(mq.mean, Eigen::VectorXd(mq.variances()));
    CHECK(cep::kl_divergence(pd, qd) ==
          doctest::Approx(cep::kl_divergence(pd.to_full(), qd.to_full())).epsilon(1e-10));
  }
}

TEST_CASE("round trips") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_full(rng, 4);
    const auto g = random_full(rng, 4);
    const auto back = cep::divide(cep::multiply(f, g), g);
    CHECK(cep::max_abs_difference(back, f) <= 1e-10 * (1.0 + f.eta2().cwiseAbs().maxCoeff() +
                                                       f.eta1().cwiseAbs().maxCoeff()));

    const auto m = cep::moments(f);
    const auto again = GaussianFactor::from_moments(m.mean, m.covariance);
    const double scale = 1.0 + f.eta2().cwiseAbs().maxCoeff() + f.eta1().cwiseAbs().maxCoeff();
    CHECK(cep::max_abs_difference(again, f) <= 1e-10 * scale);
  }
}

TEST_CASE("damping blends natural parameters") {
  const auto a = GaussianFactor::scalar(1.0, 1.0);
  const auto b = GaussianFactor::scalar(-1.0, 0.5);
  const auto h = cep::damp(a, b, 0.5);
  CHECK(h.eta1()(0) == doctest::Approx(0.5 * (1.0 + -2.0)));
  CHECK(h.eta2()(0, 0) == doctest::Approx(0.5 * (-0.5 + -1.0)));
  CHECK(cep::max_abs_difference(cep::damp(a, b, 1.0), a) == 0.0);

  const auto g = cep::damp(GammaFactor(3.0, 2.0), GammaFactor(1.0, 0.0), 0.5);
  CHECK(g.shape() == doctest::Approx(2.0));
  CHECK(g.rate() == doctest::Approx(1.0));
}

TEST_CASE("regularize_covariance floors eigenvalues and symmetrizes") {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 1.0 + 1e-9, 1.0, 1.0;
  const Eigen::MatrixXd r = cep::regularize_covariance(c, 1e-6);
  CHECK((r - r.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  CHECK(eig.eigenvalues().minCoeff() >= 1e-6 * (1.0 - 1e-9));
}
