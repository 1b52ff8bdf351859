#include <doctest.h>

#include "coop/simulate.hpp"

#include <cmath>

using namespace coop;

TEST_CASE("saturated simulation has no zero cells") {
  SimConfig c;
  c.n1 = 12;
  c.n2 = 9;
  c.alpha = VectorXd::Ones(1);
  c.beta = VectorXd::Ones(1);
  c.pi = MatrixXd::Ones(1, 1);
  c.g = 1e4;
  c.effort = ExplicitEffort{VectorXd::Ones(12), VectorXd::Ones(9)};
  c.seed = 5;
  const SimOutput s = simulate_coop(c);
  CHECK(s.r.rows() == 12);
  CHECK(s.r.cols() == 9);
  CHECK((s.r.counts().array() > 0).all());
  CHECK(s.true_g == doctest::Approx(1e4));
}

TEST_CASE("all-zero connection matrix fails after retries") {
  SimConfig c;
  c.n1 = 4;
  c.n2 = 4;
  c.alpha = VectorXd::Ones(1);
  c.beta = VectorXd::Ones(1);
  c.pi = MatrixXd::Zero(1, 1);
  CHECK_THROWS_AS(simulate_coop(c), Error);
}

TEST_CASE("counts only occur on the latent support") {
  const SimOutput s = simulate_coop(three_block_config(40, 300, 3));
  for (Index i = 0; i < s.r.rows(); ++i) {
    for (Index j = 0; j < s.r.cols(); ++j) {
      if (s.r(i, j) > 0) CHECK(s.m(i, j));
      CHECK(s.r(i, j) == (s.m(i, j) ? s.n(i, j) : 0));
    }
  }
  CHECK(s.true_lambda.maxCoeff() == doctest::Approx(1.0));
  CHECK(s.true_mu.maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("benchmark configuration hides most of the support") {
  double missing = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SimConfig c = three_block_config(100, 25, seed);
    const SimOutput s = simulate_coop(c);
    missing += 1.0 - static_cast<double>(observed_support(s.r).ones()) / static_cast<double>(s.m_full.ones());
  }
  CHECK(missing / 10.0 >= 2.0 / 3.0);
}

TEST_CASE("multinomial sub-sampling") {
  CountGrid one(1, 1);
  one << 10;
  CHECK(subsample_multinomial(CountMatrix(one), 0.6, 1)(0, 0) == 6);

  CountGrid g(2, 2);
  g << 5, 0, 12, 3;
  const CountMatrix r(g);
  CHECK(subsample_multinomial(r, 1.0, 7).total() == r.total());
  CHECK(subsample_multinomial(r, 0.5, 7)(0, 1) == 0);

  const double keep = 0.4;
  const int draws = 200;
  const auto n = static_cast<double>(std::llround(keep * 20.0));
  MatrixXd sum = MatrixXd::Zero(2, 2);
  for (int s = 0; s < draws; ++s) sum += subsample_multinomial(r, keep, static_cast<std::uint64_t>(s)).counts().cast<double>();
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      const double p = static_cast<double>(r(i, j)) / 20.0;
      const double se = std::sqrt(n * p * (1.0 - p) / draws);
      CHECK(std::abs(sum(i, j) / draws - n * p) <= 3.0 * se + 1e-12);
    }
  }
  CHECK_THROWS_AS(subsample_multinomial(r, 0.0, 1), Error);
}

TEST_CASE("binomial sub-sampling") {
  CountGrid g(2, 3);
  g << 0, 4, 9, 1, 0, 20;
  const CountMatrix r(g);
  CHECK(subsample_binomial(r, 1.0, 3).counts() == r.counts());
  for (std::uint64_t s = 0; s < 20; ++s) {
    const CountMatrix a = subsample_binomial(r, 0.3, s);
    CHECK(a(0, 0) == 0);
    CHECK(a(1, 1) == 0);
    CHECK((a.counts().array() <= r.counts().array()).all());
  }
  double sum = 0.0;
  const int draws = 500;
  for (int s = 0; s < draws; ++s) sum += static_cast<double>(subsample_binomial(r, 0.5, static_cast<std::uint64_t>(s))(1, 2));
  const double se = std::sqrt(20.0 * 0.25 / draws);
  CHECK(std::abs(sum / draws - 10.0) <= 3.0 * se);
}

TEST_CASE("beta draws have the right mean") {
  Rng rng = make_rng(11);
  double sum = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) sum += draw_beta(0.3, 1.5, rng);
  const double mean = 0.3 / 1.8;
  const double var = 0.3 * 1.5 / (1.8 * 1.8 * 2.8);
  CHECK(std::abs(sum / n - mean) <= 4.0 * std::sqrt(var / n));
}
