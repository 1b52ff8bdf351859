#include <doctest.h>

#include "coop/lbm.hpp"
#include "coop/metrics.hpp"
#include "coop/select.hpp"
#include "coop/simulate.hpp"

#include <cmath>
#include <set>

using namespace coop;

namespace {

// All ones on the two diagonal blocks, zeros elsewhere.
BinaryMatrix block_diagonal(Index half) {
  BinaryGrid g = BinaryGrid::Zero(2 * half, 2 * half);
  g.topLeftCorner(half, half).setOnes();
  g.bottomRightCorner(half, half).setOnes();
  return BinaryMatrix(g);
}

Clustering halves(Index half) {
  std::vector<int> l(static_cast<std::size_t>(2 * half), 0);
  for (Index i = half; i < 2 * half; ++i) l[static_cast<std::size_t>(i)] = 1;
  return {l, 2};
}

}  // namespace

TEST_CASE("single block estimates the density") {
  BinaryGrid g(3, 4);
  g << 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1;
  const BinaryMatrix v(g);
  const FitResult f = vem_fit(v, 1, 1, Clustering::single_block(3), Clustering::single_block(4));
  CHECK(f.params.pi(0, 0) == doctest::Approx(6.0 / 12.0).epsilon(1e-9));
  CHECK(f.params.alpha(0) == doctest::Approx(1.0));
  CHECK(f.params.beta(0) == doctest::Approx(1.0));
  CHECK(f.model == ModelKind::lbm);
}

TEST_CASE("separable blocks are recovered") {
  const BinaryMatrix v = block_diagonal(6);
  const auto init = init_clustering(v, 2, 2, InitMethod::kmeans, 1);
  const FitResult f = vem_fit(v, 2, 2, init.first, init.second);
  CHECK(ari(f.row_clustering, halves(6)) == doctest::Approx(1.0));
  CHECK(ari(f.col_clustering, halves(6)) == doctest::Approx(1.0));

  const FitResult one = vem_fit(v, 1, 1, Clustering::single_block(12), Clustering::single_block(12));
  CHECK(lbm_icl(f, v) > lbm_icl(one, v));
}

TEST_CASE("ELBO never decreases") {
  const SimOutput s = simulate_coop(three_block_config(50, 100, 8));
  const BinaryMatrix v = observed_support(s.r);
  for (int q = 2; q <= 4; ++q) {
    const auto init = init_clustering(v, q, q, InitMethod::kmeans, 3);
    const FitResult f = vem_fit(v, q, q, init.first, init.second);
    REQUIRE(f.elbo.size() >= 2);
    for (std::size_t t = 1; t < f.elbo.size(); ++t) CHECK(f.elbo[t] >= f.elbo[t - 1] - 1e-10 * std::abs(f.elbo[t - 1]));
  }
}

TEST_CASE("planted latent block model is recovered from the full support") {
  // A few rows of the nested design are misclassified even by the fit started
  // at the planted labels, so the per-seed bar is set by that oracle fit.
  double row_sum = 0.0, col_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // Unit efforts and a huge G: every possible interaction is observed.
    SimConfig c = three_block_config(100, 1e4, seed);
    c.effort = ExplicitEffort{VectorXd::Ones(100), VectorXd::Ones(100)};
    const SimOutput s = simulate_coop(c);
    REQUIRE(observed_support(s.r) == s.m_full);
    const auto init = init_clustering(s.m, 3, 3, InitMethod::hierarchical, seed);
    const FitResult f = vem_fit(s.m, 3, 3, init.first, init.second);
    const FitResult oracle = vem_fit(s.m, 3, 3, s.true_z1, s.true_z2);
    const double row = ari(f.row_clustering, s.true_z1), col = ari(f.col_clustering, s.true_z2);
    CHECK(row >= ari(oracle.row_clustering, s.true_z1) - 1e-12);
    CHECK(col >= ari(oracle.col_clustering, s.true_z2) - 1e-12);
    CHECK(row >= 0.9);
    CHECK(col >= 0.9);
    row_sum += row;
    col_sum += col;
  }
  CHECK(row_sum / 10.0 >= 0.95);
  CHECK(col_sum / 10.0 >= 0.95);
}

TEST_CASE("binary penalty") {
  CHECK(lbm_icl_penalty(1, 1, 100, 100) == doctest::Approx(0.5 * std::log(1e4)).epsilon(1e-12));
  CHECK(std::abs(lbm_icl_penalty(1, 1, 100, 100) - 4.6052) < 1e-4);
  for (int q1 = 1; q1 < 6; ++q1) CHECK(lbm_icl_penalty(q1 + 1, 2, 50, 70) > lbm_icl_penalty(q1, 2, 50, 70));
}

TEST_CASE("block-probability surrogate") {
  BinaryGrid g = BinaryGrid::Zero(5, 2);
  g(0, 0) = g(1, 1) = g(2, 0) = g(3, 1) = 1;
  const BinaryMatrix v(g);
  const FitResult f = vem_fit(v, 1, 1, Clustering::single_block(5), Clustering::single_block(2));
  const MatrixXd p = lbm_missing_prob(f, v);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 2; ++j) CHECK(p(i, j) == doctest::Approx(v(i, j) ? 1.0 : 0.4));
  }

  const FitResult sep = vem_fit(block_diagonal(4), 2, 2, halves(4), halves(4));
  const MatrixXd q = lbm_missing_prob(sep, block_diagonal(4));
  for (Index k = 0; k < q.size(); ++k) {
    CHECK(q.data()[k] >= kPiClamp);
    CHECK(q.data()[k] <= 1.0);
  }

  const SimOutput s = simulate_coop(three_block_config(40, 100, 2));
  const BinaryMatrix vs = observed_support(s.r);
  const auto init = init_clustering(vs, 3, 3, InitMethod::kmeans, 1);
  const FitResult fs = vem_fit(vs, 3, 3, init.first, init.second);
  const MatrixXd ps = lbm_missing_prob(fs, vs);
  std::set<double> distinct;
  for (Index i = 0; i < vs.rows(); ++i) {
    for (Index j = 0; j < vs.cols(); ++j) {
      if (!vs(i, j)) distinct.insert(ps(i, j));
    }
  }
  CHECK(distinct.size() <= 9);
}
