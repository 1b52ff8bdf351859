#include <doctest.h>

#include "oracles.hpp"

#include "coop/metrics.hpp"
#include "coop/sem.hpp"

#include <cmath>

using namespace coop;

namespace {

BinaryMatrix from_rows(const oracle::Grid& g) {
  BinaryGrid b(static_cast<Index>(g.size()), static_cast<Index>(g[0].size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g[0].size(); ++j) b(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<std::uint8_t>(g[i][j]);
  }
  return BinaryMatrix(b);
}

oracle::Grid random_grid(std::size_t n1, std::size_t n2, double p, Rng& rng) {
  std::bernoulli_distribution coin(p);
  oracle::Grid g(n1, std::vector<int>(n2));
  for (auto& row : g) {
    for (auto& c : row) c = coin(rng);
  }
  return g;
}

}  // namespace

TEST_CASE("adjusted Rand index") {
  const Clustering a({0, 0, 1, 1}, 2), b({0, 1, 1, 1}, 2);
  CHECK(std::abs(ari(a, b) - oracle::ari_pairs(a.labels(), b.labels())) < 1e-12);
  CHECK(ari(a, a) == doctest::Approx(1.0));
  CHECK(ari(a, b) == doctest::Approx(ari(b, a)).epsilon(1e-12));
  CHECK(ari(a, Clustering({1, 1, 0, 0}, 2)) == doctest::Approx(1.0));
  CHECK(ari(Clustering::single_block(5), Clustering({0, 1, 2, 3, 4}, 5)) == 0.0);

  Rng rng = make_rng(4);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> x(15), y(15);
    for (auto& l : x) l = lab(rng);
    for (auto& l : y) l = lab(rng);
    CHECK(std::abs(ari(Clustering(x, 4), Clustering(y, 4)) - oracle::ari_pairs(x, y)) < 1e-12);
  }
}

TEST_CASE("AUC") {
  CHECK(std::abs(auc({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0}) - 0.75) < 1e-12);
  CHECK(auc({0.9, 0.8, 0.1}, {1, 1, 0}) == 1.0);
  CHECK(auc({0.2, 0.2, 0.2, 0.2}, {1, 0, 1, 0}) == 0.5);
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), Error);

  Rng rng = make_rng(8);
  std::uniform_int_distribution<int> score(0, 6);
  std::bernoulli_distribution coin(0.4);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(20);
    std::vector<int> y(20);
    for (auto& v : s) v = score(rng);
    for (auto& v : y) v = coin(rng);
    y[0] = 1;
    y[1] = 0;
    CHECK(std::abs(auc(s, y) - oracle::auc_pairs(s, y)) < 1e-12);
  }
  std::vector<double> s{0.1, 0.7, 0.3, 0.9, 0.5};
  const std::vector<int> y{0, 1, 0, 1, 1};
  std::vector<double> neg(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) neg[k] = -s[k];
  CHECK(auc(s, y) + auc(neg, y) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Chao coverage") {
  CountGrid a(1, 4);
  a << 1, 1, 2, 6;
  CHECK(std::abs(chao_coverage(CountMatrix(a)) - (1.0 - 0.2 * 18.0 / 22.0)) < 1e-12);
  CHECK(std::abs(chao_coverage(CountMatrix(a)) - 0.83636) < 1e-5);
  CountGrid b(1, 2);
  b << 1, 1;
  CHECK(std::abs(chao_coverage(CountMatrix(b)) - 0.5) < 1e-12);
  CountGrid c(2, 2);
  c << 2, 3, 0, 4;
  CHECK(chao_coverage(CountMatrix(c)) == 1.0);
}

TEST_CASE("Chao connectivity") {
  BinaryGrid g(2, 2);
  g << 1, 0, 0, 1;
  CHECK(std::abs(connectivity_chao(BinaryMatrix(g), 0.5) - 1.0) < 1e-12);
  CHECK(connectivity_chao(BinaryMatrix(g), 1.0) == doctest::Approx(0.5));
  CHECK(connectivity_chao(BinaryMatrix(g), 0.25) > 1.0);
  CHECK_THROWS_AS(connectivity_chao(BinaryMatrix(g), 0.0), Error);
}

TEST_CASE("CoOP connectivity") {
  FitResult f;
  f.params.alpha = VectorXd::Ones(1);
  f.params.beta = VectorXd::Ones(1);
  f.params.pi = MatrixXd::Constant(1, 1, kPiClamp);
  f.params.lambda = VectorXd::Ones(2);
  f.params.mu = VectorXd::Ones(2);
  f.params.g = 50.0;
  f.row_clustering = Clustering::single_block(2);
  f.col_clustering = Clustering::single_block(2);
  CountGrid full(2, 2);
  full << 1, 2, 3, 4;
  CHECK(connectivity_coop(f, CountMatrix(full)) == 1.0);
  CountGrid half(2, 2);
  half << 1, 0, 0, 4;
  CHECK(connectivity_coop(f, CountMatrix(half)) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("NODF") {
  const oracle::Grid x{{1, 1, 1}, {1, 1, 0}, {0, 1, 0}};
  CHECK(std::abs(nodf(from_rows(x)) - oracle::nodf_sets(x)) < 1e-12);
  CHECK(nodf(from_rows({{1, 0, 0}, {1, 1, 0}, {1, 1, 1}})) == doctest::Approx(1.0));
  CHECK(nodf(from_rows({{1, 0}, {0, 1}})) == 0.0);

  Rng rng = make_rng(12);
  for (int t = 0; t < 30; ++t) {
    const oracle::Grid g = random_grid(6, 5, 0.5, rng);
    CHECK(std::abs(nodf(from_rows(g)) - oracle::nodf_sets(g)) < 1e-12);
    oracle::Grid shuffled = g;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(nodf(from_rows(shuffled)) == doctest::Approx(nodf(from_rows(g))).epsilon(1e-12));
  }
}

TEST_CASE("bipartite modularity") {
  oracle::Grid two(6, std::vector<int>(6, 0));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      two[i][j] = 1;
      two[3 + i][3 + j] = 1;
    }
  }
  const ModularityResult r = bipartite_modularity(from_rows(two), 5, 1);
  CHECK(std::abs(r.q - 0.5) < 1e-12);
  CHECK(std::abs(r.q - oracle::max_modularity(two)) < 1e-12);

  const oracle::Grid complete(3, std::vector<int>(4, 1));
  CHECK(std::abs(bipartite_modularity(from_rows(complete), 5, 1).q) < 1e-12);

  Rng rng = make_rng(31);
  for (int t = 0; t < 6; ++t) {
    oracle::Grid g = random_grid(4, 5, 0.45, rng);
    g[0][0] = 1;
    const ModularityResult m = bipartite_modularity(from_rows(g), 20, static_cast<std::uint64_t>(t));
    CHECK(m.q >= 0.0);
    CHECK(std::abs(m.q - barber_modularity(from_rows(g), m.row_modules, m.col_modules)) < 1e-10);
    CHECK(std::abs(m.q - oracle::max_modularity(g)) < 1e-12);
    const ModularityResult again = bipartite_modularity(from_rows(g), 20, static_cast<std::uint64_t>(t));
    CHECK(again.row_modules == m.row_modules);
    CHECK(again.q == m.q);
  }
  CHECK_THROWS_AS(bipartite_modularity(BinaryMatrix::zeros(3, 3), 2, 0), Error);
}

TEST_CASE("completion") {
  BinaryGrid g = BinaryGrid::Zero(4, 5);
  g(0, 0) = g(1, 2) = g(3, 4) = 1;
  const BinaryMatrix v(g);
  CHECK(complete_matrix(v, {CompletionKind::uniform_nmiss, 0, 3}, nullptr) == v);

  const BinaryMatrix u = complete_matrix(v, {CompletionKind::uniform_nmiss, 5, 3}, nullptr);
  CHECK(u.ones() == v.ones() + 5);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 5; ++j) {
      if (v(i, j)) CHECK(u(i, j));
    }
  }
  CHECK_THROWS_AS(complete_matrix(v, {CompletionKind::uniform_nmiss, 18, 3}, nullptr), Error);
  CHECK_THROWS_AS(complete_matrix(v, {CompletionKind::coop_bernoulli, 0, 3}, nullptr), Error);

  FitResult f;
  f.params.alpha = VectorXd::Constant(2, 0.5);
  f.params.beta = VectorXd::Ones(1);
  f.params.pi = (MatrixXd(2, 1) << 0.9, kPiClamp).finished();
  f.params.lambda = (VectorXd(4) << 1.0, 0.5, 0.2, 0.1).finished();
  f.params.mu = (VectorXd(5) << 1.0, 0.8, 0.6, 0.4, 0.2).finished();
  f.params.g = 3.0;
  f.row_clustering = Clustering({0, 0, 1, 1}, 2);
  f.col_clustering = Clustering::single_block(5);

  const BinaryMatrix lbm = complete_matrix(v, {CompletionKind::lbm_oracle_nmiss, 4, 2}, &f);
  CHECK(lbm.ones() == v.ones() + 4);
  CHECK(complete_matrix(v, {CompletionKind::lbm_oracle_nmiss, 0, 2}, &f) == v);

  CountGrid counts = g.cast<std::int64_t>();
  const MatrixXd p = coop_missing_prob(f, CountMatrix(counts));
  double expected = 0.0, var = 0.0;
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 5; ++j) {
      if (!v(i, j)) {
        expected += p(i, j);
        var += p(i, j) * (1.0 - p(i, j));
      }
    }
  }
  const int draws = 500;
  double added = 0.0;
  for (int s = 0; s < draws; ++s) {
    const BinaryMatrix c = complete_matrix(v, {CompletionKind::coop_bernoulli, 0, static_cast<std::uint64_t>(s)}, &f);
    added += static_cast<double>(c.ones() - v.ones());
    for (Index i = 0; i < 4; ++i) {
      for (Index j = 0; j < 5; ++j) {
        if (v(i, j)) CHECK(c(i, j));
      }
    }
  }
  CHECK(std::abs(added / draws - expected) <= 3.0 * std::sqrt(var / draws));

  f.params.pi.setConstant(kPiClamp);
  CHECK(complete_matrix(v, {CompletionKind::coop_bernoulli, 0, 9}, &f) == v);
}

TEST_CASE("RMSE") {
  const VectorXd a = (VectorXd(2) << 1.0, 0.5).finished();
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(VectorXd::Zero(2), VectorXd::Ones(2)) == doctest::Approx(1.0));
  CHECK(std::abs(rmse(a, (VectorXd(2) << 1.0, 0.3).finished()) - std::sqrt(0.02)) < 1e-12);
  CHECK_THROWS_AS(rmse(a, VectorXd::Ones(3)), Error);
}
