#include <doctest.h>

#include "coop/io.hpp"
#include "coop/net_core.hpp"

#include <cmath>
#include <filesystem>

using namespace coop;

namespace {

CountMatrix grid2(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  CountGrid g(2, 2);
  g << a, b, c, d;
  return CountMatrix(g);
}

CoopParams one_cell_params(double pi, double g) {
  CoopParams p;
  p.alpha = VectorXd::Ones(1);
  p.beta = VectorXd::Ones(1);
  p.pi = MatrixXd::Constant(1, 1, pi);
  p.lambda = VectorXd::Ones(1);
  p.mu = VectorXd::Ones(1);
  p.g = g;
  return p;
}

}  // namespace

TEST_CASE("csv parsing") {
  const CountMatrix r = parse_count_matrix(",a,b\nx,0,3\ny,1,0\n");
  CHECK(r.rows() == 2);
  CHECK(r.cols() == 2);
  CHECK(r(0, 1) == 3);
  CHECK(r(1, 0) == 1);
  CHECK(r.row_names() == std::vector<std::string>{"x", "y"});
  CHECK(r.col_names() == std::vector<std::string>{"a", "b"});

  CHECK_THROWS_WITH_AS(parse_count_matrix(",a,b\nx,0,-1\ny,1,0\n"), doctest::Contains("row 1, column 2"), Error);
  CHECK_THROWS_WITH_AS(parse_count_matrix(",a,b\nx,0,3\ny,2.5,0\n"), doctest::Contains("row 2, column 1"), Error);
}

TEST_CASE("csv round trip") {
  const CountMatrix r = parse_count_matrix(",a,b\nx,0,3\ny,1,0\n");
  const CountMatrix back = parse_count_matrix(format_count_matrix(r));
  CHECK(back.counts() == r.counts());
  CHECK(back.row_names() == r.row_names());
}

TEST_CASE("observed support") {
  BinaryGrid want(2, 2);
  want << 0, 1, 1, 0;
  CHECK(observed_support(grid2(0, 3, 1, 0)) == BinaryMatrix(want));
  CHECK(observed_support(grid2(0, 0, 0, 0)).ones() == 0);
  CountGrid one(1, 1);
  one << 5;
  CHECK(observed_support(CountMatrix(one)).ones() == 1);
}

TEST_CASE("drop_empty") {
  const DropResult d = drop_empty(grid2(0, 3, 0, 0));
  CHECK(d.matrix.rows() == 1);
  CHECK(d.matrix.cols() == 1);
  CHECK(d.matrix(0, 0) == 3);
  CHECK(d.kept_rows == std::vector<Index>{0});
  CHECK(d.kept_cols == std::vector<Index>{1});

  const DropResult full = drop_empty(grid2(1, 2, 3, 4));
  CHECK(full.matrix.counts() == grid2(1, 2, 3, 4).counts());
  CHECK(full.kept_rows == std::vector<Index>{0, 1});
  CHECK(full.kept_cols == std::vector<Index>{0, 1});

  CHECK_THROWS_AS(drop_empty(CountMatrix(CountGrid::Zero(3, 3))), Error);
}

TEST_CASE("conditional observation probability") {
  CHECK(conditional_obs_prob(0, 0.0, 3.7) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(conditional_obs_prob(0, 1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(std::abs(conditional_obs_prob(0, 0.5, std::log(2.0)) - 0.75) < 1e-12);
  // r > 0: π times the Poisson mass
  CHECK(std::abs(conditional_obs_prob(2, 0.4, 1.5) - 0.4 * 1.5 * 1.5 / 2.0 * std::exp(-1.5)) < 1e-12);
  CHECK(conditional_obs_prob(3, 0.0, 1.0) == 0.0);
  double total = 0.0;
  for (int r = 0; r < 60; ++r) total += conditional_obs_prob(r, 0.3, 4.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("complete log-likelihood") {
  CountGrid zero(1, 1);
  zero << 0;
  const CountMatrix r(zero);
  const Clustering z = Clustering::single_block(1);
  CHECK(complete_loglik(r, z, z, one_cell_params(0.0, 1.0)) == doctest::Approx(0.0));
  CHECK(std::abs(complete_loglik(r, z, z, one_cell_params(0.5, std::log(2.0))) - std::log(0.75)) < 1e-12);
  CHECK(std::abs(std::log(0.75) - (-0.28768)) < 1e-5);
}

TEST_CASE("complete log-likelihood is invariant to label permutation") {
  CountGrid g(3, 2);
  g << 0, 4, 2, 0, 1, 1;
  const CountMatrix r(g);
  CoopParams p;
  p.alpha = (VectorXd(2) << 0.3, 0.7).finished();
  p.beta = (VectorXd(2) << 0.6, 0.4).finished();
  p.pi = (MatrixXd(2, 2) << 0.2, 0.9, 0.7, 0.4).finished();
  p.lambda = (VectorXd(3) << 1.0, 0.5, 0.8).finished();
  p.mu = (VectorXd(2) << 1.0, 0.6).finished();
  p.g = 3.0;
  const Clustering z1({0, 1, 1}, 2), z2({1, 0}, 2);

  CoopParams swapped = p;
  swapped.alpha = p.alpha.reverse();
  swapped.pi = p.pi.colwise().reverse();
  const Clustering z1s({1, 0, 0}, 2);
  CHECK(complete_loglik(r, z1s, z2, swapped) == doctest::Approx(complete_loglik(r, z1, z2, p)).epsilon(1e-12));
}

TEST_CASE("fit document round trip") {
  FitResult f;
  f.model = ModelKind::coop;
  f.params.alpha = (VectorXd(2) << 0.25, 0.75).finished();
  f.params.beta = VectorXd::Ones(1);
  f.params.pi = (MatrixXd(2, 1) << 0.123456789012, 0.9).finished();
  f.params.lambda = (VectorXd(3) << 1.0, 1.0 / 3.0, 0.5).finished();
  f.params.mu = (VectorXd(2) << 1.0, 2.0 / 7.0).finished();
  f.params.g = 612.345678901234;
  f.row_clustering = Clustering({0, 1, 1}, 2);
  f.col_clustering = Clustering({0, 0}, 1);
  f.icl = -1234.56789;
  f.seed = 99;
  const FitResult back = parse_fit(format_fit(f));
  CHECK(back.model == ModelKind::coop);
  CHECK(back.params.lambda.isApprox(f.params.lambda, 1e-12));
  CHECK(back.params.mu.isApprox(f.params.mu, 1e-12));
  CHECK(back.params.pi.isApprox(f.params.pi, 1e-12));
  CHECK(back.params.g == doctest::Approx(f.params.g).epsilon(1e-12));
  CHECK(back.icl == doctest::Approx(f.icl).epsilon(1e-12));
  CHECK(back.row_clustering == f.row_clustering);
  CHECK(back.seed == 99);

  f.model = ModelKind::lbm;
  const std::string text = format_fit(f);
  CHECK(text.find("\"lambda\"") == std::string::npos);
  CHECK(text.find("\"mu\"") == std::string::npos);
  CHECK(text.find("\"g\"") == std::string::npos);

  CHECK_THROWS_AS(write_fit(f, "/nonexistent-dir/x/fit.json"), Error);
}
