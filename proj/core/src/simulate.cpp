#include "coop/simulate.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

namespace coop {

namespace {

int draw_category(const VectorXd& probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng) * probs.sum();
  for (Index k = 0; k < probs.size() - 1; ++k) {
    u -= probs(k);
    if (u < 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size() - 1);
}

void check_config(const SimConfig& c) {
  if (c.n1 < 1 || c.n2 < 1) throw Error("simulation sizes must be positive");
  LbmParams blocks{c.alpha, c.beta, c.pi};
  validate(blocks);
  if (!(c.g > 0.0)) throw Error("g must be positive");
  if (const auto* law = std::get_if<BetaLaw>(&c.effort)) {
    if (!(law->a > 0.0) || !(law->b > 0.0)) throw Error("beta-law shapes must be positive");
  } else {
    const auto& e = std::get<ExplicitEffort>(c.effort);
    if (e.lambda.size() != c.n1 || e.mu.size() != c.n2) throw Error("explicit effort length mismatch");
    if ((e.lambda.array() <= 0.0).any() || (e.mu.array() <= 0.0).any()) {
      throw Error("explicit efforts must be positive");
    }
  }
}

VectorXd normalized(const VectorXd& v) { return v / v.maxCoeff(); }

}  // namespace

double draw_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y == 0.0) return 0.0;
  return x / (x + y);
}

SimConfig three_block_config(Index n, double g, std::uint64_t seed) {
  SimConfig c;
  c.n1 = n;
  c.n2 = n;
  c.alpha = VectorXd::Constant(3, 1.0 / 3.0);
  c.beta = VectorXd::Constant(3, 1.0 / 3.0);
  c.pi.resize(3, 3);
  c.pi << 0.95, 0.75, 0.50,
          0.75, 0.50, 0.50,
          0.50, 0.50, 0.05;
  c.g = g;
  c.effort = BetaLaw{0.3, 1.5};
  c.seed = seed;
  return c;
}

SimConfig uniform_block_config(Index n, double pi, double g, std::uint64_t seed) {
  SimConfig c;
  c.n1 = n;
  c.n2 = n;
  c.alpha = VectorXd::Ones(1);
  c.beta = VectorXd::Ones(1);
  c.pi = MatrixXd::Constant(1, 1, pi);
  c.g = g;
  c.effort = BetaLaw{0.7, 1.0};
  c.seed = seed;
  return c;
}

SimOutput simulate_coop(const SimConfig& config) {
  check_config(config);
  Rng rng = make_rng(config.seed, 0x53494d);

  for (int attempt = 0; attempt < kSimulationRetries; ++attempt) {
    std::vector<int> z1(static_cast<std::size_t>(config.n1)), z2(static_cast<std::size_t>(config.n2));
    for (auto& l : z1) l = draw_category(config.alpha, rng);
    for (auto& l : z2) l = draw_category(config.beta, rng);

    VectorXd lambda(config.n1), mu(config.n2);
    if (const auto* law = std::get_if<BetaLaw>(&config.effort)) {
      for (Index i = 0; i < config.n1; ++i) lambda(i) = draw_beta(law->a, law->b, rng);
      for (Index j = 0; j < config.n2; ++j) mu(j) = draw_beta(law->a, law->b, rng);
      if (!(lambda.maxCoeff() > 0.0) || !(mu.maxCoeff() > 0.0)) continue;
    } else {
      const auto& e = std::get<ExplicitEffort>(config.effort);
      lambda = e.lambda;
      mu = e.mu;
    }
    lambda = normalized(lambda);
    mu = normalized(mu);

    BinaryGrid m(config.n1, config.n2);
    CountGrid n(config.n1, config.n2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index i = 0; i < config.n1; ++i) {
      for (Index j = 0; j < config.n2; ++j) {
        m(i, j) = unif(rng) < config.pi(z1[static_cast<std::size_t>(i)], z2[static_cast<std::size_t>(j)]);
        std::poisson_distribution<std::int64_t> pois(lambda(i) * mu(j) * config.g);
        n(i, j) = pois(rng);
      }
    }
    const CountGrid r = m.cast<std::int64_t>().cwiseProduct(n);
    if ((r.array() == 0).all()) continue;

    DropResult dropped = drop_empty(CountMatrix(r));
    SimOutput out;
    const auto n1 = static_cast<Index>(dropped.kept_rows.size());
    const auto n2 = static_cast<Index>(dropped.kept_cols.size());
    BinaryGrid m_kept(n1, n2);
    out.n.resize(n1, n2);
    std::vector<int> z1_kept, z2_kept;
    out.true_lambda.resize(n1);
    out.true_mu.resize(n2);
    for (Index a = 0; a < n1; ++a) {
      const Index i = dropped.kept_rows[static_cast<std::size_t>(a)];
      z1_kept.push_back(z1[static_cast<std::size_t>(i)]);
      out.true_lambda(a) = lambda(i);
      for (Index b = 0; b < n2; ++b) {
        const Index j = dropped.kept_cols[static_cast<std::size_t>(b)];
        m_kept(a, b) = m(i, j);
        out.n(a, b) = n(i, j);
      }
    }
    for (Index b = 0; b < n2; ++b) {
      const Index j = dropped.kept_cols[static_cast<std::size_t>(b)];
      z2_kept.push_back(z2[static_cast<std::size_t>(j)]);
      out.true_mu(b) = mu(j);
    }
    const double lmax = out.true_lambda.maxCoeff();
    const double mmax = out.true_mu.maxCoeff();
    out.true_lambda /= lmax;
    out.true_mu /= mmax;
    out.true_g = config.g * lmax * mmax;
    out.m = BinaryMatrix(std::move(m_kept));
    out.m_full = BinaryMatrix(std::move(m));
    out.r = std::move(dropped.matrix);
    out.true_z1 = Clustering(std::move(z1_kept), static_cast<int>(config.alpha.size()));
    out.true_z2 = Clustering(std::move(z2_kept), static_cast<int>(config.beta.size()));
    out.kept_rows = std::move(dropped.kept_rows);
    out.kept_cols = std::move(dropped.kept_cols);
    return out;
  }
  throw Error(fmt::format("simulation produced an all-zero network {} times", kSimulationRetries));
}

CountMatrix subsample_multinomial(const CountMatrix& r, double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) throw Error("keep_fraction must lie in (0,1]");
  const std::int64_t total = r.total();
  if (total <= 0) throw Error("cannot sub-sample a matrix with zero total count");
  Rng rng = make_rng(seed, 0x4d554c54);

  // Sequential conditional binomials give an exact multinomial draw.
  std::int64_t remaining_draws = std::llround(keep_fraction * static_cast<double>(total));
  std::int64_t remaining_mass = total;
  CountGrid out = CountGrid::Zero(r.rows(), r.cols());
  for (Index j = 0; j < r.cols() && remaining_draws > 0; ++j) {
    for (Index i = 0; i < r.rows() && remaining_draws > 0; ++i) {
      const std::int64_t cell = r(i, j);
      if (cell == 0) continue;
      std::int64_t take = remaining_draws;
      if (cell < remaining_mass) {
        std::binomial_distribution<std::int64_t> binom(
            remaining_draws, static_cast<double>(cell) / static_cast<double>(remaining_mass));
        take = binom(rng);
      }
      out(i, j) = take;
      remaining_draws -= take;
      remaining_mass -= cell;
    }
  }
  return {std::move(out), r.row_names(), r.col_names()};
}

CountMatrix subsample_binomial(const CountMatrix& r, double p, std::uint64_t seed) {
  if (!(p > 0.0) || p > 1.0) throw Error("binomial keep probability must lie in (0,1]");
  Rng rng = make_rng(seed, 0x42494e4f);
  CountGrid out(r.rows(), r.cols());
  for (Index j = 0; j < r.cols(); ++j) {
    for (Index i = 0; i < r.rows(); ++i) {
      const std::int64_t cell = r(i, j);
      if (cell == 0 || p == 1.0) {
        out(i, j) = cell;
        continue;
      }
      std::binomial_distribution<std::int64_t> binom(cell, p);
      out(i, j) = binom(rng);
    }
  }
  return {std::move(out), r.row_names(), r.col_names()};
}

void write_sim_truth(const SimOutput& sim, const std::filesystem::path& path) {
  using nlohmann::json;
  json doc;
  json m = json::array();
  for (Index i = 0; i < sim.m.rows(); ++i) {
    std::vector<int> row(static_cast<std::size_t>(sim.m.cols()));
    for (Index j = 0; j < sim.m.cols(); ++j) row[static_cast<std::size_t>(j)] = sim.m(i, j) ? 1 : 0;
    m.push_back(row);
  }
  doc["m"] = m;
  doc["row_labels"] = sim.true_z1.one_based();
  doc["col_labels"] = sim.true_z2.one_based();
  doc["lambda"] = std::vector<double>(sim.true_lambda.data(), sim.true_lambda.data() + sim.true_lambda.size());
  doc["mu"] = std::vector<double>(sim.true_mu.data(), sim.true_mu.data() + sim.true_mu.size());
  doc["g"] = sim.true_g;
  std::vector<Index> rows(sim.kept_rows), cols(sim.kept_cols);
  for (auto& i : rows) ++i;
  for (auto& j : cols) ++j;
  doc["kept_rows"] = rows;
  doc["kept_cols"] = cols;
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(2) << '\n';
}

}  // namespace coop
