#include "coop/net_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace coop {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x436f4f50u};
  return Rng(seq);
}

namespace {

std::vector<std::string> default_names(const char* prefix, Index n) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) names.push_back(fmt::format("{}{}", prefix, i + 1));
  return names;
}

}  // namespace

CountMatrix::CountMatrix(CountGrid counts)
    : CountMatrix(counts, default_names("r", counts.rows()), default_names("c", counts.cols())) {}

CountMatrix::CountMatrix(CountGrid counts, std::vector<std::string> row_names,
                         std::vector<std::string> col_names)
    : counts_(std::move(counts)), row_names_(std::move(row_names)), col_names_(std::move(col_names)) {
  if (static_cast<Index>(row_names_.size()) != counts_.rows() ||
      static_cast<Index>(col_names_.size()) != counts_.cols()) {
    throw Error(fmt::format("count matrix is {}x{} but has {} row names and {} column names",
                            counts_.rows(), counts_.cols(), row_names_.size(), col_names_.size()));
  }
  for (Index j = 0; j < counts_.cols(); ++j) {
    for (Index i = 0; i < counts_.rows(); ++i) {
      if (counts_(i, j) < 0) {
        throw Error(fmt::format("negative count {} at row {}, column {}", counts_(i, j), i + 1, j + 1));
      }
    }
  }
}

BinaryMatrix::BinaryMatrix(BinaryGrid cells) : cells_(std::move(cells)) {
  if ((cells_.array() > 1).any()) throw Error("binary matrix cells must be 0 or 1");
}

BinaryMatrix BinaryMatrix::zeros(Index rows, Index cols) {
  return BinaryMatrix(BinaryGrid::Zero(rows, cols));
}

double BinaryMatrix::density() const {
  if (cells_.size() == 0) return 0.0;
  return static_cast<double>(ones()) / static_cast<double>(cells_.size());
}

Clustering::Clustering(std::vector<int> labels, int n_blocks)
    : labels_(std::move(labels)), n_blocks_(n_blocks) {
  if (n_blocks_ < 1) throw Error("a clustering needs at least one block");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= n_blocks_) {
      throw Error(fmt::format("label {} of node {} outside 1..{}", labels_[i] + 1, i + 1, n_blocks_));
    }
  }
}

Clustering Clustering::from_one_based(const std::vector<int>& labels, int n_blocks) {
  std::vector<int> zero_based(labels.size());
  std::transform(labels.begin(), labels.end(), zero_based.begin(), [](int l) { return l - 1; });
  return {std::move(zero_based), n_blocks};
}

std::vector<int> Clustering::one_based() const {
  std::vector<int> out(labels_.size());
  std::transform(labels_.begin(), labels_.end(), out.begin(), [](int l) { return l + 1; });
  return out;
}

std::vector<Index> Clustering::block_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(n_blocks_), 0);
  for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

MatrixXd Clustering::one_hot() const {
  MatrixXd z = MatrixXd::Zero(size(), n_blocks_);
  for (Index i = 0; i < size(); ++i) z(i, (*this)[i]) = 1.0;
  return z;
}

Clustering Clustering::canonical() const {
  std::vector<int> map(static_cast<std::size_t>(n_blocks_), -1);
  std::vector<int> out(labels_.size());
  int next = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    int& m = map[static_cast<std::size_t>(labels_[i])];
    if (m < 0) m = next++;
    out[i] = m;
  }
  return {std::move(out), n_blocks_};
}

namespace {

void validate_simplex(const VectorXd& v, const char* name) {
  if (v.size() == 0) throw Error(fmt::format("{} is empty", name));
  if ((v.array() <= 0.0).any()) throw Error(fmt::format("{} has a non-positive entry", name));
  if (std::abs(v.sum() - 1.0) > 1e-9) throw Error(fmt::format("{} does not sum to 1", name));
}

void validate_effort(const VectorXd& v, const char* name) {
  if (v.size() == 0) throw Error(fmt::format("{} is empty", name));
  if ((v.array() <= 0.0).any() || (v.array() > 1.0).any()) {
    throw Error(fmt::format("{} must lie in (0,1]", name));
  }
  if (v.maxCoeff() != 1.0) throw Error(fmt::format("max({}) must equal 1", name));
}

}  // namespace

void validate(const LbmParams& params) {
  validate_simplex(params.alpha, "alpha");
  validate_simplex(params.beta, "beta");
  if (params.pi.rows() != params.alpha.size() || params.pi.cols() != params.beta.size()) {
    throw Error("pi dimensions do not match alpha/beta");
  }
  if ((params.pi.array() < 0.0).any() || (params.pi.array() > 1.0).any()) {
    throw Error("pi entries must lie in [0,1]");
  }
}

void validate(const CoopParams& params) {
  validate(static_cast<const LbmParams&>(params));
  validate_effort(params.lambda, "lambda");
  validate_effort(params.mu, "mu");
  if (!(params.g > 0.0)) throw Error("g must be positive");
}

const char* to_string(ModelKind kind) { return kind == ModelKind::lbm ? "lbm" : "coop"; }

ModelKind parse_model_kind(const std::string& name) {
  if (name == "lbm") return ModelKind::lbm;
  if (name == "coop") return ModelKind::coop;
  throw Error(fmt::format("unknown model '{}'", name));
}

BinaryMatrix observed_support(const CountMatrix& r) {
  return BinaryMatrix((r.counts().array() > 0).cast<std::uint8_t>().matrix());
}

DropResult drop_empty(const CountMatrix& r) {
  DropResult out;
  for (Index i = 0; i < r.rows(); ++i) {
    if ((r.counts().row(i).array() > 0).any()) out.kept_rows.push_back(i);
  }
  for (Index j = 0; j < r.cols(); ++j) {
    if ((r.counts().col(j).array() > 0).any()) out.kept_cols.push_back(j);
  }
  if (out.kept_rows.empty()) throw Error("count matrix has no positive cell");

  CountGrid kept(static_cast<Index>(out.kept_rows.size()), static_cast<Index>(out.kept_cols.size()));
  std::vector<std::string> row_names, col_names;
  for (std::size_t a = 0; a < out.kept_rows.size(); ++a) {
    row_names.push_back(r.row_names()[static_cast<std::size_t>(out.kept_rows[a])]);
    for (std::size_t b = 0; b < out.kept_cols.size(); ++b) {
      kept(static_cast<Index>(a), static_cast<Index>(b)) = r(out.kept_rows[a], out.kept_cols[b]);
    }
  }
  for (Index j : out.kept_cols) col_names.push_back(r.col_names()[static_cast<std::size_t>(j)]);
  out.matrix = CountMatrix(std::move(kept), std::move(row_names), std::move(col_names));
  return out;
}

double log_conditional_obs_prob(std::int64_t r, double pi_kl, double rate) {
  if (rate < 0.0) throw Error("observation rate must be non-negative");
  if (r < 0) throw Error("count must be non-negative");
  if (r == 0) return std::log1p(-pi_kl * -std::expm1(-rate));
  if (pi_kl <= 0.0 || rate == 0.0) return -std::numeric_limits<double>::infinity();
  const double x = static_cast<double>(r);
  return std::log(pi_kl) + x * std::log(rate) - rate - std::lgamma(x + 1.0);
}

double conditional_obs_prob(std::int64_t r, double pi_kl, double rate) {
  if (r == 0) {
    if (rate < 0.0) throw Error("observation rate must be non-negative");
    return 1.0 - pi_kl * -std::expm1(-rate);
  }
  return std::exp(log_conditional_obs_prob(r, pi_kl, rate));
}

double complete_loglik(const CountMatrix& r, const Clustering& z1, const Clustering& z2,
                       const CoopParams& params) {
  if (z1.size() != r.rows() || z2.size() != r.cols()) {
    throw Error("clusterings do not match the count matrix dimensions");
  }
  if (params.alpha.size() != z1.n_blocks() || params.beta.size() != z2.n_blocks()) {
    throw Error("clusterings do not match the number of blocks in the parameters");
  }
  double ll = 0.0;
  for (Index i = 0; i < z1.size(); ++i) ll += std::log(params.alpha(z1[i]));
  for (Index j = 0; j < z2.size(); ++j) ll += std::log(params.beta(z2[j]));
  for (Index j = 0; j < r.cols(); ++j) {
    for (Index i = 0; i < r.rows(); ++i) {
      ll += log_conditional_obs_prob(r(i, j), params.pi(z1[i], z2[j]), params.rate(i, j));
    }
  }
  return ll;
}

}  // namespace coop
