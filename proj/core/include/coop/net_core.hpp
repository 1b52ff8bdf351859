#pragma once

// Core data types for weighted bipartite interaction networks and the
// likelihood of the corrected observation process block model.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace coop {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using CountGrid = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using BinaryGrid = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lower/upper clamp applied to every estimated connection probability.
inline constexpr double kPiClamp = 1e-6;
/// Floor applied to mixing proportions before renormalization.
inline constexpr double kMixingFloor = 1e-6;

inline double clamp_pi(double p) {
  return p < kPiClamp ? kPiClamp : (p > 1.0 - kPiClamp ? 1.0 - kPiClamp : p);
}

/// Deterministic RNG for a (seed, stream) pair; streams give independent
/// sequences for restarts and replicates.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Observed weighted network R: non-negative integer interaction counts with
/// row and column species names.
class CountMatrix {
 public:
  CountMatrix() = default;
  explicit CountMatrix(CountGrid counts);
  CountMatrix(CountGrid counts, std::vector<std::string> row_names,
              std::vector<std::string> col_names);

  Index rows() const { return counts_.rows(); }
  Index cols() const { return counts_.cols(); }
  std::int64_t operator()(Index i, Index j) const { return counts_(i, j); }
  const CountGrid& counts() const { return counts_; }
  const std::vector<std::string>& row_names() const { return row_names_; }
  const std::vector<std::string>& col_names() const { return col_names_; }
  std::int64_t total() const { return counts_.sum(); }

 private:
  CountGrid counts_;
  std::vector<std::string> row_names_;
  std::vector<std::string> col_names_;
};

/// A {0,1} grid: latent support M, observed support V or an imputed support.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  explicit BinaryMatrix(BinaryGrid cells);
  static BinaryMatrix zeros(Index rows, Index cols);

  Index rows() const { return cells_.rows(); }
  Index cols() const { return cells_.cols(); }
  bool operator()(Index i, Index j) const { return cells_(i, j) != 0; }
  const BinaryGrid& cells() const { return cells_; }
  std::int64_t ones() const { return cells_.cast<std::int64_t>().sum(); }
  double density() const;
  MatrixXd as_double() const { return cells_.cast<double>(); }

  friend bool operator==(const BinaryMatrix& a, const BinaryMatrix& b) {
    return a.cells_.rows() == b.cells_.rows() && a.cells_.cols() == b.cells_.cols() &&
           a.cells_ == b.cells_;
  }

 private:
  BinaryGrid cells_;
};

/// Hard block assignment of nodes. Labels are 0-based internally; files and
/// the CLI use 1-based labels.
class Clustering {
 public:
  Clustering() = default;
  Clustering(std::vector<int> labels, int n_blocks);
  static Clustering single_block(Index n) { return {std::vector<int>(n, 0), 1}; }
  static Clustering from_one_based(const std::vector<int>& labels, int n_blocks);

  Index size() const { return static_cast<Index>(labels_.size()); }
  int n_blocks() const { return n_blocks_; }
  int operator[](Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }
  std::vector<int> one_based() const;
  std::vector<Index> block_sizes() const;
  /// n × Q indicator matrix.
  MatrixXd one_hot() const;
  /// Same partition with labels renumbered by first appearance.
  Clustering canonical() const;

  friend bool operator==(const Clustering&, const Clustering&) = default;

 private:
  std::vector<int> labels_;
  int n_blocks_ = 0;
};

struct LbmParams {
  VectorXd alpha;
  VectorXd beta;
  MatrixXd pi;
};

struct CoopParams : LbmParams {
  VectorXd lambda;
  VectorXd mu;
  double g = 1.0;

  /// Poisson intensity λᵢμⱼG of cell (i, j).
  double rate(Index i, Index j) const { return lambda(i) * mu(j) * g; }
};

/// Throws Error when a parameter set breaks its simplex/range constraints.
void validate(const LbmParams& params);
void validate(const CoopParams& params);

enum class ModelKind { lbm, coop };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct TraceEntry {
  CoopParams params;
  double loglik = 0.0;
};

struct FitResult {
  ModelKind model = ModelKind::coop;
  /// Effort fields (lambda, mu, g) are empty/unused for the LBM baseline.
  CoopParams params;
  Clustering row_clustering;
  Clustering col_clustering;
  double icl = 0.0;
  std::vector<TraceEntry> trace;
  /// P(M=1 | R) for CoOP fits, block-probability surrogate for LBM fits.
  std::optional<MatrixXd> missing_prob;
  std::uint64_t seed = 0;

  /// Last imputed support of the winning SEM chain (CoOP only).
  std::optional<BinaryMatrix> m_tilde;
  /// ELBO per VEM iteration (LBM only).
  std::vector<double> elbo;
  bool empty_block = false;
  bool effort_converged = true;

  int q1() const { return static_cast<int>(params.alpha.size()); }
  int q2() const { return static_cast<int>(params.beta.size()); }
};

// ---------------------------------------------------------------------------
// Operations

/// V with V_ij = 1 iff R_ij > 0.
BinaryMatrix observed_support(const CountMatrix& r);

struct DropResult {
  CountMatrix matrix;
  std::vector<Index> kept_rows;  // 0-based indices into the input
  std::vector<Index> kept_cols;
};

/// Removes all-zero rows and columns. Throws if nothing remains.
DropResult drop_empty(const CountMatrix& r);

/// P(R_ij = r | block (k,l)) under the zero-inflated Poisson observation model.
double conditional_obs_prob(std::int64_t r, double pi_kl, double rate);
double log_conditional_obs_prob(std::int64_t r, double pi_kl, double rate);

/// Complete-data log-likelihood log L(R, Z¹, Z²; θ). Returns -inf when a
/// degenerate π contradicts an observation.
double complete_loglik(const CountMatrix& r, const Clustering& z1, const Clustering& z2,
                       const CoopParams& params);

}  // namespace coop
