#pragma once

// Stochastic EM for the corrected observation process block model.
//
// One iteration runs, in order:
//   a) α, β from the current labels,
//   b) λ, μ, G by the fixed point on the current imputed support M̃,
//   c) a fresh M̃: every zero count becomes 1 with P(M=1 | R=0, θ, Z),
//   d) π as block means of M̃,
//   e) row labels given column labels, then column labels given the new rows.
// Post-burn-in parameter snapshots are label-aligned and averaged; the hard
// clustering is the per-node majority of post-burn-in label samples.

#include "coop/net_core.hpp"

#include <optional>
#include <utility>

namespace coop {

enum class InitMethod { hierarchical, spectral, kmeans };

const char* to_string(InitMethod method);
InitMethod parse_init_method(const std::string& name);

struct SemConfig {
  int burn_in = 50;
  int post_iter = 50;
  double eps = 1e-4;
  double fp_tol = 1e-8;
  int fp_max_iter = 100;
  std::uint64_t seed = 0;
  int restarts = 3;
  InitMethod init = InitMethod::hierarchical;
  /// Record a TraceEntry (parameters + complete log-likelihood) per iteration.
  bool keep_trace = true;
};

void validate(const SemConfig& config);

using ClusteringPair = std::pair<Clustering, Clustering>;

/// Clusters the rows and columns of the binarized counts.
///   hierarchical: Ward linkage on Manhattan distances of binary profiles
///   spectral:     k-means on leading singular vectors of D₁^{-1/2} V D₂^{-1/2}
///   kmeans:       k-means++ on binary profiles
ClusteringPair init_clustering(const CountMatrix& r, int q1, int q2, InitMethod method,
                               std::uint64_t seed);

/// Same routines on an arbitrary binary support (used by the LBM baseline).
ClusteringPair init_clustering(const BinaryMatrix& v, int q1, int q2, InitMethod method,
                               std::uint64_t seed);

struct MixingProportions {
  VectorXd alpha;
  VectorXd beta;
};

/// Label frequencies, floored at kMixingFloor and renormalized.
MixingProportions mstep_mixing(const Clustering& z1, const Clustering& z2);
VectorXd block_proportions(const Clustering& z);

struct EffortEstimate {
  VectorXd lambda;
  VectorXd mu;
  double g = 0.0;
  bool converged = true;
  int iterations = 0;
};

/// Fixed point for the row efforts, normalized by the maximum, followed by the
/// closed form for Gμ. `start` defaults to all ones.
EffortEstimate fit_sampling_effort(const CountMatrix& r, const BinaryMatrix& m, double fp_tol,
                                   int fp_max_iter, const VectorXd* start = nullptr);

/// P(M=1 | R=0) = π e^{-rate} / (1 - π (1 - e^{-rate})).
double imputation_probability(double pi_kl, double rate);

BinaryMatrix sstep_impute_support(const CountMatrix& r, const Clustering& z1, const Clustering& z2,
                                  const CoopParams& params, Rng& rng);

struct PiUpdate {
  MatrixXd pi;
  bool empty_block = false;
};

/// Block means of M̃, clamped. Blocks without rows or columns keep `previous`.
PiUpdate mstep_pi(const BinaryMatrix& m_tilde, const Clustering& z1, const Clustering& z2,
                  const MatrixXd& previous);

/// Samples every row label from its full conditional given the column labels.
Clustering sstep_sample_row_labels(const CountMatrix& r, const CoopParams& params,
                                   const Clustering& z2, Rng& rng);
/// Symmetric column update given the row labels.
Clustering sstep_sample_col_labels(const CountMatrix& r, const CoopParams& params,
                                   const Clustering& z1, Rng& rng);

/// Log of the unnormalized full-conditional weights of every row (n₁ × Q₁).
MatrixXd row_label_log_weights(const CountMatrix& r, const CoopParams& params, const Clustering& z2);

/// Observer hook invoked after each SEM iteration with the new imputed support.
struct SemObserver {
  virtual ~SemObserver() = default;
  virtual void on_iteration(int iteration, const BinaryMatrix& m_tilde, const Clustering& z1,
                            const Clustering& z2, const CoopParams& params) = 0;
};

/// Runs the chain `config.restarts` times and keeps the run with the highest
/// complete-data log-likelihood at its averaged parameters. `init` overrides
/// the clustering initialization.
FitResult run_sem(const CountMatrix& r, int q1, int q2, const SemConfig& config,
                  const std::optional<ClusteringPair>& init = std::nullopt,
                  SemObserver* observer = nullptr);

/// P(M=1 | R) per cell with hard labels; 1 on observed cells.
MatrixXd coop_missing_prob(const FitResult& result, const CountMatrix& r);

/// P(R > 0) = π (1 - e^{-rate}) per cell with hard labels.
MatrixXd observed_missing_prob(const FitResult& result);

/// Permutation `perm` with perm[new_label] = old_label maximizing agreement.
std::vector<int> align_labels(const Clustering& previous, const Clustering& next);

}  // namespace coop
