#pragma once

// Clustering, prediction and network-description metrics, plus completion of
// an observed support into an estimate of the latent one.

#include "coop/net_core.hpp"

#include <utility>
#include <vector>

namespace coop {

/// Hubert-Arabie adjusted Rand index.
double ari(const Clustering& a, const Clustering& b);

/// Mann-Whitney AUC with average ranks for ties. `labels` are 0/1.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// 1 - (f1/n) · f1(n-1) / (f1(n-1) + 2(f2+1)).
double chao_coverage(const CountMatrix& r);

/// Σ V / (n1 n2 Ĉ). Not clamped to [0,1].
double connectivity_chao(const BinaryMatrix& v, double c_hat);

/// Mean over cells of 1 when R > 0, P(M=1 | R=0) otherwise.
double connectivity_coop(const FitResult& result, const CountMatrix& r);

/// NODF on the [0,1] scale.
double nodf(const BinaryMatrix& v);

struct ModularityResult {
  double q = 0.0;
  /// Module of each row node, then of each column node.
  std::vector<int> row_modules;
  std::vector<int> col_modules;
};

/// Barber's Q_B of a given assignment.
double barber_modularity(const BinaryMatrix& v, const std::vector<int>& row_modules,
                         const std::vector<int>& col_modules);

/// Label-propagation maximization of Q_B with seeded restarts.
ModularityResult bipartite_modularity(const BinaryMatrix& v, int restarts, std::uint64_t seed);

enum class CompletionKind { lbm_oracle_nmiss = 1, coop_bernoulli = 2, uniform_nmiss = 3 };

struct CompletionMethod {
  CompletionKind kind = CompletionKind::coop_bernoulli;
  std::int64_t n_miss = 0;
  std::uint64_t seed = 0;
};

/// Kind 1 draws n_miss zero cells without replacement with weight π̂ of their
/// LBM block; kind 2 sets each zero cell with its CoOP missing probability;
/// kind 3 draws n_miss zero cells uniformly. `fit` may be null for kind 3.
BinaryMatrix complete_matrix(const BinaryMatrix& v, const CompletionMethod& method,
                             const FitResult* fit);

CompletionKind parse_completion_kind(int kind);

double rmse(const VectorXd& truth, const VectorXd& estimate);

}  // namespace coop
