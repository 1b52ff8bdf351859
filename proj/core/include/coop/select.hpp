#pragma once

// Integrated classification likelihood and exploration of the (Q₁, Q₂) grid.

#include "coop/lbm.hpp"
#include "coop/sem.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace coop {

/// (Q₁−1)/2·log n₁ + (Q₂−1)/2·log n₂ + (Q₁Q₂ + n₁ + n₂ − 1)/2·log(n₁n₂)
double coop_icl_penalty(int q1, int q2, Index n1, Index n2);

/// (Q₁−1)/2·log n₁ + (Q₂−1)/2·log n₂ + Q₁Q₂/2·log(n₁n₂)
double lbm_icl_penalty(int q1, int q2, Index n1, Index n2);

/// Complete-data log-likelihood at the hard clusterings after one exact
/// M-step (α, β by counts, π by block means of the final imputed support,
/// λ, μ, G by the fixed point) minus the CoOP penalty.
double coop_icl(const FitResult& result, const CountMatrix& r);

/// The parameters used inside coop_icl.
CoopParams coop_icl_params(const FitResult& result, const CountMatrix& r);

enum class Trigger { initial, forward, split, merge };
const char* to_string(Trigger trigger);

struct ExplorationStep {
  int q1 = 0;
  int q2 = 0;
  Trigger trigger = Trigger::initial;
  double icl = 0.0;
  bool accepted = false;
};

struct SelectConfig {
  int q_max = 10;
  /// Non-improving forward steps tolerated per dimension.
  int patience = 2;
  int max_deepening_rounds = 10;
  SemConfig sem;
  VemConfig vem;
  InitMethod init = InitMethod::hierarchical;
  std::uint64_t seed = 0;
  int threads = 1;
};

using GridKey = std::pair<int, int>;

struct SelectionReport {
  ModelKind model = ModelKind::coop;
  std::map<GridKey, FitResult> grid;
  GridKey best{1, 1};
  std::vector<ExplorationStep> exploration_log;

  const FitResult& best_fit() const { return grid.at(best); }
};

/// Forward exploration from (1,1) followed by split/merge deepening around
/// the best cell.
SelectionReport explore(const CountMatrix& r, ModelKind model, const SelectConfig& config);

/// Splits the largest block of `z` (rows of `data`) in two by 2-means on
/// mean-count profiles over the blocks of `other`. Empty when the block
/// cannot be split.
std::optional<Clustering> split_largest_block(const MatrixXd& data, const Clustering& z,
                                              const Clustering& other, std::uint64_t seed);

/// Merges the two blocks whose π rows are closest in L1 distance. Empty for a
/// single-block clustering.
std::optional<Clustering> merge_closest_blocks(const MatrixXd& pi_rows, const Clustering& z);

}  // namespace coop
