#pragma once

// Synthetic networks drawn from the corrected observation process block model
// and the sub-sampling schemes used to validate missing-link predictions.

#include "coop/net_core.hpp"

#include <filesystem>
#include <variant>

namespace coop {

/// Efforts drawn i.i.d. from Beta(a, b), then divided by their maximum.
struct BetaLaw {
  double a = 0.3;
  double b = 1.5;
};

/// Fixed effort vectors, divided by their maximum before use.
struct ExplicitEffort {
  VectorXd lambda;
  VectorXd mu;
};

struct SimConfig {
  Index n1 = 100;
  Index n2 = 100;
  VectorXd alpha;
  VectorXd beta;
  MatrixXd pi;
  double g = 25.0;
  std::variant<BetaLaw, ExplicitEffort> effort = BetaLaw{};
  std::uint64_t seed = 0;
};

/// The three-block benchmark network: α = β = (1/3, 1/3, 1/3), the nested
/// 3×3 connection matrix and Beta(0.3, 1.5) efforts.
SimConfig three_block_config(Index n, double g, std::uint64_t seed);

/// Constant connection probability with heterogeneous efforts; an LBM fitted
/// on the support of such data finds spurious blocks.
SimConfig uniform_block_config(Index n, double pi, double g, std::uint64_t seed);

struct SimOutput {
  BinaryMatrix m;    // latent support, restricted to kept indices
  BinaryMatrix m_full;  // latent support before empty lines were dropped
  CountGrid n;       // Poisson draws, restricted to kept indices
  CountMatrix r;     // observed counts M ⊙ N, empty rows/columns dropped
  Clustering true_z1;
  Clustering true_z2;
  VectorXd true_lambda;  // renormalized over kept rows
  VectorXd true_mu;      // renormalized over kept columns
  double true_g = 0.0;   // matching global effort after renormalization
  std::vector<Index> kept_rows;
  std::vector<Index> kept_cols;
};

inline constexpr int kSimulationRetries = 100;

SimOutput simulate_coop(const SimConfig& config);

/// Multinomial redraw of round(keep_fraction · total) observations with cell
/// probabilities R_ij / total. Dimensions are preserved.
CountMatrix subsample_multinomial(const CountMatrix& r, double keep_fraction, std::uint64_t seed);

/// Independent Binomial(R_ij, p) thinning of every cell.
CountMatrix subsample_binomial(const CountMatrix& r, double p, std::uint64_t seed);

/// Sidecar document with M, Z¹, Z², λ, μ and G of a simulation.
void write_sim_truth(const SimOutput& sim, const std::filesystem::path& path);

/// Beta(a, b) variate built from two gamma draws.
double draw_beta(double a, double b, Rng& rng);

}  // namespace coop
