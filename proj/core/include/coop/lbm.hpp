#pragma once

// Baseline binary latent block model fitted by variational EM on the
// observed support.

#include "coop/net_core.hpp"

namespace coop {

struct VemConfig {
  int max_iter = 200;
  /// Relative ELBO change below which the iterations stop.
  double tol = 1e-6;
};

/// Floor applied to variational responsibilities before renormalizing.
inline constexpr double kResponsibilityFloor = 1e-10;

/// Mean-field VEM for the Bernoulli LBM started from hard clusterings.
/// The result carries the ELBO trace, hard labels (argmax responsibility),
/// the classical LBM ICL and the block-probability surrogate in missing_prob.
FitResult vem_fit(const BinaryMatrix& v, int q1, int q2, const Clustering& init_rows,
                  const Clustering& init_cols, const VemConfig& config = {});

/// Evidence lower bound at responsibilities (tau1, tau2) and parameters.
double lbm_elbo(const BinaryMatrix& v, const MatrixXd& tau1, const MatrixXd& tau2,
                const LbmParams& params);

/// Completed-data log-likelihood at the hard clusterings and their MLE,
/// minus the classical binary-LBM penalty.
double lbm_icl(const FitResult& result, const BinaryMatrix& v);

/// Σ_kl Ẑ¹_ik Ẑ²_jl π̂_kl on cells with V_ij = 0 and 1 on observed cells.
MatrixXd lbm_missing_prob(const FitResult& result, const BinaryMatrix& v);

}  // namespace coop
