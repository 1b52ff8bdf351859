#include "coop/lbm.hpp"

#include "coop/select.hpp"

#include <cmath>

#include <fmt/format.h>

namespace coop {

namespace {

MatrixXd responsibilities_from(const Clustering& z) {
  MatrixXd tau = z.one_hot().cwiseMax(kResponsibilityFloor);
  for (Index i = 0; i < tau.rows(); ++i) tau.row(i) /= tau.row(i).sum();
  return tau;
}

double entropy(const MatrixXd& tau) {
  return -(tau.array() * tau.array().log()).sum();
}

// Exact maximizer of the ELBO over (α, β, π) given the responsibilities.
LbmParams mstep(const MatrixXd& v, const MatrixXd& tau1, const MatrixXd& tau2) {
  LbmParams p;
  p.alpha = tau1.colwise().mean().transpose();
  p.beta = tau2.colwise().mean().transpose();
  const MatrixXd ones = tau1.transpose() * v * tau2;
  const MatrixXd cells = tau1.colwise().sum().transpose() * tau2.colwise().sum();
  p.pi = ones.cwiseQuotient(cells).unaryExpr([](double x) { return clamp_pi(x); });
  return p;
}

// Mean-field update of the responsibilities of the rows of `v` given the
// column responsibilities. `pi` is oriented rows × columns of `v`.
MatrixXd estep(const MatrixXd& v, const MatrixXd& tau_other, const VectorXd& proportions,
               const MatrixXd& pi) {
  const MatrixXd log_pi = pi.array().log().matrix();
  const MatrixXd log_1m = (1.0 - pi.array()).log().matrix();
  const MatrixXd ones = v * tau_other;                       // n × Q_other
  const VectorXd mass = tau_other.colwise().sum().transpose();  // Q_other
  MatrixXd w = ones * (log_pi - log_1m).transpose();
  const VectorXd base = log_1m * mass;  // Q_self
  for (Index k = 0; k < w.cols(); ++k) w.col(k).array() += base(k) + std::log(proportions(k));

  MatrixXd tau(w.rows(), w.cols());
  for (Index i = 0; i < w.rows(); ++i) {
    const double top = w.row(i).maxCoeff();
    tau.row(i) = (w.row(i).array() - top).exp();
    tau.row(i) /= tau.row(i).sum();
    tau.row(i) = tau.row(i).cwiseMax(kResponsibilityFloor);
    tau.row(i) /= tau.row(i).sum();
  }
  return tau;
}

Clustering hard(const MatrixXd& tau) {
  std::vector<int> labels(static_cast<std::size_t>(tau.rows()));
  for (Index i = 0; i < tau.rows(); ++i) {
    Index k = 0;
    tau.row(i).maxCoeff(&k);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return {std::move(labels), static_cast<int>(tau.cols())};
}

}  // namespace

double lbm_elbo(const BinaryMatrix& v, const MatrixXd& tau1, const MatrixXd& tau2,
                const LbmParams& params) {
  const MatrixXd vd = v.as_double();
  const MatrixXd ones = tau1.transpose() * vd * tau2;
  const MatrixXd cells = tau1.colwise().sum().transpose() * tau2.colwise().sum();
  const double data = (ones.array() * params.pi.array().log() +
                       (cells - ones).array() * (1.0 - params.pi.array()).log())
                          .sum();
  const double prior = (tau1 * params.alpha.array().log().matrix()).sum() +
                       (tau2 * params.beta.array().log().matrix()).sum();
  return data + prior + entropy(tau1) + entropy(tau2);
}

FitResult vem_fit(const BinaryMatrix& v, int q1, int q2, const Clustering& init_rows,
                  const Clustering& init_cols, const VemConfig& config) {
  if (q1 < 1 || q2 < 1 || q1 > v.rows() || q2 > v.cols()) {
    throw Error(fmt::format("cannot fit {}x{} blocks on a {}x{} support", q1, q2, v.rows(), v.cols()));
  }
  if (init_rows.n_blocks() != q1 || init_cols.n_blocks() != q2 || init_rows.size() != v.rows() ||
      init_cols.size() != v.cols()) {
    throw Error("initial clustering does not match the support or block counts");
  }
  const MatrixXd vd = v.as_double();
  const MatrixXd vt = vd.transpose();
  MatrixXd tau1 = responsibilities_from(init_rows);
  MatrixXd tau2 = responsibilities_from(init_cols);
  LbmParams params = mstep(vd, tau1, tau2);

  FitResult fit;
  fit.model = ModelKind::lbm;
  fit.elbo.push_back(lbm_elbo(v, tau1, tau2, params));
  for (int it = 0; it < config.max_iter; ++it) {
    tau1 = estep(vd, tau2, params.alpha, params.pi);
    params = mstep(vd, tau1, tau2);
    tau2 = estep(vt, tau1, params.beta, params.pi.transpose());
    params = mstep(vd, tau1, tau2);
    const double elbo = lbm_elbo(v, tau1, tau2, params);
    const double previous = fit.elbo.back();
    fit.elbo.push_back(elbo);
    if (std::abs(elbo - previous) < config.tol * std::abs(previous)) break;
  }

  fit.params.alpha = params.alpha;
  fit.params.beta = params.beta;
  fit.params.pi = params.pi;
  fit.row_clustering = hard(tau1);
  fit.col_clustering = hard(tau2);
  for (Index n : fit.row_clustering.block_sizes()) fit.empty_block = fit.empty_block || n == 0;
  for (Index n : fit.col_clustering.block_sizes()) fit.empty_block = fit.empty_block || n == 0;
  fit.icl = lbm_icl(fit, v);
  fit.missing_prob = lbm_missing_prob(fit, v);
  return fit;
}

double lbm_icl(const FitResult& result, const BinaryMatrix& v) {
  const Clustering& z1 = result.row_clustering;
  const Clustering& z2 = result.col_clustering;
  const VectorXd alpha = block_proportions(z1);
  const VectorXd beta = block_proportions(z2);
  const MatrixXd pi = mstep_pi(v, z1, z2, result.params.pi).pi;

  double ll = 0.0;
  for (Index i = 0; i < z1.size(); ++i) ll += std::log(alpha(z1[i]));
  for (Index j = 0; j < z2.size(); ++j) ll += std::log(beta(z2[j]));
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      const double p = pi(z1[i], z2[j]);
      ll += v(i, j) ? std::log(p) : std::log1p(-p);
    }
  }
  return ll - lbm_icl_penalty(z1.n_blocks(), z2.n_blocks(), v.rows(), v.cols());
}

MatrixXd lbm_missing_prob(const FitResult& result, const BinaryMatrix& v) {
  MatrixXd out(v.rows(), v.cols());
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      out(i, j) = v(i, j) ? 1.0 : result.params.pi(result.row_clustering[i], result.col_clustering[j]);
    }
  }
  return out;
}

}  // namespace coop
