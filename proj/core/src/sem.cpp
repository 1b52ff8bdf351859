#include "coop/sem.hpp"

#include "coop/select.hpp"

#include "assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace coop {

void validate(const SemConfig& c) {
  if (c.burn_in < 0 || c.post_iter < 1) throw Error("need burn_in >= 0 and post_iter >= 1");
  if (!(c.eps > 0.0) || !(c.fp_tol > 0.0)) throw Error("tolerances must be positive");
  if (c.fp_max_iter < 1 || c.restarts < 1) throw Error("fp_max_iter and restarts must be positive");
}

VectorXd block_proportions(const Clustering& z) {
  VectorXd p = VectorXd::Zero(z.n_blocks());
  for (Index i = 0; i < z.size(); ++i) p(z[i]) += 1.0;
  p /= static_cast<double>(z.size());
  p = p.cwiseMax(kMixingFloor);
  return p / p.sum();
}

MixingProportions mstep_mixing(const Clustering& z1, const Clustering& z2) {
  return {block_proportions(z1), block_proportions(z2)};
}

EffortEstimate fit_sampling_effort(const CountMatrix& r, const BinaryMatrix& m, double fp_tol,
                                   int fp_max_iter, const VectorXd* start) {
  if (m.rows() != r.rows() || m.cols() != r.cols()) throw Error("support and counts differ in shape");
  const MatrixXd md = m.as_double();
  const MatrixXd rd = r.counts().cast<double>();
  if (((rd.array() > 0.0) && (md.array() == 0.0)).any()) {
    throw Error("support must cover every positive count");
  }
  if ((md.rowwise().sum().array() == 0.0).any() || (md.colwise().sum().array() == 0.0).any()) {
    throw Error("every row and column of the support needs at least one interaction");
  }
  const VectorXd row_totals = rd.rowwise().sum();
  const VectorXd col_totals = rd.colwise().sum().transpose();

  EffortEstimate est;
  VectorXd lambda = start ? *start : VectorXd::Ones(r.rows());
  if (lambda.size() != r.rows() || !(lambda.maxCoeff() > 0.0)) throw Error("bad fixed-point start");
  lambda /= lambda.maxCoeff();

  est.converged = false;
  for (int it = 1; it <= fp_max_iter; ++it) {
    const VectorXd g_mu = col_totals.cwiseQuotient(md.transpose() * lambda);
    VectorXd next = row_totals.cwiseQuotient(md * g_mu);
    next /= next.maxCoeff();
    const double change = (next - lambda).cwiseAbs().maxCoeff();
    lambda = std::move(next);
    est.iterations = it;
    if (change < fp_tol) {
      est.converged = true;
      break;
    }
  }
  const VectorXd g_mu = col_totals.cwiseQuotient(md.transpose() * lambda);
  est.g = g_mu.maxCoeff();
  if (!(est.g > 0.0)) throw Error("no observations to estimate the global effort");
  est.mu = g_mu / est.g;
  est.lambda = std::move(lambda);
  return est;
}

double imputation_probability(double pi_kl, double rate) {
  const double miss = std::exp(-rate);
  const double num = pi_kl * miss;
  const double den = (1.0 - pi_kl) + num;
  return den > 0.0 ? num / den : 1.0;
}

namespace {

MatrixXd detection_probabilities(const CoopParams& params, Index n1, Index n2) {
  MatrixXd q(n1, n2);
  for (Index j = 0; j < n2; ++j) {
    for (Index i = 0; i < n1; ++i) q(i, j) = -std::expm1(-params.rate(i, j));
  }
  return q;
}

// Log full-conditional weights of the labels of the rows of `counts`
// given the labels `other` of its columns. `pi` is oriented self × other and
// `detect` holds 1 - e^{-rate} per cell.
MatrixXd label_log_weights(const CountGrid& counts, const MatrixXd& detect, const MatrixXd& pi,
                           const VectorXd& proportions, const Clustering& other) {
  const Index n = counts.rows();
  const Index q_self = pi.rows();
  const Index q_other = pi.cols();
  const MatrixXd log_pi = pi.array().log().matrix();

  MatrixXd positives = MatrixXd::Zero(n, q_other);
  for (Index j = 0; j < counts.cols(); ++j) {
    const int l = other[j];
    for (Index i = 0; i < n; ++i) {
      if (counts(i, j) > 0) positives(i, l) += 1.0;
    }
  }
  MatrixXd w = positives * log_pi.transpose();
  for (Index k = 0; k < q_self; ++k) w.col(k).array() += std::log(proportions(k));

  for (Index j = 0; j < counts.cols(); ++j) {
    const int l = other[j];
    for (Index i = 0; i < n; ++i) {
      if (counts(i, j) > 0) continue;
      const double d = detect(i, j);
      for (Index k = 0; k < q_self; ++k) w(i, k) += std::log1p(-pi(k, l) * d);
    }
  }
  return w;
}

Clustering sample_from_log_weights(const MatrixXd& w, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto q = static_cast<int>(w.cols());
  std::vector<int> labels(static_cast<std::size_t>(w.rows()));
  VectorXd p(q);
  for (Index i = 0; i < w.rows(); ++i) {
    const double top = w.row(i).maxCoeff();
    if (!std::isfinite(top)) throw Error(fmt::format("node {} has no admissible block", i + 1));
    for (int k = 0; k < q; ++k) p(k) = std::exp(w(i, k) - top);
    double u = unif(rng) * p.sum();
    int chosen = q - 1;
    for (int k = 0; k < q; ++k) {
      u -= p(k);
      if (u < 0.0) {
        chosen = k;
        break;
      }
    }
    labels[static_cast<std::size_t>(i)] = chosen;
  }
  return Clustering(std::move(labels), q);
}

CoopParams transposed(const CoopParams& p) {
  CoopParams t;
  t.alpha = p.beta;
  t.beta = p.alpha;
  t.pi = p.pi.transpose();
  t.lambda = p.mu;
  t.mu = p.lambda;
  t.g = p.g;
  return t;
}

}  // namespace

BinaryMatrix sstep_impute_support(const CountMatrix& r, const Clustering& z1, const Clustering& z2,
                                  const CoopParams& params, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BinaryGrid out(r.rows(), r.cols());
  for (Index j = 0; j < r.cols(); ++j) {
    for (Index i = 0; i < r.rows(); ++i) {
      if (r(i, j) > 0) {
        out(i, j) = 1;
        continue;
      }
      const double p = imputation_probability(params.pi(z1[i], z2[j]), params.rate(i, j));
      out(i, j) = unif(rng) < p ? 1 : 0;
    }
  }
  return BinaryMatrix(std::move(out));
}

PiUpdate mstep_pi(const BinaryMatrix& m_tilde, const Clustering& z1, const Clustering& z2,
                  const MatrixXd& previous) {
  const MatrixXd z1h = z1.one_hot();
  const MatrixXd z2h = z2.one_hot();
  const MatrixXd ones = z1h.transpose() * m_tilde.as_double() * z2h;
  const VectorXd n1 = z1h.colwise().sum().transpose();
  const VectorXd n2 = z2h.colwise().sum().transpose();
  PiUpdate out{MatrixXd(z1.n_blocks(), z2.n_blocks()), false};
  for (Index k = 0; k < out.pi.rows(); ++k) {
    for (Index l = 0; l < out.pi.cols(); ++l) {
      const double cells = n1(k) * n2(l);
      if (cells == 0.0) {
        out.pi(k, l) = previous.size() ? previous(k, l) : 0.5;
        out.empty_block = true;
      } else {
        out.pi(k, l) = clamp_pi(ones(k, l) / cells);
      }
    }
  }
  return out;
}

MatrixXd row_label_log_weights(const CountMatrix& r, const CoopParams& params, const Clustering& z2) {
  const MatrixXd detect = detection_probabilities(params, r.rows(), r.cols());
  return label_log_weights(r.counts(), detect, params.pi, params.alpha, z2);
}

Clustering sstep_sample_row_labels(const CountMatrix& r, const CoopParams& params,
                                   const Clustering& z2, Rng& rng) {
  return sample_from_log_weights(row_label_log_weights(r, params, z2), rng);
}

Clustering sstep_sample_col_labels(const CountMatrix& r, const CoopParams& params,
                                   const Clustering& z1, Rng& rng) {
  const CoopParams t = transposed(params);
  const CountGrid counts_t = r.counts().transpose();
  const MatrixXd detect = detection_probabilities(t, counts_t.rows(), counts_t.cols());
  return sample_from_log_weights(label_log_weights(counts_t, detect, t.pi, t.alpha, z1), rng);
}

std::vector<int> align_labels(const Clustering& previous, const Clustering& next) {
  const int q = next.n_blocks();
  if (previous.n_blocks() != q || previous.size() != next.size()) {
    throw Error("cannot align clusterings of different shapes");
  }
  MatrixXd overlap = MatrixXd::Zero(q, q);
  for (Index i = 0; i < next.size(); ++i) overlap(next[i], previous[i]) += 1.0;
  const MatrixXd cost = overlap.maxCoeff() - overlap.array();
  return detail::min_cost_assignment(cost);
}

namespace {

Clustering relabel(const Clustering& z, const std::vector<int>& perm) {
  std::vector<int> labels(z.labels().size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = perm[static_cast<std::size_t>(z.labels()[i])];
  return {std::move(labels), z.n_blocks()};
}

bool is_identity(const std::vector<int>& perm) {
  for (std::size_t k = 0; k < perm.size(); ++k) {
    if (perm[k] != static_cast<int>(k)) return false;
  }
  return true;
}

VectorXd flatten(const CoopParams& p) {
  VectorXd v(p.alpha.size() + p.beta.size() + p.pi.size() + p.lambda.size() + p.mu.size() + 1);
  Index o = 0;
  v.segment(o, p.alpha.size()) = p.alpha;
  o += p.alpha.size();
  v.segment(o, p.beta.size()) = p.beta;
  o += p.beta.size();
  v.segment(o, p.pi.size()) = p.pi.reshaped();
  o += p.pi.size();
  v.segment(o, p.lambda.size()) = p.lambda;
  o += p.lambda.size();
  v.segment(o, p.mu.size()) = p.mu;
  o += p.mu.size();
  v(o) = p.g;
  return v;
}

CoopParams unflatten(const VectorXd& v, int q1, int q2, Index n1, Index n2) {
  CoopParams p;
  Index o = 0;
  p.alpha = v.segment(o, q1);
  o += q1;
  p.beta = v.segment(o, q2);
  o += q2;
  p.pi = v.segment(o, q1 * q2).reshaped(q1, q2);
  o += q1 * q2;
  p.lambda = v.segment(o, n1);
  o += n1;
  p.mu = v.segment(o, n2);
  o += n2;
  p.g = v(o);
  // Averages of max-normalized vectors can fall below 1 at the top; move
  // that scale into G so the rates are unchanged.
  const double lmax = p.lambda.maxCoeff();
  const double mmax = p.mu.maxCoeff();
  p.lambda /= lmax;
  p.mu /= mmax;
  p.g *= lmax * mmax;
  p.alpha /= p.alpha.sum();
  p.beta /= p.beta.sum();
  return p;
}

Clustering majority(const MatrixXd& votes) {
  std::vector<int> labels(static_cast<std::size_t>(votes.rows()));
  for (Index i = 0; i < votes.rows(); ++i) {
    Index best = 0;
    votes.row(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return {std::move(labels), static_cast<int>(votes.cols())};
}

struct ChainResult {
  FitResult fit;
  double loglik = -std::numeric_limits<double>::infinity();
};

ChainResult run_chain(const CountMatrix& r, int q1, int q2, const SemConfig& cfg,
                      const ClusteringPair& init, std::uint64_t stream, SemObserver* observer) {
  Rng rng = make_rng(cfg.seed, stream);
  Clustering z1 = init.first;
  Clustering z2 = init.second;
  BinaryMatrix m_tilde = observed_support(r);

  CoopParams params;
  params.pi = mstep_pi(m_tilde, z1, z2, MatrixXd::Constant(q1, q2, 0.5)).pi;

  ChainResult out;
  FitResult& fit = out.fit;
  fit.model = ModelKind::coop;
  fit.seed = cfg.seed;

  MatrixXd row_votes = MatrixXd::Zero(r.rows(), q1);
  MatrixXd col_votes = MatrixXd::Zero(r.cols(), q2);
  VectorXd running_sum;
  VectorXd running_mean;
  int averaged = 0;

  const int total = cfg.burn_in + cfg.post_iter;
  for (int it = 1; it <= total; ++it) {
    // M-step a
    MixingProportions mix = mstep_mixing(z1, z2);
    params.alpha = std::move(mix.alpha);
    params.beta = std::move(mix.beta);
    // M-step b
    EffortEstimate effort = fit_sampling_effort(r, m_tilde, cfg.fp_tol, cfg.fp_max_iter);
    fit.effort_converged = fit.effort_converged && effort.converged;
    params.lambda = std::move(effort.lambda);
    params.mu = std::move(effort.mu);
    params.g = effort.g;
    // S-step a
    m_tilde = sstep_impute_support(r, z1, z2, params, rng);
    // M-step c
    PiUpdate pi = mstep_pi(m_tilde, z1, z2, params.pi);
    params.pi = std::move(pi.pi);
    fit.empty_block = fit.empty_block || pi.empty_block;

    if (cfg.keep_trace) fit.trace.push_back({params, complete_loglik(r, z1, z2, params)});
    if (observer) observer->on_iteration(it, m_tilde, z1, z2, params);

    bool stop = false;
    if (it > cfg.burn_in) {
      const VectorXd snapshot = flatten(params);
      if (averaged == 0) running_sum = VectorXd::Zero(snapshot.size());
      running_sum += snapshot;
      ++averaged;
      VectorXd mean = running_sum / averaged;
      if (averaged >= 2 && (mean - running_mean).norm() < cfg.eps) stop = true;
      running_mean = std::move(mean);
    }

    // S-step b: rows given columns, then columns given the new rows.
    Clustering next1 = sstep_sample_row_labels(r, params, z2, rng);
    Clustering next2 = sstep_sample_col_labels(r, params, next1, rng);

    const std::vector<int> perm1 = align_labels(z1, next1);
    const std::vector<int> perm2 = align_labels(z2, next2);
    if (!is_identity(perm1) || !is_identity(perm2)) {
      next1 = relabel(next1, perm1);
      next2 = relabel(next2, perm2);
      MatrixXd pi_aligned(q1, q2);
      for (int k = 0; k < q1; ++k) {
        for (int l = 0; l < q2; ++l) {
          pi_aligned(perm1[static_cast<std::size_t>(k)], perm2[static_cast<std::size_t>(l)]) = params.pi(k, l);
        }
      }
      params.pi = std::move(pi_aligned);
    }
    z1 = std::move(next1);
    z2 = std::move(next2);

    if (it > cfg.burn_in) {
      for (Index i = 0; i < z1.size(); ++i) row_votes(i, z1[i]) += 1.0;
      for (Index j = 0; j < z2.size(); ++j) col_votes(j, z2[j]) += 1.0;
    }
    if (stop) break;
  }

  fit.params = unflatten(running_mean, q1, q2, r.rows(), r.cols());
  fit.row_clustering = majority(row_votes);
  fit.col_clustering = majority(col_votes);
  for (Index n : fit.row_clustering.block_sizes()) fit.empty_block = fit.empty_block || n == 0;
  for (Index n : fit.col_clustering.block_sizes()) fit.empty_block = fit.empty_block || n == 0;
  fit.m_tilde = std::move(m_tilde);
  out.loglik = complete_loglik(r, fit.row_clustering, fit.col_clustering, fit.params);
  return out;
}

}  // namespace

FitResult run_sem(const CountMatrix& r, int q1, int q2, const SemConfig& config,
                  const std::optional<ClusteringPair>& init, SemObserver* observer) {
  validate(config);
  for (Index i = 0; i < r.rows(); ++i) {
    if ((r.counts().row(i).array() == 0).all()) throw Error(fmt::format("row {} has no observation", i + 1));
  }
  for (Index j = 0; j < r.cols(); ++j) {
    if ((r.counts().col(j).array() == 0).all()) throw Error(fmt::format("column {} has no observation", j + 1));
  }
  if (init && (init->first.n_blocks() != q1 || init->second.n_blocks() != q2)) {
    throw Error("initial clustering does not match the requested block counts");
  }

  ChainResult best;
  for (int restart = 0; restart < config.restarts; ++restart) {
    // Hierarchical initialization is deterministic; later restarts fall back
    // to seeded k-means so that they start from different partitions.
    const InitMethod method =
        restart > 0 && config.init == InitMethod::hierarchical ? InitMethod::kmeans : config.init;
    const ClusteringPair start =
        init ? *init : init_clustering(r, q1, q2, method, config.seed + static_cast<std::uint64_t>(restart));
    ChainResult chain = run_chain(r, q1, q2, config, start, static_cast<std::uint64_t>(restart), observer);
    if (restart == 0 || chain.loglik > best.loglik) best = std::move(chain);
  }

  FitResult fit = std::move(best.fit);
  fit.icl = coop_icl(fit, r);
  fit.missing_prob = coop_missing_prob(fit, r);
  return fit;
}

MatrixXd coop_missing_prob(const FitResult& result, const CountMatrix& r) {
  const auto& p = result.params;
  MatrixXd out(r.rows(), r.cols());
  for (Index j = 0; j < r.cols(); ++j) {
    for (Index i = 0; i < r.rows(); ++i) {
      out(i, j) = r(i, j) > 0
                      ? 1.0
                      : imputation_probability(p.pi(result.row_clustering[i], result.col_clustering[j]),
                                               p.rate(i, j));
    }
  }
  return out;
}

MatrixXd observed_missing_prob(const FitResult& result) {
  const auto& p = result.params;
  MatrixXd out(p.lambda.size(), p.mu.size());
  for (Index j = 0; j < out.cols(); ++j) {
    for (Index i = 0; i < out.rows(); ++i) {
      out(i, j) = p.pi(result.row_clustering[i], result.col_clustering[j]) * -std::expm1(-p.rate(i, j));
    }
  }
  return out;
}

}  // namespace coop
