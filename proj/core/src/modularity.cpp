#include "coop/metrics.hpp"

#include <algorithm>
#include <limits>
#include <tuple>
#include <numeric>

#include <fmt/format.h>

namespace coop {

namespace {

constexpr double kGainTol = 1e-12;

// Label propagation on the bipartite graph with an exact modularity gain per
// move: stage 1 moves single nodes, stage 2 merges whole modules.
class Propagation {
 public:
  explicit Propagation(const BinaryMatrix& v) : n1_(v.rows()), n2_(v.cols()) {
    row_adj_.resize(static_cast<std::size_t>(n1_));
    col_adj_.resize(static_cast<std::size_t>(n2_));
    k_.assign(static_cast<std::size_t>(n1_), 0.0);
    d_.assign(static_cast<std::size_t>(n2_), 0.0);
    for (Index j = 0; j < n2_; ++j) {
      for (Index i = 0; i < n1_; ++i) {
        if (!v(i, j)) continue;
        row_adj_[static_cast<std::size_t>(i)].push_back(j);
        col_adj_[static_cast<std::size_t>(j)].push_back(i);
        k_[static_cast<std::size_t>(i)] += 1.0;
        d_[static_cast<std::size_t>(j)] += 1.0;
        m_ += 1.0;
      }
    }
  }

  // `modules` = 0 starts from singletons, otherwise from a random assignment
  // to that many modules.
  ModularityResult run(Rng& rng, int modules) {
    const auto labels = static_cast<std::size_t>(n1_ + n2_);
    row_lab_.resize(static_cast<std::size_t>(n1_));
    col_lab_.resize(static_cast<std::size_t>(n2_));
    std::vector<int> perm(labels);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    if (modules > 0) {
      const std::vector<int> pool(perm.begin(), perm.begin() + modules);
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (auto& l : perm) l = pool[pick(rng)];
    }
    for (Index i = 0; i < n1_; ++i) row_lab_[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(i)];
    for (Index j = 0; j < n2_; ++j) col_lab_[static_cast<std::size_t>(j)] = perm[static_cast<std::size_t>(n1_ + j)];
    row_mass_.assign(labels, 0.0);
    col_mass_.assign(labels, 0.0);
    members_.assign(labels, 0);
    for (Index i = 0; i < n1_; ++i) {
      const auto l = static_cast<std::size_t>(row_lab_[static_cast<std::size_t>(i)]);
      row_mass_[l] += k_[static_cast<std::size_t>(i)];
      ++members_[l];
    }
    for (Index j = 0; j < n2_; ++j) {
      const auto l = static_cast<std::size_t>(col_lab_[static_cast<std::size_t>(j)]);
      col_mass_[l] += d_[static_cast<std::size_t>(j)];
      ++members_[l];
    }

    do {
      do {
        local_moves(rng);
      } while (merge_best_pair());
    } while (refine());

    ModularityResult out;
    out.row_modules = row_lab_;
    out.col_modules = col_lab_;
    return out;
  }

 private:
  // Moves one side's nodes to their best label until no move improves Q.
  bool move_side(bool rows, Rng& rng) {
    const Index n = rows ? n1_ : n2_;
    auto& own = rows ? row_lab_ : col_lab_;
    const auto& other = rows ? col_lab_ : row_lab_;
    auto& own_mass = rows ? row_mass_ : col_mass_;
    const auto& other_mass = rows ? col_mass_ : row_mass_;
    const auto& adj = rows ? row_adj_ : col_adj_;
    const auto& deg = rows ? k_ : d_;

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> links(own_mass.size(), 0.0);
    bool moved = false;
    for (Index node : order) {
      const auto u = static_cast<std::size_t>(node);
      if (deg[u] == 0.0) continue;
      std::vector<int> candidates;
      for (Index nb : adj[u]) {
        const int lab = other[static_cast<std::size_t>(nb)];
        if (links[static_cast<std::size_t>(lab)] == 0.0) candidates.push_back(lab);
        links[static_cast<std::size_t>(lab)] += 1.0;
      }
      const int current = own[u];
      auto score = [&](int lab) {
        return links[static_cast<std::size_t>(lab)] - deg[u] * other_mass[static_cast<std::size_t>(lab)] / m_;
      };
      int best = current;
      double best_score = score(current);
      // A module of its own scores 0.
      if (members_[static_cast<std::size_t>(current)] > 1 && best_score < -kGainTol) {
        const auto free = std::find(members_.begin(), members_.end(), 0);
        best = static_cast<int>(free - members_.begin());
        best_score = 0.0;
      }
      for (int lab : candidates) {
        const double s = score(lab);
        if (s > best_score + kGainTol) {
          best = lab;
          best_score = s;
        }
      }
      for (int lab : candidates) links[static_cast<std::size_t>(lab)] = 0.0;
      if (best != current) {
        own_mass[static_cast<std::size_t>(current)] -= deg[u];
        own_mass[static_cast<std::size_t>(best)] += deg[u];
        --members_[static_cast<std::size_t>(current)];
        ++members_[static_cast<std::size_t>(best)];
        own[u] = best;
        moved = true;
      }
    }
    return moved;
  }

  void local_moves(Rng& rng) {
    for (int sweep = 0; sweep < 1000; ++sweep) {
      const bool a = move_side(false, rng);
      const bool b = move_side(true, rng);
      if (!a && !b) break;
    }
  }

  // Best relabeling of one node: (gain, target). Targets are the labels of its
  // neighbours plus an unused label; the current label is excluded.
  std::pair<double, int> best_move(bool rows, std::size_t u, std::vector<double>& links) const {
    const auto& own = rows ? row_lab_ : col_lab_;
    const auto& other = rows ? col_lab_ : row_lab_;
    const auto& other_mass = rows ? col_mass_ : row_mass_;
    const auto& adj = rows ? row_adj_ : col_adj_;
    const double deg = rows ? k_[u] : d_[u];
    std::vector<int> candidates;
    for (Index nb : adj[u]) {
      const int lab = other[static_cast<std::size_t>(nb)];
      if (links[static_cast<std::size_t>(lab)] == 0.0) candidates.push_back(lab);
      links[static_cast<std::size_t>(lab)] += 1.0;
    }
    const int current = own[u];
    auto score = [&](int lab) {
      return links[static_cast<std::size_t>(lab)] - deg * other_mass[static_cast<std::size_t>(lab)] / m_;
    };
    const double here = score(current);
    std::pair<double, int> best{-std::numeric_limits<double>::infinity(), -1};
    if (members_[static_cast<std::size_t>(current)] > 1) {
      const auto free = std::find(members_.begin(), members_.end(), 0);
      best = {-here, static_cast<int>(free - members_.begin())};
    }
    for (int lab : candidates) {
      if (lab != current && score(lab) - here > best.first) best = {score(lab) - here, lab};
    }
    for (int lab : candidates) links[static_cast<std::size_t>(lab)] = 0.0;
    return best;
  }

  void relabel_node(bool rows, std::size_t u, int to) {
    auto& own = rows ? row_lab_ : col_lab_;
    auto& own_mass = rows ? row_mass_ : col_mass_;
    const double deg = rows ? k_[u] : d_[u];
    own_mass[static_cast<std::size_t>(own[u])] -= deg;
    --members_[static_cast<std::size_t>(own[u])];
    own_mass[static_cast<std::size_t>(to)] += deg;
    ++members_[static_cast<std::size_t>(to)];
    own[u] = to;
  }

  // Kernighan-Lin pass: every node moves once, to its best other label even
  // when that lowers Q; the best state along the way is kept.
  bool refine() {
    const auto n = static_cast<std::size_t>(n1_ + n2_);
    const auto r1 = static_cast<std::size_t>(n1_);
    auto state = std::tie(row_lab_, col_lab_, row_mass_, col_mass_, members_);
    auto best_state = std::make_tuple(row_lab_, col_lab_, row_mass_, col_mass_, members_);
    std::vector<char> done(n, 0);
    std::vector<double> links(row_mass_.size(), 0.0);
    double total = 0.0, best_total = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
      std::pair<double, int> pick{-std::numeric_limits<double>::infinity(), -1};
      std::size_t who = n;
      for (std::size_t v = 0; v < n; ++v) {
        const bool rows = v < r1;
        const std::size_t u = rows ? v : v - r1;
        if (done[v] || (rows ? k_[u] : d_[u]) == 0.0) continue;
        const auto move = best_move(rows, u, links);
        if (move.second >= 0 && move.first > pick.first) {
          pick = move;
          who = v;
        }
      }
      if (who == n) break;
      done[who] = 1;
      const bool rows = who < r1;
      relabel_node(rows, rows ? who : who - r1, pick.second);
      total += pick.first;
      if (total > best_total + kGainTol) {
        best_total = total;
        best_state = std::make_tuple(row_lab_, col_lab_, row_mass_, col_mass_, members_);
      }
    }
    state = best_state;
    return best_total > kGainTol;
  }

  // Merges the pair of modules with the largest positive gain, if any.
  bool merge_best_pair() {
    std::vector<int> used;
    for (int l : row_lab_) used.push_back(l);
    for (int l : col_lab_) used.push_back(l);
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    const auto q = used.size();
    if (q < 2) return false;
    std::vector<std::size_t> index(row_mass_.size(), 0);
    for (std::size_t a = 0; a < q; ++a) index[static_cast<std::size_t>(used[a])] = a;

    // between(a, b): edges from rows in a to columns in b
    MatrixXd between = MatrixXd::Zero(static_cast<Index>(q), static_cast<Index>(q));
    for (Index i = 0; i < n1_; ++i) {
      const auto a = static_cast<Index>(index[static_cast<std::size_t>(row_lab_[static_cast<std::size_t>(i)])]);
      for (Index j : row_adj_[static_cast<std::size_t>(i)]) {
        between(a, static_cast<Index>(index[static_cast<std::size_t>(col_lab_[static_cast<std::size_t>(j)])])) += 1.0;
      }
    }
    double best_gain = kGainTol;
    int keep = -1, drop = -1;
    for (std::size_t a = 0; a < q; ++a) {
      for (std::size_t b = a + 1; b < q; ++b) {
        const auto la = static_cast<std::size_t>(used[a]);
        const auto lb = static_cast<std::size_t>(used[b]);
        const double gain = between(static_cast<Index>(a), static_cast<Index>(b)) +
                            between(static_cast<Index>(b), static_cast<Index>(a)) -
                            (row_mass_[la] * col_mass_[lb] + row_mass_[lb] * col_mass_[la]) / m_;
        if (gain > best_gain) {
          best_gain = gain;
          keep = used[a];
          drop = used[b];
        }
      }
    }
    if (keep < 0) return false;
    for (int& l : row_lab_) {
      if (l == drop) l = keep;
    }
    for (int& l : col_lab_) {
      if (l == drop) l = keep;
    }
    row_mass_[static_cast<std::size_t>(keep)] += row_mass_[static_cast<std::size_t>(drop)];
    col_mass_[static_cast<std::size_t>(keep)] += col_mass_[static_cast<std::size_t>(drop)];
    row_mass_[static_cast<std::size_t>(drop)] = 0.0;
    members_[static_cast<std::size_t>(keep)] += members_[static_cast<std::size_t>(drop)];
    members_[static_cast<std::size_t>(drop)] = 0;
    col_mass_[static_cast<std::size_t>(drop)] = 0.0;
    return true;
  }

  Index n1_, n2_;
  double m_ = 0.0;
  std::vector<std::vector<Index>> row_adj_, col_adj_;
  std::vector<double> k_, d_;
  std::vector<int> row_lab_, col_lab_;
  std::vector<double> row_mass_, col_mass_;
  std::vector<int> members_;  // nodes per label, both sides
};

void renumber(ModularityResult& r) {
  std::vector<int> seen;
  auto relabel = [&](int& l) {
    auto it = std::find(seen.begin(), seen.end(), l);
    if (it == seen.end()) {
      seen.push_back(l);
      it = seen.end() - 1;
    }
    l = static_cast<int>(it - seen.begin());
  };
  for (int& l : r.row_modules) relabel(l);
  for (int& l : r.col_modules) relabel(l);
}

}  // namespace

double barber_modularity(const BinaryMatrix& v, const std::vector<int>& row_modules,
                         const std::vector<int>& col_modules) {
  if (static_cast<Index>(row_modules.size()) != v.rows() || static_cast<Index>(col_modules.size()) != v.cols()) {
    throw Error("barber_modularity: assignment does not match the matrix");
  }
  const MatrixXd x = v.as_double();
  const double m = x.sum();
  if (m == 0.0) throw Error("barber_modularity: network has no edges");
  const VectorXd k = x.rowwise().sum();
  const VectorXd d = x.colwise().sum().transpose();
  double q = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      if (row_modules[static_cast<std::size_t>(i)] == col_modules[static_cast<std::size_t>(j)]) {
        q += x(i, j) - k(i) * d(j) / m;
      }
    }
  }
  return q / m;
}

ModularityResult bipartite_modularity(const BinaryMatrix& v, int restarts, std::uint64_t seed) {
  if (v.ones() == 0) throw Error("bipartite_modularity: network has no edges");
  if (restarts < 1) throw Error("bipartite_modularity: restarts must be at least 1");
  Propagation prop(v);

  ModularityResult best;
  best.row_modules.assign(static_cast<std::size_t>(v.rows()), 0);
  best.col_modules.assign(static_cast<std::size_t>(v.cols()), 0);
  best.q = barber_modularity(v, best.row_modules, best.col_modules);
  for (int t = 0; t < restarts; ++t) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
    int modules = 0;
    if (t > 0) {
      const auto most = std::max<Index>(2, std::min(v.rows(), v.cols()));
      modules = static_cast<int>(std::uniform_int_distribution<Index>(2, most)(rng));
    }
    ModularityResult run = prop.run(rng, modules);
    run.q = barber_modularity(v, run.row_modules, run.col_modules);
    if (run.q > best.q + kGainTol) best = std::move(run);
  }
  renumber(best);
  return best;
}

}  // namespace coop
