// Euclidean projections onto the constraint sets used by the solvers:
//
//   simplex_c     {z >= 0, 1'z = c}
//   l0 ball       {z : at most k nonzeros}
//   box-sum       {z >= 0, p <= 1'z <= q}
//   group set V_i {z >= 0, p_i <= 1'z <= q_i, ||z||_0 <= k_i}
//   Omega         product of the V_i over a partition of the assets
//
// The group projection picks the k largest components by *signed* value and
// then projects them onto the box-sum set; that support choice is exact for
// any closed convex target inside the nonnegative orthant. The plain l0-ball
// projection (project_topk) selects by absolute value instead — both rules
// are deliberate and are covered by the test suite.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cardport {

/// Projection of x onto {z >= 0, 1'z = c} by the sort-and-threshold rule:
/// sort descending, keep the longest prefix with positive shifted values,
/// subtract the prefix threshold, clamp at zero. O(l log l).
inline Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& x, double level = 1.0) {
  if (x.size() < 1) throw std::invalid_argument("project_simplex: empty input");
  if (level < 0.0) throw std::invalid_argument("project_simplex: negative level");
  if (level == 0.0) return Eigen::VectorXd::Zero(x.size());

  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  // the admissible prefix lengths form a prefix of 1..l, so stop at the first failure
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    prefix += sorted[i];
    const double cand = (prefix - level) / static_cast<double>(i + 1);
    if (sorted[i] - cand > 0.0)
      theta = cand;
    else
      break;
  }
  return (x.array() - theta).max(0.0).matrix();
}

enum class TopkOrder { kAbsolute, kSigned };

/// Indices of the k largest entries of x (by |.| or by signed value),
/// ties broken by the lower index. Returned indices are ascending.
inline std::vector<int> topk_indices(const Eigen::Ref<const Eigen::VectorXd>& x, int k, TopkOrder order) {
  const int l = static_cast<int>(x.size());
  if (k < 1 || k > l) throw std::invalid_argument("topk_indices: k out of range");
  std::vector<int> idx(static_cast<std::size_t>(l));
  std::iota(idx.begin(), idx.end(), 0);
  const auto key = [&](int i) { return order == TopkOrder::kAbsolute ? std::abs(x[i]) : x[i]; };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    const double ka = key(a), kb = key(b);
    return ka != kb ? ka > kb : a < b;
  });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Projection onto the l0 ball: keep the k largest-|.| entries, zero the rest.
inline Eigen::VectorXd project_topk(const Eigen::Ref<const Eigen::VectorXd>& x, int k) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(x.size());
  for (const int i : topk_indices(x, k, TopkOrder::kAbsolute)) z[i] = x[i];
  return z;
}

/// Projection onto {z >= 0, p <= 1'z <= q}. Case split on the mass s of the
/// positive part of u: s < p projects onto simplex_p, s > q onto simplex_q,
/// otherwise the positive part is already optimal.
inline Eigen::VectorXd project_box_sum(const Eigen::Ref<const Eigen::VectorXd>& u, double p, double q) {
  if (!(0.0 <= p && p <= q && q <= 1.0)) throw std::invalid_argument("project_box_sum: need 0 <= p <= q <= 1");
  const double s = u.array().max(0.0).sum();
  if (s < p) return project_simplex(u, p);
  if (s > q) return project_simplex(u, q);
  return u.array().max(0.0).matrix();
}

struct GroupSpec {
  std::string name;
  std::vector<int> indices;  // strictly increasing asset indices
  double budget_min = 0.0;   // p
  double budget_max = 1.0;   // q
  int max_assets = 1;        // k

  void validate(std::vector<std::string>& problems) const {
    const std::string tag = "group '" + name + "': ";
    if (indices.empty()) problems.push_back(tag + "no assets");
    for (std::size_t i = 0; i + 1 < indices.size(); ++i)
      if (indices[i] >= indices[i + 1]) {
        problems.push_back(tag + "asset indices must be strictly increasing");
        break;
      }
    if (!(0.0 <= budget_min && budget_min <= budget_max && budget_max <= 1.0))
      problems.push_back(tag + "budget bounds must satisfy 0 <= p <= q <= 1");
    if (max_assets < 1 || max_assets > static_cast<int>(indices.size()))
      problems.push_back(tag + "cardinality bound must be in [1, group size]");
  }
};

struct GroupPartition {
  std::vector<GroupSpec> groups;
  int n_assets = 0;

  /// Throws with *all* violated invariants listed, not just the first.
  void validate() const {
    std::vector<std::string> problems;
    if (n_assets < 1) problems.push_back("partition: asset count must be positive");
    std::vector<int> cover(static_cast<std::size_t>(std::max(n_assets, 0)), 0);
    double p_sum = 0.0, q_sum = 0.0;
    for (const auto& g : groups) {
      g.validate(problems);
      p_sum += g.budget_min;
      q_sum += g.budget_max;
      for (const int i : g.indices) {
        if (i < 0 || i >= n_assets)
          problems.push_back("group '" + g.name + "': asset index " + std::to_string(i) + " out of range");
        else
          cover[static_cast<std::size_t>(i)] += 1;
      }
    }
    for (int i = 0; i < n_assets; ++i) {
      if (cover[static_cast<std::size_t>(i)] == 0)
        problems.push_back("partition: asset " + std::to_string(i) + " is not covered by any group");
      else if (cover[static_cast<std::size_t>(i)] > 1)
        problems.push_back("partition: asset " + std::to_string(i) + " appears in more than one group");
    }
    if (p_sum > 1.0 + 1e-12)
      problems.push_back("partition: sum of lower budgets exceeds 1 (" + std::to_string(p_sum) + ")");
    if (q_sum < 1.0 - 1e-12)
      problems.push_back("partition: sum of upper budgets is below 1 (" + std::to_string(q_sum) + ")");
    if (!problems.empty()) {
      std::string msg = "invalid partition:";
      for (const auto& p : problems) msg += "\n  - " + p;
      throw std::invalid_argument(msg);
    }
  }

  static GroupPartition single_group(int n, int k, double p = 0.0, double q = 1.0) {
    GroupPartition part;
    part.n_assets = n;
    GroupSpec g;
    g.name = "all";
    g.indices.resize(static_cast<std::size_t>(n));
    std::iota(g.indices.begin(), g.indices.end(), 0);
    g.budget_min = p;
    g.budget_max = q;
    g.max_assets = k;
    part.groups.push_back(std::move(g));
    return part;
  }
};

/// Projection onto one V_i: keep the k largest components by signed value,
/// project them onto the box-sum set, zero the rest.
inline Eigen::VectorXd project_group(const Eigen::Ref<const Eigen::VectorXd>& w, const GroupSpec& g) {
  if (w.size() != static_cast<Eigen::Index>(g.indices.size()))
    throw std::invalid_argument("project_group: subvector size does not match group");
  const auto keep = topk_indices(w, g.max_assets, TopkOrder::kSigned);
  Eigen::VectorXd sub(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) sub[static_cast<Eigen::Index>(i)] = w[keep[i]];
  const Eigen::VectorXd proj = project_box_sum(sub, g.budget_min, g.budget_max);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(w.size());
  for (std::size_t i = 0; i < keep.size(); ++i) z[keep[i]] = proj[static_cast<Eigen::Index>(i)];
  return z;
}

/// Projection onto Omega: the group subproblems are independent, so each
/// subvector is projected on its own and scattered back.
inline Eigen::VectorXd project_omega(const Eigen::Ref<const Eigen::VectorXd>& w, const GroupPartition& part) {
  if (w.size() != part.n_assets) throw std::invalid_argument("project_omega: vector size does not match partition");
  Eigen::VectorXd z = Eigen::VectorXd::Zero(w.size());
  for (const auto& g : part.groups) {
    Eigen::VectorXd sub(static_cast<Eigen::Index>(g.indices.size()));
    for (std::size_t i = 0; i < g.indices.size(); ++i) sub[static_cast<Eigen::Index>(i)] = w[g.indices[i]];
    const Eigen::VectorXd proj = project_group(sub, g);
    for (std::size_t i = 0; i < g.indices.size(); ++i) z[g.indices[i]] = proj[static_cast<Eigen::Index>(i)];
  }
  return z;
}

/// Projection onto {z >= 0, 1'z = level, ||z||_0 <= k}: signed top-k support,
/// then the simplex projection on that support. Exact for the same reason as
/// project_group (the simplex is a convex subset of the orthant).
inline Eigen::VectorXd project_simplex_topk(const Eigen::Ref<const Eigen::VectorXd>& x, int k, double level = 1.0) {
  const auto keep = topk_indices(x, k, TopkOrder::kSigned);
  Eigen::VectorXd sub(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) sub[static_cast<Eigen::Index>(i)] = x[keep[i]];
  const Eigen::VectorXd proj = project_simplex(sub, level);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < keep.size(); ++i) z[keep[i]] = proj[static_cast<Eigen::Index>(i)];
  return z;
}

struct FeasibilityReport {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Independent feasibility audit of a reported portfolio: simplex sum, group
/// budgets and group cardinalities. Deliberately written as plain loops with
/// no reuse of the projection code above.
inline FeasibilityReport check_feasible(const Eigen::Ref<const Eigen::VectorXd>& w, const GroupPartition& part,
                                        double tol = 1e-10) {
  FeasibilityReport rep;
  const auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.violations.push_back(std::move(msg));
  };
  if (w.size() != part.n_assets) {
    fail("weight vector size does not match partition");
    return rep;
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] < -tol) fail("weight " + std::to_string(i) + " is negative: " + std::to_string(w[i]));
    total += w[i];
  }
  if (std::abs(total - 1.0) > tol) fail("weights sum to " + std::to_string(total) + ", expected 1");
  for (const auto& g : part.groups) {
    double sum = 0.0;
    int nonzeros = 0;
    for (const int i : g.indices) {
      sum += w[i];
      if (w[i] != 0.0) ++nonzeros;
    }
    if (sum < g.budget_min - tol || sum > g.budget_max + tol)
      fail("group '" + g.name + "' budget " + std::to_string(sum) + " outside [" + std::to_string(g.budget_min) +
           ", " + std::to_string(g.budget_max) + "]");
    if (nonzeros > g.max_assets)
      fail("group '" + g.name + "' holds " + std::to_string(nonzeros) + " assets, cap " +
           std::to_string(g.max_assets));
  }
  return rep;
}

/// Dykstra projection onto simplex_1 intersected with the per-group box-sum
/// sets (no cardinality constraint). Used for support-restricted solves when
/// budget bounds are active; both component projections are exact, so the
/// alternation converges to the true projection of x onto the intersection.
inline Eigen::VectorXd project_budget_simplex(const Eigen::Ref<const Eigen::VectorXd>& x,
                                              const GroupPartition& part, int max_rounds = 2000,
                                              double tol = 1e-13) {
  Eigen::VectorXd z = x;
  Eigen::VectorXd inc_a = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd inc_b = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd za(x.size());
  for (int round = 0; round < max_rounds; ++round) {
    za = project_simplex(z + inc_a, 1.0);
    inc_a = z + inc_a - za;
    Eigen::VectorXd zb(za.size());
    const Eigen::VectorXd yb = za + inc_b;
    for (const auto& g : part.groups) {
      Eigen::VectorXd sub(static_cast<Eigen::Index>(g.indices.size()));
      for (std::size_t i = 0; i < g.indices.size(); ++i) sub[static_cast<Eigen::Index>(i)] = yb[g.indices[i]];
      const Eigen::VectorXd proj = project_box_sum(sub, g.budget_min, g.budget_max);
      for (std::size_t i = 0; i < g.indices.size(); ++i) zb[g.indices[i]] = proj[static_cast<Eigen::Index>(i)];
    }
    inc_b = yb - zb;
    if ((za - zb).lpNorm<Eigen::Infinity>() < tol) return za;
    z = zb;
  }
  return za;
}

}  // namespace cardport
