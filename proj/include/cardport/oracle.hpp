// Ground truth by exhaustive subset enumeration, plus the randomized
// search-until-match benchmark used for the timing comparison.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "cardport/solver.hpp"

namespace cardport {

/// C(n,k) saturated at max(uint64).
inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (result > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    result = result * num / static_cast<std::uint64_t>(i);
  }
  return result;
}

/// Advance a size-k combination in colexicographic order. Returns false after
/// the last one. Start from {0,1,...,k-1}.
inline bool next_combination_colex(std::vector<int>& comb, int n) {
  const int k = static_cast<int>(comb.size());
  for (int i = 0; i < k; ++i) {
    const int limit = (i + 1 < k) ? comb[static_cast<std::size_t>(i) + 1] : n;
    if (comb[static_cast<std::size_t>(i)] + 1 < limit) {
      ++comb[static_cast<std::size_t>(i)];
      for (int j = 0; j < i; ++j) comb[static_cast<std::size_t>(j)] = j;
      return true;
    }
  }
  return false;
}

struct OracleResult {
  std::vector<int> best_support;
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_w;
  std::vector<double> all_values;  // per-subset optima in colex rank order (when retained)
  std::uint64_t subsets_evaluated = 0;
};

/// Global solution of the no-grouping problem by solving the restricted
/// convex problem on every size-k subset (colex order). Refuses when C(n,k)
/// exceeds the cap, reporting the count it would have needed.
inline OracleResult exhaustive_search(const ProblemSpec& prob, int k, bool keep_values = false,
                                      std::uint64_t cap = 2'000'000) {
  const int n = prob.n_assets();
  if (k < 1 || k > n) throw std::invalid_argument("exhaustive_search: k out of range");
  const std::uint64_t total = binomial(n, k);
  if (total > cap)
    throw std::runtime_error("exhaustive_search: " + std::to_string(total) + " subsets exceed the cap of " +
                             std::to_string(cap));

  OracleResult result;
  if (keep_values) result.all_values.reserve(total);
  std::vector<int> comb(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
  do {
    const RestrictedSolution sol = restricted_solve(prob, comb);
    ++result.subsets_evaluated;
    if (keep_values) result.all_values.push_back(sol.value);
    if (sol.value < result.best_value) {
      result.best_value = sol.value;
      result.best_support = comb;
      result.best_w = sol.w;
    }
  } while (next_combination_colex(comb, n));
  return result;
}

struct SearchUntilResult {
  double elapsed_seconds = 0.0;
  bool matched = false;
  std::uint64_t draws = 0;
};

/// Draw random size-k subsets (without repeating a draw), solve each restricted
/// problem, stop once a value <= target + 1e-9 is found or the time cap runs out.
inline SearchUntilResult randomized_search_until(const ProblemSpec& prob, int k, double target_value,
                                                 double time_cap_seconds, std::uint64_t seed) {
  const int n = prob.n_assets();
  if (k < 1 || k > n) throw std::invalid_argument("randomized_search_until: k out of range");
  if (std::isnan(target_value) || target_value == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("randomized_search_until: target must not be NaN or -inf");
  std::mt19937_64 rng(seed);
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  const std::uint64_t total = binomial(n, k);

  // dedup key: subsets packed 8 bits per index (n <= 255, k <= 8) or a cheap mix otherwise
  const auto key_of = [&](const std::vector<int>& comb) {
    std::uint64_t key = 1469598103934665603ull;
    for (const int i : comb) {
      key ^= static_cast<std::uint64_t>(i) + 1;
      key *= 1099511628211ull;
    }
    return key;
  };
  std::unordered_set<std::uint64_t> seen;

  SearchUntilResult out;
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  std::vector<int> comb(static_cast<std::size_t>(k));
  while (elapsed() < time_cap_seconds && out.draws < total) {
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
      comb[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
    std::sort(comb.begin(), comb.end());
    if (!seen.insert(key_of(comb)).second) continue;  // already tried this subset
    ++out.draws;
    const RestrictedSolution sol = restricted_solve(prob, comb);
    if (sol.value <= target_value + 1e-9) {
      out.matched = true;
      break;
    }
  }
  out.elapsed_seconds = elapsed();
  return out;
}

}  // namespace cardport
