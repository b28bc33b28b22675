#pragma once

// Shadow-model fuzzer for the augmented factor storage, shared by the unit
// tests and the acceptance driver.

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "hif/augmented_factor.hpp"

namespace structure_fuzz {

using namespace hif;

// Shadow model: entries keyed by (row label, column), plus the logical order
// of row labels. Rows are relabelled by defer/interchange only through order.
struct Shadow {
  Index n;
  Index steps = 0;
  std::vector<Index> order;  // logical position -> label
  std::map<std::pair<Index, Index>, double> e;

  explicit Shadow(Index n_) : n(n_), order(n_) {
    for (Index i = 0; i < n; ++i) order[i] = i;
  }
  Index pos(Index label) const {
    return Index(std::find(order.begin(), order.end(), label) - order.begin());
  }
  std::vector<double> dense() const {
    std::vector<double> d(std::size_t(n) * steps, 0.0);
    for (const auto& [key, v] : e) d[std::size_t(pos(key.first)) * steps + key.second] = v;
    return d;
  }
  std::vector<std::pair<Index, double>> row(Index i) const {
    std::vector<std::pair<Index, double>> r;
    for (const auto& [key, v] : e)
      if (key.first == order[i]) r.emplace_back(key.second, v);
    return r;
  }
  std::vector<std::pair<Index, double>> trailing(Index j) const {
    std::vector<std::pair<Index, double>> r;
    for (const auto& [key, v] : e)
      if (key.second == j && pos(key.first) >= steps) r.emplace_back(pos(key.first), v);
    std::sort(r.begin(), r.end());
    return r;
  }
  // storage order inside a column is not modelled, so tail bounds use the
  // column length
  Index col_len(Index j) const {
    Index c = 0;
    for (const auto& [key, v] : e) c += key.second == j;
    return c;
  }
};

template <class V>
V sorted(V v) {
  std::sort(v.begin(), v.end());
  return v;
}

struct FuzzReport {
  long sequences = 0;
  long operations = 0;
  long mismatches = 0;         // structure disagreed with the shadow model
  long cost_violations = 0;    // touch counter above its bound
  long check_failures = 0;     // internal consistency audit threw
  double worst_interchange_ratio = 0;  // touches / (row nnz of both rows + 1)
  bool ok() const { return mismatches == 0 && cost_violations == 0 && check_failures == 0; }
};

// Random append/defer/interchange sequences on matrices with n <= 30,
// compared after every operation against the shadow model.
inline FuzzReport fuzz_structure(AugMode mode, std::uint64_t seed, int sequences) {
  FuzzReport rep;
  std::mt19937_64 rng(seed);
  for (int sq = 0; sq < sequences; ++sq) {
    ++rep.sequences;
    const Index n = std::uniform_int_distribution<Index>(1, 30)(rng);
    AugmentedFactor<double> f(n, mode);
    Shadow sh(n);
    Index gap = 0;
    int ops = 0;
    bool broken = false;
    while (!broken && sh.steps < n - gap && ops < 4 * n) {
      ++ops;
      ++rep.operations;
      const int kind = std::uniform_int_distribution<int>(0, 9)(rng);
      const Index k = sh.steps;
      if (kind < 2 && mode != AugMode::partial) {
        std::size_t bound = 3;
        for (const auto& [j, v] : sh.row(k)) bound += 2 + std::size_t(sh.col_len(j));
        f.reset_touches();
        f.defer(k);
        rep.cost_violations += f.touches() > bound;
        const Index lab = sh.order[k];
        sh.order.erase(sh.order.begin() + k);
        sh.order.push_back(lab);
        ++gap;
      } else if (kind < 4 && mode == AugMode::full && n - gap - k > 1) {
        const Index i = std::uniform_int_distribution<Index>(k, n - 1)(rng);
        const Index r = std::uniform_int_distribution<Index>(k, n - 1)(rng);
        const std::size_t slice = sh.row(i).size() + sh.row(r).size();
        f.reset_touches();
        f.interchange(i, r);
        rep.cost_violations += f.touches() > slice + 6;
        rep.worst_interchange_ratio =
            std::max(rep.worst_interchange_ratio, double(f.touches()) / double(slice + 1));
        std::swap(sh.order[i], sh.order[r]);
      } else {
        std::vector<Index> rows;
        std::vector<double> vals;
        for (Index r = k + 1; r < n; ++r)
          if (std::bernoulli_distribution(0.3)(rng)) {
            rows.push_back(r);
            vals.push_back(std::uniform_real_distribution<double>(-1, 1)(rng));
          }
        // appending finalizes the current row; the cursor advance costs one
        // touch per listed column
        const std::size_t bound = rows.size() + 1 + sh.row(k).size();
        f.reset_touches();
        f.append(rows, vals);
        rep.cost_violations += f.touches() > bound;
        for (std::size_t t = 0; t < rows.size(); ++t) sh.e[{sh.order[rows[t]], k}] = vals[t];
        ++sh.steps;
      }
      try {
        f.check();
      } catch (const std::exception&) {
        ++rep.check_failures;
        broken = true;
        break;
      }
      if (f.steps() != sh.steps || f.gap() != gap || f.dense() != sh.dense()) broken = true;
      if (!broken && sh.steps < n) {
        std::vector<std::pair<Index, double>> got;
        f.for_each_secondary(sh.steps, [&](Index j, double v) { got.emplace_back(j, v); });
        broken = sorted(got) != sorted(sh.row(sh.steps));
        if (!broken && mode == AugMode::full) {
          const Index i = std::uniform_int_distribution<Index>(sh.steps, n - 1)(rng);
          got.clear();
          f.for_each_secondary(i, [&](Index j, double v) { got.emplace_back(j, v); });
          broken = sorted(got) != sorted(sh.row(i));
        }
      }
      for (Index j = 0; !broken && j < sh.steps; ++j) {
        std::vector<std::pair<Index, double>> got;
        f.for_each_trailing(j, [&](Index r, double v) { got.emplace_back(r, v); });
        broken = sorted(got) != sh.trailing(j);
      }
    }
    if (!broken) {
      // finalize splits at steps() with sorted slices
      auto [lead, trail] = f.finalize(sh.steps);
      try {
        lead.audit();
        trail.audit();
      } catch (const std::exception&) {
        ++rep.check_failures;
      }
      const auto d = sh.dense();
      for (Index j = 0; j < sh.steps && !broken; ++j)
        for (Index i = 0; i < n; ++i) {
          const double ref = d[std::size_t(i) * sh.steps + j];
          const double got = i < sh.steps ? lead.coeff(i, j) : trail.coeff(i - sh.steps, j);
          if (got != ref) {
            broken = true;
            break;
          }
        }
    }
    rep.mismatches += broken;
  }
  return rep;
}

}  // namespace structure_fuzz
