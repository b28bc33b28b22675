#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "hif/preprocess.hpp"

namespace hif {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// Successive shortest augmenting paths (Dijkstra with duals) on the costs
// c_ij = log(max_k |a_kj|) - log|a_ij|.
Matching max_product_matching(Index n, std::span<const Index> col_offsets,
                              std::span<const Index> row_indices,
                              std::span<const double> magnitudes) {
  if (Index(col_offsets.size()) != n + 1)
    throw std::invalid_argument("matching: offsets length mismatch");
  const Index nnz = col_offsets[n];
  std::vector<double> cost(nnz, kInf), colmax(n, 0.0);
  for (Index j = 0; j < n; ++j)
    for (Index p = col_offsets[j]; p < col_offsets[j + 1]; ++p)
      colmax[j] = std::max(colmax[j], magnitudes[p]);
  for (Index j = 0; j < n; ++j)
    for (Index p = col_offsets[j]; p < col_offsets[j + 1]; ++p)
      if (magnitudes[p] > 0.0 && std::isfinite(magnitudes[p]))
        cost[p] = std::log(colmax[j]) - std::log(magnitudes[p]);

  std::vector<double> u(n, kInf), v(n, 0.0);
  for (Index j = 0; j < n; ++j)
    for (Index p = col_offsets[j]; p < col_offsets[j + 1]; ++p)
      u[row_indices[p]] = std::min(u[row_indices[p]], cost[p]);
  for (auto& x : u)
    if (!std::isfinite(x)) x = 0.0;

  std::vector<Index> row_match(n, -1), col_match(n, -1);
  Index matched = 0;
  // cheap start: tight edges only
  for (Index j = 0; j < n; ++j)
    for (Index p = col_offsets[j]; p < col_offsets[j + 1]; ++p) {
      const Index i = row_indices[p];
      if (std::isfinite(cost[p]) && row_match[i] == -1 && cost[p] - u[i] - v[j] <= 0.0) {
        row_match[i] = j;
        col_match[j] = i;
        ++matched;
        break;
      }
    }

  std::vector<double> dist(n, kInf), dcol(n, kInf);
  std::vector<Index> pred(n, -1);
  std::vector<char> done(n, 0);
  std::vector<Index> touched_rows, scanned_cols;
  using Item = std::pair<double, Index>;
  for (Index j0 = 0; j0 < n; ++j0) {
    if (col_match[j0] != -1) continue;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    touched_rows.clear();
    scanned_cols.clear();
    auto relax = [&](Index j, double dj) {
      dcol[j] = dj;
      scanned_cols.push_back(j);
      for (Index p = col_offsets[j]; p < col_offsets[j + 1]; ++p) {
        if (!std::isfinite(cost[p])) continue;
        const Index i = row_indices[p];
        if (done[i]) continue;
        const double nd = dj + std::max(0.0, cost[p] - u[i] - v[j]);
        if (nd < dist[i]) {
          if (dist[i] == kInf) touched_rows.push_back(i);
          dist[i] = nd;
          pred[i] = j;
          heap.emplace(nd, i);
        }
      }
    };
    relax(j0, 0.0);
    Index end = -1;
    double best = kInf;
    std::vector<Index> popped;
    while (!heap.empty()) {
      auto [d, i] = heap.top();
      heap.pop();
      if (done[i] || d > dist[i]) continue;
      done[i] = 1;
      popped.push_back(i);
      if (row_match[i] == -1) {
        end = i;
        best = d;
        break;
      }
      relax(row_match[i], d);
    }
    if (end != -1) {
      for (Index i : popped) u[i] -= best - dist[i];
      for (Index j : scanned_cols) v[j] += best - dcol[j];
      Index i = end;
      while (true) {
        const Index j = pred[i];
        const Index prev = col_match[j];
        col_match[j] = i;
        row_match[i] = j;
        if (j == j0) break;
        i = prev;
      }
      ++matched;
    }
    for (Index i : touched_rows) {
      dist[i] = kInf;
      done[i] = 0;
      pred[i] = -1;
    }
    for (Index j : scanned_cols) dcol[j] = kInf;
  }

  Matching out;
  out.matched = matched;
  out.row_of_col = col_match;
  out.row_scale.assign(n, 1.0);
  out.col_scale.assign(n, 1.0);
  for (Index j = 0; j < n; ++j) {
    if (col_match[j] == -1) continue;
    const Index i = col_match[j];
    out.row_scale[i] = std::exp(u[i]);
    out.col_scale[j] = std::exp(v[j]) / colmax[j];
  }
  // complete the permutation with unmatched rows in index order
  Index next_row = 0;
  for (Index j = 0; j < n; ++j) {
    if (out.row_of_col[j] != -1) continue;
    while (row_match[next_row] != -1) ++next_row;
    out.row_of_col[j] = next_row;
    row_match[next_row] = j;
  }
  return out;
}

void symmetrize_scaling(std::vector<double>& w, std::vector<double>& v, bool symmetric_mode,
                        double beta) {
  if (w.size() != v.size()) throw std::invalid_argument("scale vectors differ in length");
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double hi = std::max(w[i], v[i]), lo = std::min(w[i], v[i]);
    if (symmetric_mode || hi > beta * lo) w[i] = v[i] = std::sqrt(w[i] * v[i]);
  }
}

}  // namespace hif
