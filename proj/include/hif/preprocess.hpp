#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hif/compressed_matrix.hpp"
#include "hif/params.hpp"

namespace hif {

struct Matching {
  // row_of_col[j] is the row placed at position j; unmatched columns are
  // paired with unmatched rows in index order
  std::vector<Index> row_of_col;
  std::vector<double> row_scale;
  std::vector<double> col_scale;
  Index matched = 0;

  bool structurally_singular() const { return matched < Index(row_of_col.size()); }
};

// Maximum-product transversal on a square CSC pattern with positive
// magnitudes (zero magnitudes are ignored). Scales satisfy
// |w_i a_ij v_j| <= 1 with equality on matched entries.
Matching max_product_matching(Index n, std::span<const Index> col_offsets,
                              std::span<const Index> row_indices,
                              std::span<const double> magnitudes);

template <class T>
Matching equilibrate(const CompressedMatrix<T>& a) {
  if (a.nrows() != a.ncols()) throw std::invalid_argument("equilibrate: matrix must be square");
  const auto csc = a.convert(Orientation::col_major);
  std::vector<double> mag(csc.nnz());
  for (Index p = 0; p < csc.nnz(); ++p) mag[p] = double(abs(csc.values()[p]));
  return max_product_matching(a.nrows(), csc.offsets(), csc.indices(), mag);
}

// In symmetric mode both scales become sqrt(w_i v_i). Otherwise only
// indices with max(w_i,v_i)/min(w_i,v_i) > beta are merged that way.
void symmetrize_scaling(std::vector<double>& w, std::vector<double>& v, bool symmetric_mode,
                        double beta);

// Reverse Cuthill-McKee on a symmetric adjacency structure without self
// loops. Returns new-to-old order.
std::vector<Index> rcm_order(Index n, std::span<const Index> offsets,
                             std::span<const Index> adjacency);

struct Preprocessed {
  std::vector<double> row_scale;  // W, by original row
  std::vector<double> col_scale;  // V, by original column
  std::vector<Index> row_perm;    // position -> original row
  std::vector<Index> col_perm;    // position -> original column
  Index n1 = 0;                   // leading block after static deferral
  Index static_deferred = 0;
  Index unmatched = 0;
  bool symmetric_mode = false;
};

// Moves positions whose scaled diagonal |w a v| is below tol to the end
// (stable, same move for rows and columns). Returns the new leading size.
template <class T>
Index static_defer(const CompressedMatrix<T>& a_csr, std::span<const double> w,
                   std::span<const double> v, std::vector<Index>& p, std::vector<Index>& q,
                   double tol) {
  const Index n = Index(p.size());
  std::vector<Index> keep, moved;
  keep.reserve(n);
  for (Index i = 0; i < n; ++i) {
    const double d = w[p[i]] * double(abs(a_csr.coeff(p[i], q[i]))) * v[q[i]];
    (d < tol || d == 0.0 ? moved : keep).push_back(i);
  }
  const Index n1 = Index(keep.size());
  keep.insert(keep.end(), moved.begin(), moved.end());
  std::vector<Index> np(n), nq(n);
  for (Index i = 0; i < n; ++i) {
    np[i] = p[keep[i]];
    nq[i] = q[keep[i]];
  }
  p = std::move(np);
  q = std::move(nq);
  return n1;
}

// Symmetric reordering of the leading n1 positions using the pattern of
// B + B^T, with B the leading block of the permuted matrix.
template <class T>
void reorder_leading(const CompressedMatrix<T>& a_csr, std::vector<Index>& p,
                     std::vector<Index>& q, Index n1, Ordering ordering) {
  if (ordering == Ordering::natural || n1 <= 1) return;
  const Index n = Index(p.size());
  std::vector<Index> qpos(n);
  for (Index i = 0; i < n; ++i) qpos[q[i]] = i;
  std::vector<std::vector<Index>> adj(n1);
  for (Index i = 0; i < n1; ++i)
    for (Index c : a_csr.slice_indices(p[i])) {
      const Index j = qpos[c];
      if (j < n1 && j != i) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  std::vector<Index> off{0}, ind;
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    ind.insert(ind.end(), row.begin(), row.end());
    off.push_back(Index(ind.size()));
  }
  const auto perm = rcm_order(n1, off, ind);
  std::vector<Index> np(p), nq(q);
  for (Index i = 0; i < n1; ++i) {
    np[i] = p[perm[i]];
    nq[i] = q[perm[i]];
  }
  p = std::move(np);
  q = std::move(nq);
}

// matching/equilibration, scale symmetrization, static deferral, reordering
template <class T>
Preprocessed preprocess(const CompressedMatrix<T>& a, const Params& params) {
  if (a.nrows() != a.ncols()) throw std::invalid_argument("preprocess: matrix must be square");
  const auto csr = a.convert(Orientation::row_major);
  const Index n = a.nrows();
  Preprocessed out;
  out.symmetric_mode = pattern_symmetry_ratio(csr) >= params.symmetry_threshold;
  auto m = equilibrate(csr);
  out.unmatched = n - m.matched;
  out.row_scale = std::move(m.row_scale);
  out.col_scale = std::move(m.col_scale);
  symmetrize_scaling(out.row_scale, out.col_scale, out.symmetric_mode, params.beta);
  out.col_perm.resize(n);
  for (Index i = 0; i < n; ++i) out.col_perm[i] = i;
  out.row_perm = out.symmetric_mode ? out.col_perm : m.row_of_col;

  double amax = 0.0;
  for (Index i = 0; i < n; ++i) {
    auto idx = csr.slice_indices(i);
    auto val = csr.slice_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k)
      amax = std::max(amax, out.row_scale[i] * double(abs(val[k])) * out.col_scale[idx[k]]);
  }
  out.n1 = static_defer(csr, out.row_scale, out.col_scale, out.row_perm, out.col_perm,
                        params.tol_diag_rel * amax);
  out.static_deferred = n - out.n1;
  reorder_leading(csr, out.row_perm, out.col_perm, out.n1, params.ordering);
  return out;
}

}  // namespace hif
