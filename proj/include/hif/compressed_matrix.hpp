#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hif/types.hpp"

namespace hif {

enum class Orientation { row_major, col_major };

template <class T>
struct Triplet {
  Index row;
  Index col;
  T value;
};

// Compressed sparse storage, either CSR (row_major) or CSC (col_major).
// Slices are the rows (CSR) or columns (CSC); indices within each slice are
// strictly increasing.
template <class T>
class CompressedMatrix {
 public:
  using value_type = T;

  CompressedMatrix() : offsets_(1, 0) {}

  CompressedMatrix(Orientation orient, Index nrows, Index ncols,
                   std::vector<Index> offsets, std::vector<Index> indices,
                   std::vector<T> values)
      : orient_(orient),
        nrows_(nrows),
        ncols_(ncols),
        offsets_(std::move(offsets)),
        indices_(std::move(indices)),
        values_(std::move(values)) {
    audit();
  }

  // empty matrix with all slices empty
  static CompressedMatrix zeros(Orientation orient, Index nrows, Index ncols) {
    CompressedMatrix m;
    m.orient_ = orient;
    m.nrows_ = nrows;
    m.ncols_ = ncols;
    if (nrows < 0 || ncols < 0)
      throw std::invalid_argument("negative matrix dimension");
    m.offsets_.assign(static_cast<std::size_t>(m.primary_dim()) + 1, 0);
    return m;
  }

  static CompressedMatrix identity(Index n, Orientation orient = Orientation::row_major) {
    std::vector<Index> off(n + 1), ind(n);
    std::iota(off.begin(), off.end(), Index(0));
    std::iota(ind.begin(), ind.end(), Index(0));
    return CompressedMatrix(orient, n, n, std::move(off), std::move(ind),
                            std::vector<T>(n, T(1)));
  }

  // Duplicates are summed; explicit zeros are kept.
  static CompressedMatrix from_triplets(Index nrows, Index ncols,
                                        std::span<const Triplet<T>> trip,
                                        Orientation orient = Orientation::row_major) {
    if (nrows < 0 || ncols < 0)
      throw std::invalid_argument("negative matrix dimension");
    const bool rows = orient == Orientation::row_major;
    const Index np = rows ? nrows : ncols;
    std::vector<Index> off(np + 1, 0);
    for (const auto& t : trip) {
      if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
        throw std::invalid_argument("triplet index out of range");
      ++off[(rows ? t.row : t.col) + 1];
    }
    for (Index i = 0; i < np; ++i) off[i + 1] += off[i];
    std::vector<Index> ind(trip.size());
    std::vector<T> val(trip.size());
    std::vector<Index> pos(off.begin(), off.end() - 1);
    for (const auto& t : trip) {
      const Index p = pos[rows ? t.row : t.col]++;
      ind[p] = rows ? t.col : t.row;
      val[p] = t.value;
    }
    // sort each slice and merge duplicates
    std::vector<Index> noff(np + 1, 0), nind;
    std::vector<T> nval;
    nind.reserve(ind.size());
    nval.reserve(val.size());
    std::vector<std::pair<Index, T>> buf;
    for (Index i = 0; i < np; ++i) {
      buf.clear();
      for (Index p = off[i]; p < off[i + 1]; ++p) buf.emplace_back(ind[p], val[p]);
      std::stable_sort(buf.begin(), buf.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t p = 0; p < buf.size(); ++p) {
        if (p > 0 && buf[p].first == buf[p - 1].first)
          nval.back() += buf[p].second;
        else {
          nind.push_back(buf[p].first);
          nval.push_back(buf[p].second);
        }
      }
      noff[i + 1] = static_cast<Index>(nind.size());
    }
    return CompressedMatrix(orient, nrows, ncols, std::move(noff), std::move(nind),
                            std::move(nval));
  }

  static CompressedMatrix from_triplets(Index nrows, Index ncols,
                                        const std::vector<Triplet<T>>& trip,
                                        Orientation orient = Orientation::row_major) {
    return from_triplets(nrows, ncols, std::span<const Triplet<T>>(trip), orient);
  }

  // dense row-major input; exact zeros are skipped
  static CompressedMatrix from_dense(Index nrows, Index ncols, std::span<const T> a,
                                     Orientation orient = Orientation::row_major) {
    std::vector<Triplet<T>> trip;
    for (Index i = 0; i < nrows; ++i)
      for (Index j = 0; j < ncols; ++j)
        if (a[std::size_t(i) * ncols + j] != T(0))
          trip.push_back({i, j, a[std::size_t(i) * ncols + j]});
    return from_triplets(nrows, ncols, std::span<const Triplet<T>>(trip), orient);
  }

  Orientation orientation() const noexcept { return orient_; }
  bool is_row_major() const noexcept { return orient_ == Orientation::row_major; }
  Index nrows() const noexcept { return nrows_; }
  Index ncols() const noexcept { return ncols_; }
  Index nnz() const noexcept { return offsets_.back(); }
  Index primary_dim() const noexcept { return is_row_major() ? nrows_ : ncols_; }
  Index secondary_dim() const noexcept { return is_row_major() ? ncols_ : nrows_; }

  std::span<const Index> offsets() const noexcept { return offsets_; }
  std::span<const Index> indices() const noexcept { return indices_; }
  std::span<const T> values() const noexcept { return values_; }
  std::span<T> values() noexcept { return values_; }

  Index slice_nnz(Index i) const { return offsets_[i + 1] - offsets_[i]; }
  std::span<const Index> slice_indices(Index i) const {
    return {indices_.data() + offsets_[i], std::size_t(slice_nnz(i))};
  }
  std::span<const T> slice_values(Index i) const {
    return {values_.data() + offsets_[i], std::size_t(slice_nnz(i))};
  }

  // entry lookup by binary search; zero when not stored
  T coeff(Index i, Index j) const {
    const Index p = is_row_major() ? i : j, s = is_row_major() ? j : i;
    auto b = indices_.begin() + offsets_[p], e = indices_.begin() + offsets_[p + 1];
    auto it = std::lower_bound(b, e, s);
    if (it != e && *it == s) return values_[it - indices_.begin()];
    return T(0);
  }

  // throws std::invalid_argument describing the first broken invariant
  void audit() const {
    if (nrows_ < 0 || ncols_ < 0) throw std::invalid_argument("negative matrix dimension");
    const Index np = primary_dim(), ns = secondary_dim();
    if (offsets_.size() != std::size_t(np) + 1)
      throw std::invalid_argument("offsets length must be primary_dim + 1");
    if (offsets_[0] != 0) throw std::invalid_argument("offsets must start at zero");
    for (Index i = 0; i < np; ++i)
      if (offsets_[i + 1] < offsets_[i])
        throw std::invalid_argument("offsets must be nondecreasing");
    if (indices_.size() != std::size_t(offsets_.back()) ||
        values_.size() != std::size_t(offsets_.back()))
      throw std::invalid_argument("indices/values length must equal nnz");
    for (Index i = 0; i < np; ++i)
      for (Index p = offsets_[i]; p < offsets_[i + 1]; ++p) {
        if (indices_[p] < 0 || indices_[p] >= ns)
          throw std::invalid_argument("index out of range");
        if (p > offsets_[i] && indices_[p] <= indices_[p - 1])
          throw std::invalid_argument("indices within a slice must be strictly increasing");
      }
  }

  bool is_valid() const noexcept {
    try {
      audit();
      return true;
    } catch (const std::invalid_argument&) {
      return false;
    }
  }

  CompressedMatrix convert(Orientation target) const {
    if (target == orient_) return *this;
    const Index np = secondary_dim();
    std::vector<Index> off(np + 1, 0);
    for (Index p = 0; p < nnz(); ++p) ++off[indices_[p] + 1];
    for (Index i = 0; i < np; ++i) off[i + 1] += off[i];
    std::vector<Index> ind(nnz());
    std::vector<T> val(nnz());
    std::vector<Index> pos(off.begin(), off.end() - 1);
    for (Index i = 0; i < primary_dim(); ++i)
      for (Index p = offsets_[i]; p < offsets_[i + 1]; ++p) {
        const Index q = pos[indices_[p]]++;
        ind[q] = i;
        val[q] = values_[p];
      }
    CompressedMatrix out;
    out.orient_ = target;
    out.nrows_ = nrows_;
    out.ncols_ = ncols_;
    out.offsets_ = std::move(off);
    out.indices_ = std::move(ind);
    out.values_ = std::move(val);
    return out;
  }

  // conjugate transpose, keeping the orientation
  CompressedMatrix adjoint() const {
    CompressedMatrix t;
    t.orient_ = orient_ == Orientation::row_major ? Orientation::col_major : Orientation::row_major;
    t.nrows_ = ncols_;
    t.ncols_ = nrows_;
    t.offsets_ = offsets_;
    t.indices_ = indices_;
    t.values_.resize(values_.size());
    for (std::size_t p = 0; p < values_.size(); ++p) t.values_[p] = hif::conj(values_[p]);
    return t.convert(orient_);
  }

  template <class U>
  CompressedMatrix<U> cast() const {
    std::vector<U> val(values_.size());
    for (std::size_t p = 0; p < values_.size(); ++p) val[p] = scalar_cast<U>(values_[p]);
    return CompressedMatrix<U>(orient_, nrows_, ncols_, offsets_, indices_, std::move(val));
  }

  // y = A x, or y = A^H x when adjoint is set
  void spmv(std::span<const T> x, std::span<T> y, bool adjoint = false) const {
    const Index nin = adjoint ? nrows_ : ncols_, nout = adjoint ? ncols_ : nrows_;
    if (Index(x.size()) != nin || Index(y.size()) != nout)
      throw std::invalid_argument("spmv: dimension mismatch");
    const bool gather = is_row_major() != adjoint;
    if (gather) {
      for (Index i = 0; i < primary_dim(); ++i) {
        T s(0);
        for (Index p = offsets_[i]; p < offsets_[i + 1]; ++p)
          s += (adjoint ? hif::conj(values_[p]) : values_[p]) * x[indices_[p]];
        y[i] = s;
      }
    } else {
      std::fill(y.begin(), y.end(), T(0));
      for (Index i = 0; i < primary_dim(); ++i) {
        const T xi = x[i];
        if (xi == T(0)) continue;
        for (Index p = offsets_[i]; p < offsets_[i + 1]; ++p)
          y[indices_[p]] += (adjoint ? hif::conj(values_[p]) : values_[p]) * xi;
      }
    }
  }

  std::vector<T> multiply(std::span<const T> x, bool adjoint = false) const {
    std::vector<T> y(adjoint ? ncols_ : nrows_);
    spmv(x, y, adjoint);
    return y;
  }

  // row-major dense copy, for small matrices
  std::vector<T> dense() const {
    std::vector<T> a(std::size_t(nrows_) * ncols_, T(0));
    for (Index i = 0; i < primary_dim(); ++i)
      for (Index p = offsets_[i]; p < offsets_[i + 1]; ++p) {
        const Index r = is_row_major() ? i : indices_[p], c = is_row_major() ? indices_[p] : i;
        a[std::size_t(r) * ncols_ + c] = values_[p];
      }
    return a;
  }

  real_t<T> frobenius_norm() const {
    real_t<T> s(0);
    for (const auto& v : values_) s += abs2(v);
    return std::sqrt(s);
  }

 private:
  Orientation orient_ = Orientation::row_major;
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> offsets_;
  std::vector<Index> indices_;
  std::vector<T> values_;
};

// Fraction of stored off-diagonal entries (i,j) whose mirror (j,i) is also
// stored. Returns 1 when there are no off-diagonal entries.
template <class T>
double pattern_symmetry_ratio(const CompressedMatrix<T>& a) {
  if (a.nrows() != a.ncols()) throw std::invalid_argument("matrix must be square");
  const CompressedMatrix<T> t = a.convert(a.is_row_major() ? Orientation::col_major
                                                           : Orientation::row_major);
  std::size_t off = 0, matched = 0;
  for (Index i = 0; i < a.primary_dim(); ++i) {
    auto s = a.slice_indices(i);
    auto m = t.slice_indices(i);  // same slice index, opposite direction
    std::size_t q = 0;
    for (Index j : s) {
      if (j == i) continue;
      ++off;
      while (q < m.size() && m[q] < j) ++q;
      if (q < m.size() && m[q] == j) ++matched;
    }
  }
  return off == 0 ? 1.0 : double(matched) / double(off);
}

template <class T>
std::vector<Index> slice_counts(const CompressedMatrix<T>& a, Orientation which) {
  std::vector<Index> cnt(which == Orientation::row_major ? a.nrows() : a.ncols(), 0);
  if (a.orientation() == which) {
    for (Index i = 0; i < a.primary_dim(); ++i) cnt[i] = a.slice_nnz(i);
  } else {
    for (Index j : a.indices()) ++cnt[j];
  }
  return cnt;
}

}  // namespace hif
