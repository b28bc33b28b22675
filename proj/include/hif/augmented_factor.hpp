#pragma once

#include <algorithm>
#include <cassert>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hif/compressed_matrix.hpp"

namespace hif {

// partial: appendable slices plus a cursor/fan-in list for the current
//          secondary slice
// partial_gap: partial plus deferral of the current secondary slice
// full: per-slot linked lists over every secondary slice, allowing deferral
//       and interchange of any two not-yet-factored secondary slices
enum class AugMode { partial, partial_gap, full };

// Growable factor storage for one triangular factor during a Crout sweep.
// Primary slices (columns of L, rows of U) are appended once per step and
// never grow afterwards. Secondary indices are logical: positions below
// steps() are finalized, position i >= steps() lives in physical slot
// i + gap(). Deferred secondary slices move to slots n, n+1, ...
template <class T>
class AugmentedFactor {
 public:
  AugmentedFactor(Index n, AugMode mode, Orientation primary = Orientation::col_major,
                  std::size_t reserve_nnz = 0)
      : n_(n), mode_(mode), primary_(primary) {
    if (n < 0) throw std::invalid_argument("negative factor dimension");
    offsets_.reserve(std::size_t(n) + 1);
    offsets_.push_back(0);
    slot_.reserve(reserve_nnz);
    val_.reserve(reserve_nnz);
    step_slot_.reserve(n);
    const std::size_t nslots = 2 * std::size_t(n) + 1;
    if (mode_ == AugMode::full) {
      row_start_.assign(nslots, -1);
      row_end_.assign(nslots, -1);
      row_count_.assign(nslots, 0);
    } else {
      head_.assign(nslots, -1);
      cursor_.reserve(n);
      link_.reserve(n);
    }
  }

  Index dim() const noexcept { return n_; }
  Index steps() const noexcept { return steps_; }
  Index gap() const noexcept { return gap_; }
  AugMode mode() const noexcept { return mode_; }
  std::size_t nnz() const noexcept { return val_.size(); }
  Index primary_nnz(Index j) const { return offsets_[j + 1] - offsets_[j]; }

  // array-touch counter for interchange/defer/append bookkeeping
  std::size_t touches() const noexcept { return touches_; }
  void reset_touches() noexcept { touches_ = 0; }

  // Appends primary slice steps() with entries at logical secondary indices
  // strictly greater than steps(), sorted ascending. Finalizes secondary
  // index steps().
  void append(std::span<const Index> rows, std::span<const T> vals) {
    if (rows.size() != vals.size()) throw std::invalid_argument("append: size mismatch");
    if (steps_ >= n_) throw std::invalid_argument("append: factor is full");
    const Index k = steps_, s = k + gap_;
    for (std::size_t p = 0; p < rows.size(); ++p) {
      if (rows[p] <= k || rows[p] >= n_)
        throw std::invalid_argument("append: secondary index out of range");
      if (p > 0 && rows[p] <= rows[p - 1])
        throw std::invalid_argument("append: secondary indices must be increasing");
    }
    if (mode_ != AugMode::full) advance_cursors(s);
    const Index start = Index(val_.size());
    for (std::size_t p = 0; p < rows.size(); ++p) {
      slot_.push_back(rows[p] + gap_);
      val_.push_back(vals[p]);
    }
    offsets_.push_back(Index(val_.size()));
    step_slot_.push_back(s);
    touches_ += rows.size() + 1;
    if (mode_ == AugMode::full) {
      for (Index p = start; p < Index(val_.size()); ++p) {
        const Index node = Index(value_pos_.size());
        value_pos_.push_back(p);
        inv_value_pos_.push_back(node);
        node_primary_.push_back(k);
        row_next_.push_back(-1);
        push_node(slot_[p], node);
      }
    } else {
      cursor_.push_back(start);
      link_.push_back(-1);
      if (!rows.empty()) push_list(slot_[start], k);
    }
    ++steps_;
  }

  // Visits (primary index j, value) for every entry in secondary slice i.
  // Partial modes only support the current slice i == steps().
  template <class F>
  void for_each_secondary(Index i, F&& f) const {
    check_open(i);
    const Index s = i + gap_;
    if (mode_ == AugMode::full) {
      for (Index node = row_start_[s]; node != -1; node = row_next_[node])
        f(node_primary_[node], val_[value_pos_[node]]);
    } else {
      if (i != steps_)
        throw std::invalid_argument("partial structures only expose the current slice");
      for (Index j = head_[s]; j != -1; j = link_[j]) f(j, val_[cursor_[j]]);
    }
  }

  // Visits (logical secondary index, value) for entries of primary slice j
  // whose secondary index is not finalized, i.e. >= steps().
  template <class F>
  void for_each_trailing(Index j, F&& f) const {
    if (j < 0 || j >= steps_) throw std::invalid_argument("primary index out of range");
    const Index cur = steps_ + gap_;
    if (mode_ == AugMode::full) {
      for (Index p = offsets_[j]; p < offsets_[j + 1]; ++p)
        if (slot_[p] >= cur) f(slot_[p] - gap_, val_[p]);
    } else {
      for (Index p = cursor_[j]; p < offsets_[j + 1]; ++p) f(slot_[p] - gap_, val_[p]);
    }
  }

  // Moves secondary slice k == steps() to the last logical position.
  void defer(Index k) {
    if (mode_ == AugMode::partial) throw std::logic_error("deferral needs a gap-capable structure");
    if (k != steps_) throw std::invalid_argument("defer: only the current slice can be deferred");
    if (k >= n_) throw std::invalid_argument("defer: no slice to defer");
    if (gap_ >= n_) throw std::logic_error("defer: slot space exhausted");
    const Index s = k + gap_, t = n_ + gap_;
    if (mode_ == AugMode::full) {
      for (Index node = row_start_[s]; node != -1; node = row_next_[node]) {
        const Index p = rotate_to_end(value_pos_[node], node_primary_[node]);
        slot_[p] = t;
        ++touches_;
      }
      row_start_[t] = row_start_[s];
      row_end_[t] = row_end_[s];
      row_count_[t] = row_count_[s];
      row_start_[s] = row_end_[s] = -1;
      row_count_[s] = 0;
      touches_ += 3;
    } else {
      Index j = head_[s];
      head_[s] = -1;
      while (j != -1) {
        const Index nxt = link_[j];
        const Index p = cursor_[j];
        const Index e = rotate_to_end(p, j);
        slot_[e] = t;
        push_list(slot_[p], j);
        touches_ += 2;
        j = nxt;
      }
    }
    ++gap_;
  }

  // Exchanges secondary slices i and r (both not yet finalized).
  void interchange(Index i, Index r) {
    if (mode_ != AugMode::full) throw std::logic_error("interchange needs the full structure");
    check_open(i);
    check_open(r);
    if (i == r) return;
    const Index a = i + gap_, b = r + gap_;
    for (Index node = row_start_[a]; node != -1; node = row_next_[node]) {
      slot_[value_pos_[node]] = b;
      ++touches_;
    }
    for (Index node = row_start_[b]; node != -1; node = row_next_[node]) {
      slot_[value_pos_[node]] = a;
      ++touches_;
    }
    std::swap(row_start_[a], row_start_[b]);
    std::swap(row_end_[a], row_end_[b]);
    std::swap(row_count_[a], row_count_[b]);
    touches_ += 6;
  }

  // Logical index of every physical slot in use (-1 for gap slots).
  std::vector<Index> slot_map() const {
    std::vector<Index> map(std::size_t(n_ + gap_), -1);
    for (Index j = 0; j < steps_; ++j) map[step_slot_[j]] = j;
    for (Index s = steps_ + gap_; s < n_ + gap_; ++s) map[s] = s - gap_;
    return map;
  }

  // Splits into the leading n1 x n1 block (strictly triangular part) and the
  // trailing block. With a column-primary factor these are n1 x n1 and
  // (n-n1) x n1 CSC matrices; with a row-primary factor n1 x n1 and
  // n1 x (n-n1) CSR matrices. Requires n1 == steps().
  std::pair<CompressedMatrix<T>, CompressedMatrix<T>> finalize(Index n1) const {
    if (n1 != steps_) throw std::invalid_argument("finalize: n1 must equal the step count");
    const auto map = slot_map();
    std::vector<Index> lo{0}, to{0}, li, ti;
    std::vector<T> lv, tv;
    std::vector<std::pair<Index, T>> buf;
    for (Index j = 0; j < steps_; ++j) {
      buf.clear();
      for (Index p = offsets_[j]; p < offsets_[j + 1]; ++p) buf.emplace_back(map[slot_[p]], val_[p]);
      std::sort(buf.begin(), buf.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      for (const auto& [r, v] : buf) {
        if (r < n1) {
          li.push_back(r);
          lv.push_back(v);
        } else {
          ti.push_back(r - n1);
          tv.push_back(v);
        }
      }
      lo.push_back(Index(li.size()));
      to.push_back(Index(ti.size()));
    }
    const Index nt = n_ - n1;
    if (primary_ == Orientation::col_major)
      return {CompressedMatrix<T>(Orientation::col_major, n1, n1, std::move(lo), std::move(li),
                                  std::move(lv)),
              CompressedMatrix<T>(Orientation::col_major, nt, n1, std::move(to), std::move(ti),
                                  std::move(tv))};
    return {CompressedMatrix<T>(Orientation::row_major, n1, n1, std::move(lo), std::move(li),
                                std::move(lv)),
            CompressedMatrix<T>(Orientation::row_major, n1, nt, std::move(to), std::move(ti),
                                std::move(tv))};
  }

  // n x steps() dense view in (logical secondary, primary) order, row-major
  std::vector<T> dense() const {
    const auto map = slot_map();
    std::vector<T> d(std::size_t(n_) * steps_, T(0));
    for (Index j = 0; j < steps_; ++j)
      for (Index p = offsets_[j]; p < offsets_[j + 1]; ++p)
        d[std::size_t(map[slot_[p]]) * steps_ + j] = val_[p];
    return d;
  }

  // consistency audit used by the tests; throws std::logic_error
  void check() const {
    const Index cur = steps_ + gap_;
    for (Index p = 0; p < Index(slot_.size()); ++p)
      if (slot_[p] < 0 || slot_[p] >= n_ + gap_) throw std::logic_error("slot out of range");
    if (mode_ == AugMode::full) {
      for (std::size_t t = 0; t < value_pos_.size(); ++t)
        if (inv_value_pos_[value_pos_[t]] != Index(t)) throw std::logic_error("value_pos mismatch");
      std::vector<Index> seen(slot_.size(), 0);
      for (Index s = 0; s < n_ + gap_; ++s) {
        Index cnt = 0, last = -1;
        for (Index node = row_start_[s]; node != -1; node = row_next_[node]) {
          if (slot_[value_pos_[node]] != s) throw std::logic_error("node listed under wrong slot");
          ++seen[value_pos_[node]];
          ++cnt;
          last = node;
        }
        if (cnt != row_count_[s] || last != row_end_[s]) throw std::logic_error("row list tail");
      }
      for (auto c : seen)
        if (c != 1) throw std::logic_error("entry missing from row lists");
    } else {
      for (Index j = 0; j < steps_; ++j) {
        for (Index p = offsets_[j] + 1; p < offsets_[j + 1]; ++p)
          if (slot_[p] <= slot_[p - 1]) throw std::logic_error("primary slice not sorted");
        for (Index p = offsets_[j]; p < cursor_[j]; ++p)
          if (slot_[p] >= cur) throw std::logic_error("cursor behind an open entry");
        if (cursor_[j] < offsets_[j + 1] && slot_[cursor_[j]] < cur)
          throw std::logic_error("cursor on a finalized entry");
      }
    }
  }

 private:
  void check_open(Index i) const {
    if (i < steps_ || i >= n_) throw std::invalid_argument("secondary index is not open");
  }

  void push_list(Index s, Index j) {
    link_[j] = head_[s];
    head_[s] = j;
  }

  void push_node(Index s, Index node) {
    row_next_[node] = -1;
    if (row_end_[s] == -1)
      row_start_[s] = node;
    else
      row_next_[row_end_[s]] = node;
    row_end_[s] = node;
    ++row_count_[s];
  }

  // after finalizing slot s, move each listed column's cursor to its next
  // entry and relink it under that entry's slot
  void advance_cursors(Index s) {
    Index j = head_[s];
    head_[s] = -1;
    while (j != -1) {
      const Index nxt = link_[j];
      if (++cursor_[j] < offsets_[j + 1]) push_list(slot_[cursor_[j]], j);
      ++touches_;
      j = nxt;
    }
  }

  // Moves the entry at position p to the end of primary slice j, shifting
  // the entries after it. Returns the new position.
  Index rotate_to_end(Index p, Index j) {
    const Index e = offsets_[j + 1] - 1;
    if (p == e) return e;
    const Index sp = slot_[p];
    const T vp = val_[p];
    const Index np = mode_ == AugMode::full ? inv_value_pos_[p] : -1;
    for (Index x = p; x < e; ++x) {
      slot_[x] = slot_[x + 1];
      val_[x] = val_[x + 1];
      if (mode_ == AugMode::full) {
        inv_value_pos_[x] = inv_value_pos_[x + 1];
        value_pos_[inv_value_pos_[x]] = x;
      }
      ++touches_;
    }
    slot_[e] = sp;
    val_[e] = vp;
    if (mode_ == AugMode::full) {
      inv_value_pos_[e] = np;
      value_pos_[np] = e;
    }
    return e;
  }

  Index n_;
  AugMode mode_;
  Orientation primary_;
  Index steps_ = 0;
  Index gap_ = 0;
  std::size_t touches_ = 0;

  std::vector<Index> offsets_;
  std::vector<Index> slot_;
  std::vector<T> val_;
  std::vector<Index> step_slot_;

  // partial modes
  std::vector<Index> head_;
  std::vector<Index> cursor_;
  std::vector<Index> link_;

  // full mode
  std::vector<Index> value_pos_;
  std::vector<Index> inv_value_pos_;
  std::vector<Index> node_primary_;
  std::vector<Index> row_start_;
  std::vector<Index> row_next_;
  std::vector<Index> row_end_;
  std::vector<Index> row_count_;
};

}  // namespace hif
