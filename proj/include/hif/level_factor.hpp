#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hif/augmented_factor.hpp"
#include "hif/compressed_matrix.hpp"
#include "hif/params.hpp"

namespace hif {

struct LevelOptions {
  double alpha_L = 10, alpha_U = 10;
  double kappa = 3, kappa_d = 3;
  double tau_L = 1e-4, tau_U = 1e-4;
  int max_steps = 4;
  bool ibrp = false;

  static LevelOptions from(const Params& p, bool ibrp = false) {
    LevelOptions o;
    o.alpha_L = p.alpha_L;
    o.alpha_U = p.alpha_U;
    o.kappa = p.kappa;
    o.kappa_d = p.kappa_d;
    o.tau_L = p.tau_L;
    o.tau_U = p.tau_U;
    o.max_steps = p.max_steps;
    o.ibrp = ibrp;
    if (ibrp) {
      o.alpha_L = std::min(p.alpha_L * p.alpha_growth, std::max(p.alpha_L, p.alpha_cap));
      o.alpha_U = std::min(p.alpha_U * p.alpha_growth, std::max(p.alpha_U, p.alpha_cap));
    }
    return o;
  }
};

// Running lower bound on ||T^{-1}||_inf for a unit lower triangular T grown
// one row at a time: x solves T x = e with e_k = +-1 chosen greedily.
template <class T>
class TriEstimator {
 public:
  Index size() const { return Index(x_.size()); }
  double norm() const { return norm_; }

  // x_k for a candidate row given as for_each(callback(j, t_kj)), j < size()
  template <class ForEach>
  T propose(ForEach&& for_each) const {
    T s(0);
    for_each([&](Index j, const T& t) { s += t * x_[j]; });
    return -unit_sign(s) - s;
  }

  double with(const T& xk) const { return std::max(norm_, double(abs(xk))); }

  void push(const T& xk) {
    x_.push_back(xk);
    norm_ = with(xk);
  }

 private:
  std::vector<T> x_;
  double norm_ = 1.0;
};

template <class T>
struct LevelFactor {
  Index n = 0;   // level dimension
  Index n0 = 0;  // leading block handed in (after static deferral)
  Index n1 = 0;  // factored leading block
  CompressedMatrix<T> L_B;  // n1 x n1 strictly lower, CSC
  CompressedMatrix<T> L_E;  // (n-n1) x n1, CSC
  CompressedMatrix<T> U_B;  // n1 x n1 strictly upper, CSR
  CompressedMatrix<T> U_F;  // n1 x (n-n1), CSR
  std::vector<T> d;
  std::vector<Index> p;  // logical position -> level row
  std::vector<Index> q;  // logical position -> level column
  Index defers = 0;
  Index row_swaps = 0;
  Index col_swaps = 0;
  double kappa_L = 1, kappa_U = 1;
  std::size_t work = 0;

  Index dynamic_defers() const { return defers; }
  double defer_ratio() const { return n0 == 0 ? 1.0 : double(defers) / double(n0); }
};

namespace detail {

template <class T>
class SparseAccumulator {
 public:
  explicit SparseAccumulator(Index n) : val_(n, T(0)), mark_(n, 0) {}

  void add(Index i, const T& v) {
    if (!mark_[i]) {
      mark_[i] = 1;
      idx_.push_back(i);
      val_[i] = v;
    } else {
      val_[i] += v;
    }
  }
  bool has(Index i) const { return mark_[i] != 0; }
  T get(Index i) const { return mark_[i] ? val_[i] : T(0); }
  const std::vector<Index>& indices() const { return idx_; }
  void clear() {
    for (Index i : idx_) {
      mark_[i] = 0;
      val_[i] = T(0);
    }
    idx_.clear();
  }

 private:
  std::vector<T> val_;
  std::vector<char> mark_;
  std::vector<Index> idx_;
};

inline std::size_t budget(double alpha, Index count) {
  const double b = std::ceil(alpha * double(std::max<Index>(count, 1)));
  return b >= 1e18 ? std::size_t(-1) / 2 : std::size_t(b);
}

// keep the `keep` largest magnitudes (ties: smaller index), sorted by index
template <class T>
void keep_largest(std::vector<std::pair<Index, T>>& e, std::size_t keep) {
  if (e.size() > keep) {
    auto cmp = [](const auto& a, const auto& b) {
      const auto ma = abs(a.second), mb = abs(b.second);
      return ma > mb || (ma == mb && a.first < b.first);
    };
    std::nth_element(e.begin(), e.begin() + keep, e.end(), cmp);
    e.resize(keep);
  }
  std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
}

template <class T>
class CroutSweep {
  using R = real_t<T>;

 public:
  CroutSweep(const CompressedMatrix<T>& a_csr, const CompressedMatrix<T>& a_csc,
             std::span<const R> w, std::span<const R> v, std::span<const Index> p,
             std::span<const Index> q, Index n1, std::span<const Index> nr,
             std::span<const Index> nc, const LevelOptions& opt)
      : a_csr_(a_csr),
        a_csc_(a_csc),
        w_(w),
        v_(v),
        nr_(nr),
        nc_(nc),
        opt_(opt),
        n_(a_csr.nrows()),
        m_(n1),
        n0_(n1),
        L_(n_, opt.ibrp ? AugMode::full : AugMode::partial_gap, Orientation::col_major),
        U_(n_, opt.ibrp ? AugMode::full : AugMode::partial_gap, Orientation::row_major),
        d_(n_, T(0)),
        acc_(n_),
        buf_(n_, T(0)),
        mark_(n_, 0) {
    p_slot_.assign(2 * std::size_t(n_) + 1, -1);
    q_slot_.assign(2 * std::size_t(n_) + 1, -1);
    row_slot_.assign(n_, -1);
    col_slot_.assign(n_, -1);
    for (Index i = 0; i < n_; ++i) {
      p_slot_[i] = p[i];
      q_slot_[i] = q[i];
      row_slot_[p[i]] = i;
      col_slot_[q[i]] = i;
    }
  }

  LevelFactor<T> run() {
    Index k = 0;
    while (k < m_) {
      if (opt_.ibrp) rook_pivot(k);
      T dk = diag(k);
      T xl = estL_.propose([&](auto&& f) { L_.for_each_secondary(k, f); });
      T xu = estU_.propose([&](auto&& f) {
        U_.for_each_secondary(k, [&](Index j, const T& u) { f(j, hif::conj(u)); });
      });
      bool stop = false;
      while (opt_.kappa_d * double(abs(dk)) < 1.0 ||
             std::max(estL_.with(xl), estU_.with(xu)) > opt_.kappa) {
        defer(k);
        if (k == m_) {
          stop = true;
          break;
        }
        dk = diag(k);
        xl = estL_.propose([&](auto&& f) { L_.for_each_secondary(k, f); });
        xu = estU_.propose([&](auto&& f) {
          U_.for_each_secondary(k, [&](Index j, const T& u) { f(j, hif::conj(u)); });
        });
      }
      if (stop) break;
      const double kl = estL_.with(xl), ku = estU_.with(xu);
      const Index s = k + gap();
      // column of L
      fanin_col(k);
      entries_.clear();
      for (Index r : acc_.indices()) {
        if (r <= k) continue;
        const T l = acc_.get(r) / dk;
        if (opt_.kappa_d * kl * double(abs(l)) > opt_.tau_L) entries_.emplace_back(r, l);
      }
      acc_.clear();
      keep_largest(entries_, budget(opt_.alpha_L, nc_[q_slot_[s]]));
      split_entries();
      // row of U
      fanin_row(k);
      auto lrows = rows_;
      auto lvals = vals_;
      entries_.clear();
      for (Index c : acc_.indices()) {
        if (c <= k) continue;
        const T u = acc_.get(c) / dk;
        if (opt_.kappa_d * ku * double(abs(u)) > opt_.tau_U) entries_.emplace_back(c, u);
      }
      acc_.clear();
      keep_largest(entries_, budget(opt_.alpha_U, nr_[p_slot_[s]]));
      split_entries();
      L_.append(lrows, lvals);
      U_.append(rows_, vals_);
      estL_.push(xl);
      estU_.push(xu);
      d_[k] = dk;
      step_slot_.push_back(s);
      ++k;
    }
    return finish(k);
  }

 private:
  Index gap() const { return L_.gap(); }

  T scaled(Index i, Index j, const T& a) const { return T(w_[i]) * a * T(v_[j]); }

  T diag(Index k) {
    const Index s = k + gap();
    const Index i = p_slot_[s], c = q_slot_[s];
    T dk = scaled(i, c, a_csr_.coeff(i, c));
    touched_.clear();
    L_.for_each_secondary(k, [&](Index j, const T& l) {
      buf_[j] = l;
      mark_[j] = 1;
      touched_.push_back(j);
    });
    U_.for_each_secondary(k, [&](Index j, const T& u) {
      if (mark_[j]) dk -= buf_[j] * d_[j] * u;
    });
    for (Index j : touched_) mark_[j] = 0;
    work_ += touched_.size() + 1;
    return dk;
  }

  // unscaled column k of L (rows >= k) into acc_
  void fanin_col(Index k) {
    const Index s = k + gap(), c = q_slot_[s];
    auto idx = a_csc_.slice_indices(c);
    auto val = a_csc_.slice_values(c);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      const Index sl = row_slot_[idx[t]];
      if (sl >= s) acc_.add(sl - gap(), scaled(idx[t], c, val[t]));
    }
    work_ += idx.size();
    U_.for_each_secondary(k, [&](Index j, const T& u) {
      const T coef = d_[j] * u;
      L_.for_each_trailing(j, [&](Index r, const T& l) {
        acc_.add(r, -l * coef);
        ++work_;
      });
    });
  }

  // unscaled row k of U (columns >= k) into acc_
  void fanin_row(Index k) {
    const Index s = k + gap(), i = p_slot_[s];
    auto idx = a_csr_.slice_indices(i);
    auto val = a_csr_.slice_values(i);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      const Index sl = col_slot_[idx[t]];
      if (sl >= s) acc_.add(sl - gap(), scaled(i, idx[t], val[t]));
    }
    work_ += idx.size();
    L_.for_each_secondary(k, [&](Index j, const T& l) {
      const T coef = l * d_[j];
      U_.for_each_trailing(j, [&](Index c, const T& u) {
        acc_.add(c, -coef * u);
        ++work_;
      });
    });
  }

  void split_entries() {
    rows_.clear();
    vals_.clear();
    for (const auto& [r, x] : entries_) {
      rows_.push_back(r);
      vals_.push_back(x);
    }
  }

  void defer(Index k) {
    const Index s = k + gap(), t = n_ + gap();
    L_.defer(k);
    U_.defer(k);
    p_slot_[t] = p_slot_[s];
    q_slot_[t] = q_slot_[s];
    p_slot_[s] = q_slot_[s] = -1;
    row_slot_[p_slot_[t]] = t;
    col_slot_[q_slot_[t]] = t;
    --m_;
    ++defers_;
  }

  // first candidate (by decreasing magnitude) in (k, m) that beats |pivot|
  // and keeps the inverse-norm estimate within kappa
  template <class Fits>
  Index best_candidate(Index k, Fits&& fits) {
    const double pk = double(abs(acc_.get(k)));
    cand_.clear();
    for (Index r : acc_.indices())
      if (r > k && r < m_ && double(abs(acc_.get(r))) > pk) cand_.emplace_back(r, acc_.get(r));
    std::sort(cand_.begin(), cand_.end(), [](const auto& a, const auto& b) {
      const auto ma = abs(a.second), mb = abs(b.second);
      return ma > mb || (ma == mb && a.first < b.first);
    });
    for (const auto& [r, x] : cand_)
      if (fits(r)) return r;
    return -1;
  }

  void rook_pivot(Index k) {
    for (int it = 1; it <= opt_.max_steps; ++it) {
      fanin_col(k);
      const Index r = best_candidate(k, [&](Index r) {
        const T x = estL_.propose([&](auto&& f) { L_.for_each_secondary(r, f); });
        return estL_.with(x) <= opt_.kappa;
      });
      acc_.clear();
      if (r >= 0) {
        L_.interchange(k, r);
        const Index a = k + gap(), b = r + gap();
        std::swap(p_slot_[a], p_slot_[b]);
        row_slot_[p_slot_[a]] = a;
        row_slot_[p_slot_[b]] = b;
        ++row_swaps_;
      } else if (it > 1) {
        break;
      }
      fanin_row(k);
      const Index c = best_candidate(k, [&](Index c) {
        const T x = estU_.propose([&](auto&& f) {
          U_.for_each_secondary(c, [&](Index j, const T& u) { f(j, hif::conj(u)); });
        });
        return estU_.with(x) <= opt_.kappa;
      });
      acc_.clear();
      if (c < 0) break;
      U_.interchange(k, c);
      const Index a = k + gap(), b = c + gap();
      std::swap(q_slot_[a], q_slot_[b]);
      col_slot_[q_slot_[a]] = a;
      col_slot_[q_slot_[b]] = b;
      ++col_swaps_;
    }
  }

  LevelFactor<T> finish(Index n1) {
    LevelFactor<T> out;
    out.n = n_;
    out.n0 = n0_;
    out.n1 = n1;
    auto [lb, le] = L_.finalize(n1);
    auto [ub, uf] = U_.finalize(n1);
    out.L_B = std::move(lb);
    out.L_E = std::move(le);
    out.U_B = std::move(ub);
    out.U_F = std::move(uf);
    out.d.assign(d_.begin(), d_.begin() + n1);
    out.p.resize(n_);
    out.q.resize(n_);
    for (Index i = 0; i < n1; ++i) {
      out.p[i] = p_slot_[step_slot_[i]];
      out.q[i] = q_slot_[step_slot_[i]];
    }
    for (Index i = n1; i < n_; ++i) {
      out.p[i] = p_slot_[i + gap()];
      out.q[i] = q_slot_[i + gap()];
    }
    out.defers = defers_;
    out.row_swaps = row_swaps_;
    out.col_swaps = col_swaps_;
    out.kappa_L = estL_.norm();
    out.kappa_U = estU_.norm();
    out.work = work_ + L_.touches() + U_.touches();
    return out;
  }

  const CompressedMatrix<T>& a_csr_;
  const CompressedMatrix<T>& a_csc_;
  std::span<const R> w_, v_;
  std::span<const Index> nr_, nc_;
  LevelOptions opt_;
  Index n_, m_, n0_;
  AugmentedFactor<T> L_, U_;
  std::vector<T> d_;
  TriEstimator<T> estL_, estU_;
  SparseAccumulator<T> acc_;
  std::vector<T> buf_;
  std::vector<char> mark_;
  std::vector<Index> touched_;
  std::vector<Index> p_slot_, q_slot_, row_slot_, col_slot_, step_slot_;
  std::vector<std::pair<Index, T>> entries_, cand_;
  std::vector<Index> rows_;
  std::vector<T> vals_;
  Index defers_ = 0, row_swaps_ = 0, col_swaps_ = 0;
  std::size_t work_ = 0;
};

}  // namespace detail

// One level of the Crout-style ILDU on W A V with initial permutations p, q
// and leading block n1. nr/nc hold the fill-budget reference counts for the
// level rows and columns.
template <class T>
LevelFactor<T> ilu_factorize(const CompressedMatrix<T>& a, std::span<const real_t<T>> w,
                             std::span<const real_t<T>> v, std::span<const Index> p,
                             std::span<const Index> q, Index n1, std::span<const Index> nr,
                             std::span<const Index> nc, const LevelOptions& opt) {
  const Index n = a.nrows();
  if (a.ncols() != n) throw std::invalid_argument("ilu_factorize: matrix must be square");
  if (Index(w.size()) != n || Index(v.size()) != n || Index(p.size()) != n ||
      Index(q.size()) != n || Index(nr.size()) != n || Index(nc.size()) != n)
    throw std::invalid_argument("ilu_factorize: vector length mismatch");
  if (n1 < 0 || n1 > n) throw std::invalid_argument("ilu_factorize: n1 out of range");
  const auto csr = a.convert(Orientation::row_major);
  const auto csc = a.convert(Orientation::col_major);
  detail::CroutSweep<T> sweep(csr, csc, w, v, p, q, n1, nr, nc, opt);
  return sweep.run();
}

// Extracts rows rp and columns cq of W A V as a CSR matrix; rows/columns are
// given as level indices, in the order they should appear.
template <class T>
CompressedMatrix<T> extract_block(const CompressedMatrix<T>& a_csr, std::span<const real_t<T>> w,
                                  std::span<const real_t<T>> v, std::span<const Index> rp,
                                  std::span<const Index> cq) {
  std::vector<Index> cpos(a_csr.ncols(), -1);
  for (Index j = 0; j < Index(cq.size()); ++j) cpos[cq[j]] = j;
  std::vector<Index> off{0}, ind;
  std::vector<T> val;
  std::vector<std::pair<Index, T>> row;
  for (Index i : rp) {
    row.clear();
    auto idx = a_csr.slice_indices(i);
    auto vv = a_csr.slice_values(i);
    for (std::size_t t = 0; t < idx.size(); ++t)
      if (cpos[idx[t]] >= 0) row.emplace_back(cpos[idx[t]], T(w[i]) * vv[t] * T(v[idx[t]]));
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [j, x] : row) {
      ind.push_back(j);
      val.push_back(x);
    }
    off.push_back(Index(ind.size()));
  }
  return CompressedMatrix<T>(Orientation::row_major, Index(rp.size()), Index(cq.size()),
                             std::move(off), std::move(ind), std::move(val));
}

// S = C - L_E D_B U_F, after thinning rows of L_E and columns of U_F to the
// fill budgets. Returns a CSR matrix of size n - n1.
template <class T>
CompressedMatrix<T> compute_schur(const CompressedMatrix<T>& a, std::span<const real_t<T>> w,
                                  std::span<const real_t<T>> v, const LevelFactor<T>& lf,
                                  std::span<const Index> nr, std::span<const Index> nc,
                                  double alpha_L, double alpha_U, std::size_t* work = nullptr) {
  const auto csr = a.convert(Orientation::row_major);
  const Index n = lf.n, n1 = lf.n1, ns = n - n1;
  std::vector<Index> cpos(n, -1);
  for (Index j = n1; j < n; ++j) cpos[lf.q[j]] = j - n1;
  std::size_t ops = 0;

  auto thin = [&](const CompressedMatrix<T>& m, auto&& budget_of) {
    std::vector<Index> off{0}, ind;
    std::vector<T> val;
    std::vector<std::pair<Index, T>> e;
    for (Index i = 0; i < m.primary_dim(); ++i) {
      e.clear();
      auto idx = m.slice_indices(i);
      auto vv = m.slice_values(i);
      for (std::size_t t = 0; t < idx.size(); ++t) e.emplace_back(idx[t], vv[t]);
      detail::keep_largest(e, budget_of(i));
      for (const auto& [j, x] : e) {
        ind.push_back(j);
        val.push_back(x);
      }
      off.push_back(Index(ind.size()));
      ops += idx.size();
    }
    return CompressedMatrix<T>(m.orientation(), m.nrows(), m.ncols(), std::move(off),
                               std::move(ind), std::move(val));
  };
  const auto le = thin(lf.L_E.convert(Orientation::row_major),
                       [&](Index i) { return detail::budget(alpha_L, nr[lf.p[n1 + i]]); });
  const auto uf = thin(lf.U_F.convert(Orientation::col_major),
                       [&](Index c) { return detail::budget(alpha_U, nc[lf.q[n1 + c]]); })
                      .convert(Orientation::row_major);

  detail::SparseAccumulator<T> acc(ns);
  std::vector<Index> off{0}, ind;
  std::vector<T> val;
  for (Index i = 0; i < ns; ++i) {
    const Index r = lf.p[n1 + i];
    auto idx = csr.slice_indices(r);
    auto vv = csr.slice_values(r);
    for (std::size_t t = 0; t < idx.size(); ++t)
      if (cpos[idx[t]] >= 0) acc.add(cpos[idx[t]], T(w[r]) * vv[t] * T(v[idx[t]]));
    ops += idx.size();
    auto lj = le.slice_indices(i);
    auto lv = le.slice_values(i);
    for (std::size_t t = 0; t < lj.size(); ++t) {
      const T coef = lv[t] * lf.d[lj[t]];
      auto uj = uf.slice_indices(lj[t]);
      auto uv = uf.slice_values(lj[t]);
      for (std::size_t s = 0; s < uj.size(); ++s) acc.add(uj[s], -coef * uv[s]);
      ops += uj.size();
    }
    auto cols = acc.indices();
    std::sort(cols.begin(), cols.end());
    for (Index c : cols) {
      const T x = acc.get(c);
      if (x != T(0)) {
        ind.push_back(c);
        val.push_back(x);
      }
    }
    off.push_back(Index(ind.size()));
    acc.clear();
  }
  if (work) *work += ops;
  return CompressedMatrix<T>(Orientation::row_major, ns, ns, std::move(off), std::move(ind),
                             std::move(val));
}

enum class LevelDecision { recurse, dense, discard };

inline const char* to_string(LevelDecision d) {
  switch (d) {
    case LevelDecision::recurse: return "recurse";
    case LevelDecision::dense: return "dense";
    case LevelDecision::discard: return "discard";
  }
  return "?";
}

// What to do after a level: discard it and factor its input densely, factor
// the Schur complement densely, or recurse on the Schur complement.
inline LevelDecision level_decision(Index n0, Index defers, Index n_schur,
                                    std::size_t nnz_schur, Index n_total, const Params& prm) {
  const double ratio = n0 == 0 ? 1.0 : double(defers) / double(n0);
  if (ratio >= 0.75) return LevelDecision::discard;
  if (ratio >= 0.6) return LevelDecision::dense;
  const Index small = std::max<Index>(prm.dense_min, Index(std::ceil(2.0 * std::cbrt(double(n_total)))));
  if (n_schur <= small) return LevelDecision::dense;
  const double density = n_schur == 0 ? 0.0 : double(nnz_schur) / (double(n_schur) * double(n_schur));
  if (density >= prm.dense_density) return LevelDecision::dense;
  return LevelDecision::recurse;
}

}  // namespace hif
