#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hif/compressed_matrix.hpp"
#include "hif/level_factor.hpp"
#include "hif/log.hpp"
#include "hif/params.hpp"
#include "hif/preprocess.hpp"
#include "hif/qrcp.hpp"

namespace hif {

template <class T>
struct HifLevel {
  Index n = 0;
  Index n1 = 0;
  CompressedMatrix<T> L_B;  // CSC, strictly lower
  CompressedMatrix<T> U_B;  // CSR, strictly upper
  CompressedMatrix<T> E;    // CSR, rows n1..n of the permuted scaled input
  CompressedMatrix<T> F;    // CSR, columns n1..n
  std::vector<T> d;
  std::vector<Index> p, q;
  std::vector<real_t<T>> w, v;

  std::size_t nnz() const {
    return std::size_t(L_B.nnz()) + U_B.nnz() + d.size() + E.nnz() + F.nnz();
  }
};

struct LevelStats {
  Index n = 0;
  Index n0 = 0;
  Index n1 = 0;
  Index static_deferred = 0;
  Index dynamic_deferred = 0;
  Index row_swaps = 0;
  Index col_swaps = 0;
  bool ibrp = false;
  bool symmetric_mode = false;
  double alpha_L = 0, alpha_U = 0;
  double kappa_L = 1, kappa_U = 1;
  LevelDecision decision = LevelDecision::recurse;
  std::size_t nnz = 0;
  std::size_t work = 0;
};

struct HifStats {
  std::vector<LevelStats> levels;  // includes a discarded level, if any
  Index final_dim = 0;
  Index rank_default = 0;
  Index rank_nullspace = 0;
  std::size_t nnz_input = 0;
  std::size_t nnz_factors = 0;
  double nnz_ratio = 0;
  std::size_t work = 0;        // sparse levels plus the dense factor
  std::size_t dense_work = 0;  // dense factor alone
  double factor_seconds = 0;
};

template <class T>
class HifPrecond;

template <class T, class U>
HifPrecond<T> factorize(const CompressedMatrix<U>& a, const Params& params = Params{});

// Multilevel hybrid incomplete factorization, usable as an approximate
// generalized inverse. T is the factor precision; the apply methods accept
// vectors of any scalar with the same realness.
template <class T>
class HifPrecond {
  using R = real_t<T>;

 public:
  HifPrecond() = default;

  Index nrows() const { return n_; }
  Index ncols() const { return n_; }
  bool empty() const { return n_ == 0 && levels_.empty(); }
  Index nlevels() const { return Index(levels_.size()); }
  const std::vector<HifLevel<T>>& levels() const { return levels_; }
  const std::optional<QrcpFactor<T>>& final_factor() const { return final_; }
  const HifStats& stats() const { return stats_; }
  Index schur_rank() const { return stats_.rank_default; }
  Index null_dim_estimate() const { return stats_.final_dim - stats_.rank_default; }

  // rnk: 0 -> default rank, -1 -> null-space rank, > 0 explicit
  Index map_rank(int rnk) const {
    if (rnk == 0) return stats_.rank_default;
    if (rnk == -1) return stats_.rank_nullspace;
    if (rnk < -1) throw std::invalid_argument("rank selector must be >= -1");
    if (rnk > stats_.rank_nullspace) {
      warn("requested rank " + std::to_string(rnk) + " exceeds the null-space rank " +
           std::to_string(stats_.rank_nullspace) + "; clamping");
      return stats_.rank_nullspace;
    }
    return Index(rnk);
  }

  // y -> M^g y, or (M^g)^H y when trans is set
  template <class U>
  std::vector<U> solve(std::span<const U> y, bool trans = false, int rnk = 0) const {
    static_assert(is_complex_v<U> == is_complex_v<T>, "vector and factor realness must match");
    check_size(y.size());
    const Index rank = map_rank(rnk);
    std::vector<T> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = scalar_cast<T>(y[i]);
    solve_from(0, z, trans, rank);
    return convert_out<U>(z);
  }
  template <class U>
  std::vector<U> solve(const std::vector<U>& y, bool trans = false, int rnk = 0) const {
    return solve(std::span<const U>(y), trans, rnk);
  }

  // iterative refinement v_j = v_{j-1} + M^g (q - A v_{j-1}), v_0 = 0
  template <class U>
  std::vector<U> hifir(const CompressedMatrix<U>& a, std::span<const U> q, int nirs,
                       bool trans = false, int rnk = -1) const {
    if (nirs < 1) throw std::invalid_argument("nirs must be positive");
    check_size(q.size());
    if (a.nrows() != n_ || a.ncols() != n_) throw std::invalid_argument("hifir: matrix size mismatch");
    std::vector<U> v = solve(q, trans, rnk), r(q.size());
    for (int j = 1; j < nirs; ++j) {
      a.spmv(v, r, trans);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = q[i] - r[i];
      const auto dv = solve(std::span<const U>(r), trans, rnk);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += dv[i];
    }
    return v;
  }

  // x -> M x with the multilevel approximation of A, or M^H x
  template <class U>
  std::vector<U> mmultiply(std::span<const U> x, bool trans = false, int rnk = -1) const {
    static_assert(is_complex_v<U> == is_complex_v<T>, "vector and factor realness must match");
    check_size(x.size());
    const Index rank = map_rank(rnk);
    std::vector<T> z(x.size()), out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = scalar_cast<T>(x[i]);
    mult_from(0, z, out, trans, rank);
    return convert_out<U>(out);
  }
  template <class U>
  std::vector<U> mmultiply(const std::vector<U>& x, bool trans = false, int rnk = -1) const {
    return mmultiply(std::span<const U>(x), trans, rnk);
  }

  template <class T2, class U>
  friend HifPrecond<T2> factorize(const CompressedMatrix<U>& a, const Params& params);

 private:
  void check_size(std::size_t m) const {
    if (Index(m) != n_) throw std::invalid_argument("vector length does not match the operator");
  }

  template <class U>
  static std::vector<U> convert_out(const std::vector<T>& z) {
    if constexpr (std::is_same_v<U, T>) {
      return z;
    } else {
      std::vector<U> y(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) y[i] = scalar_cast<U>(z[i]);
      return y;
    }
  }

  // x <- (L D U)^{-1} x, or (L D U)^{-H} x
  static void block_solve(const HifLevel<T>& lv, std::span<T> x, bool trans) {
    const Index n1 = lv.n1;
    if (!trans) {
      for (Index j = 0; j < n1; ++j) {
        const T xj = x[j];
        auto idx = lv.L_B.slice_indices(j);
        auto val = lv.L_B.slice_values(j);
        for (std::size_t t = 0; t < idx.size(); ++t) x[idx[t]] -= val[t] * xj;
      }
      for (Index j = 0; j < n1; ++j) x[j] /= lv.d[j];
      for (Index i = n1 - 1; i >= 0; --i) {
        T s = x[i];
        auto idx = lv.U_B.slice_indices(i);
        auto val = lv.U_B.slice_values(i);
        for (std::size_t t = 0; t < idx.size(); ++t) s -= val[t] * x[idx[t]];
        x[i] = s;
      }
    } else {
      for (Index j = 0; j < n1; ++j) {
        const T xj = x[j];
        auto idx = lv.U_B.slice_indices(j);
        auto val = lv.U_B.slice_values(j);
        for (std::size_t t = 0; t < idx.size(); ++t) x[idx[t]] -= hif::conj(val[t]) * xj;
      }
      for (Index j = 0; j < n1; ++j) x[j] /= hif::conj(lv.d[j]);
      for (Index i = n1 - 1; i >= 0; --i) {
        T s = x[i];
        auto idx = lv.L_B.slice_indices(i);
        auto val = lv.L_B.slice_values(i);
        for (std::size_t t = 0; t < idx.size(); ++t) s -= hif::conj(val[t]) * x[idx[t]];
        x[i] = s;
      }
    }
  }

  // x <- (L D U) x, or (L D U)^H x
  static void block_mult(const HifLevel<T>& lv, std::span<T> x, bool trans) {
    const Index n1 = lv.n1;
    if (!trans) {
      for (Index i = 0; i < n1; ++i) {
        T s = x[i];
        auto idx = lv.U_B.slice_indices(i);
        auto val = lv.U_B.slice_values(i);
        for (std::size_t t = 0; t < idx.size(); ++t) s += val[t] * x[idx[t]];
        x[i] = s * lv.d[i];
      }
      for (Index j = n1 - 1; j >= 0; --j) {
        const T xj = x[j];
        auto idx = lv.L_B.slice_indices(j);
        auto val = lv.L_B.slice_values(j);
        for (std::size_t t = 0; t < idx.size(); ++t) x[idx[t]] += val[t] * xj;
      }
    } else {
      for (Index i = 0; i < n1; ++i) {
        T s = x[i];
        auto idx = lv.L_B.slice_indices(i);
        auto val = lv.L_B.slice_values(i);
        for (std::size_t t = 0; t < idx.size(); ++t) s += hif::conj(val[t]) * x[idx[t]];
        x[i] = s * hif::conj(lv.d[i]);
      }
      for (Index j = n1 - 1; j >= 0; --j) {
        const T xj = x[j];
        auto idx = lv.U_B.slice_indices(j);
        auto val = lv.U_B.slice_values(j);
        for (std::size_t t = 0; t < idx.size(); ++t) x[idx[t]] += hif::conj(val[t]) * xj;
      }
    }
  }

  void solve_from(std::size_t lvl, std::span<T> y, bool trans, Index rank) const {
    if (lvl == levels_.size()) {
      if (!final_ || y.empty()) return;
      std::vector<T> x(y.size());
      final_->apply_pinv(std::span<const T>(y.data(), y.size()), x, rank, trans);
      std::copy(x.begin(), x.end(), y.begin());
      return;
    }
    const auto& lv = levels_[lvl];
    const Index n = lv.n, n1 = lv.n1;
    const auto& ip = trans ? lv.q : lv.p;
    const auto& is = trans ? lv.v : lv.w;
    const auto& op = trans ? lv.p : lv.q;
    const auto& os = trans ? lv.w : lv.v;
    std::vector<T> t(n), x(n);
    for (Index i = 0; i < n; ++i) t[i] = T(is[ip[i]]) * y[ip[i]];
    std::span<T> x1(x.data(), n1), x2(x.data() + n1, n - n1);
    std::copy(t.begin(), t.begin() + n1, x1.begin());
    block_solve(lv, x1, trans);
    if (n > n1) {
      std::vector<T> tmp(n - n1);
      (trans ? lv.F : lv.E).spmv(x1, tmp, trans);
      for (Index i = 0; i < n - n1; ++i) x2[i] = t[n1 + i] - tmp[i];
      solve_from(lvl + 1, x2, trans, rank);
      std::vector<T> tmp1(n1);
      (trans ? lv.E : lv.F).spmv(x2, tmp1, trans);
      for (Index i = 0; i < n1; ++i) x1[i] = t[i] - tmp1[i];
      block_solve(lv, x1, trans);
    }
    for (Index i = 0; i < n; ++i) y[op[i]] = T(os[op[i]]) * x[i];
  }

  void mult_from(std::size_t lvl, std::span<const T> x, std::span<T> out, bool trans,
                 Index rank) const {
    if (lvl == levels_.size()) {
      if (!final_ || x.empty()) {
        std::fill(out.begin(), out.end(), T(0));
        return;
      }
      final_->apply_truncated(x, out, rank, trans);
      return;
    }
    const auto& lv = levels_[lvl];
    const Index n = lv.n, n1 = lv.n1, ns = n - n1;
    const auto& ip = trans ? lv.p : lv.q;
    const auto& is = trans ? lv.w : lv.v;
    const auto& op = trans ? lv.q : lv.p;
    const auto& os = trans ? lv.v : lv.w;
    const auto& top_off = trans ? lv.E : lv.F;  // couples x2 into the top block
    const auto& bot_off = trans ? lv.F : lv.E;  // couples x1 into the bottom block
    std::vector<T> xp(n);
    for (Index i = 0; i < n; ++i) xp[i] = x[ip[i]] / T(is[ip[i]]);
    std::span<const T> x1(xp.data(), n1), x2(xp.data() + n1, ns);
    std::vector<T> y(n, T(0));
    std::vector<T> b1(x1.begin(), x1.end());
    block_mult(lv, b1, trans);
    if (ns > 0) {
      std::vector<T> f2(n1);
      top_off.spmv(x2, f2, trans);
      for (Index i = 0; i < n1; ++i) y[i] = b1[i] + f2[i];
      block_solve(lv, f2, trans);
      for (Index i = 0; i < n1; ++i) f2[i] += x1[i];
      std::vector<T> e(ns), s(ns);
      bot_off.spmv(f2, e, trans);
      mult_from(lvl + 1, x2, s, trans, rank);
      for (Index i = 0; i < ns; ++i) y[n1 + i] = e[i] + s[i];
    } else {
      for (Index i = 0; i < n1; ++i) y[i] = b1[i];
    }
    for (Index i = 0; i < n; ++i) out[op[i]] = y[i] / T(os[op[i]]);
  }

  Index n_ = 0;
  std::vector<HifLevel<T>> levels_;
  std::optional<QrcpFactor<T>> final_;
  HifStats stats_;
};

template <class T>
double max_abs(const CompressedMatrix<T>& a) {
  double m = 0.0;
  for (const auto& x : a.values()) m = std::max(m, double(abs(x)));
  return m;
}

// Builds the multilevel factorization of a square matrix. T selects the
// factor precision (for example float for a double input).
template <class T, class U>
HifPrecond<T> factorize(const CompressedMatrix<U>& a, const Params& params) {
  static_assert(is_complex_v<U> == is_complex_v<T>, "input and factor realness must match");
  using R = real_t<T>;
  params.validate();
  if (a.nrows() != a.ncols()) throw std::invalid_argument("factorize: matrix must be square");
  const auto t0 = std::chrono::steady_clock::now();
  HifPrecond<T> out;
  const Index n_total = a.nrows();
  out.n_ = n_total;
  out.stats_.nnz_input = std::size_t(a.nnz());

  CompressedMatrix<T> cur = a.template cast<T>().convert(Orientation::row_major);
  std::vector<Index> nr = slice_counts(a, Orientation::row_major);
  std::vector<Index> nc = slice_counts(a, Orientation::col_major);
  std::optional<CompressedMatrix<T>> dense_input;
  double dense_scale = 1.0;  // entry scale of the matrix the dense block came from
  double prev_ratio = 0.0;

  for (int level = 1; cur.nrows() > 0; ++level) {
    if (level > params.max_levels) {
      dense_scale = max_abs(cur);
      dense_input = std::move(cur);
      break;
    }
    const Index n = cur.nrows();
    const auto pre = preprocess(cur, params);
    const bool ibrp = level >= 2 && (params.ibrp == IbrpMode::on ||
                                     (params.ibrp == IbrpMode::automatic &&
                                      prev_ratio >= params.ibrp_defer_trigger));
    const auto opt = LevelOptions::from(params, ibrp);
    std::vector<R> w(pre.row_scale.begin(), pre.row_scale.end());
    std::vector<R> v(pre.col_scale.begin(), pre.col_scale.end());
    auto lf = ilu_factorize<T>(cur, w, v, pre.row_perm, pre.col_perm, pre.n1, nr, nc, opt);

    LevelStats ls;
    ls.n = n;
    ls.n0 = pre.n1;
    ls.n1 = lf.n1;
    ls.static_deferred = pre.static_deferred;
    ls.dynamic_deferred = lf.defers;
    ls.row_swaps = lf.row_swaps;
    ls.col_swaps = lf.col_swaps;
    ls.ibrp = ibrp;
    ls.symmetric_mode = pre.symmetric_mode;
    ls.alpha_L = opt.alpha_L;
    ls.alpha_U = opt.alpha_U;
    ls.kappa_L = lf.kappa_L;
    ls.kappa_U = lf.kappa_U;
    ls.work = lf.work;

    if (lf.defer_ratio() >= 0.75) {
      ls.decision = LevelDecision::discard;
      out.stats_.levels.push_back(ls);
      out.stats_.work += ls.work;
      dense_scale = max_abs(cur);
      dense_input = std::move(cur);
      break;
    }
    const Index n1 = lf.n1, ns = n - n1;
    std::size_t schur_work = 0;
    auto S = compute_schur(cur, std::span<const R>(w), std::span<const R>(v), lf, nr, nc,
                           opt.alpha_L, opt.alpha_U, &schur_work);
    ls.work += schur_work;
    double scaled_max = 0.0;
    for (Index i = 0; i < n; ++i) {
      auto idx = cur.slice_indices(i);
      auto val = cur.slice_values(i);
      for (std::size_t t = 0; t < idx.size(); ++t)
        scaled_max = std::max(scaled_max, double(w[i]) * double(abs(val[t])) * double(v[idx[t]]));
    }
    ls.decision = level_decision(lf.n0, lf.defers, ns, std::size_t(S.nnz()), n_total, params);

    HifLevel<T> hl;
    hl.n = n;
    hl.n1 = n1;
    std::span<const Index> pp(lf.p), qq(lf.q);
    hl.E = extract_block(cur, std::span<const R>(w), std::span<const R>(v), pp.subspan(n1), qq.first(n1));
    hl.F = extract_block(cur, std::span<const R>(w), std::span<const R>(v), pp.first(n1), qq.subspan(n1));
    hl.L_B = std::move(lf.L_B);
    hl.U_B = std::move(lf.U_B);
    hl.d = std::move(lf.d);
    hl.p = lf.p;
    hl.q = lf.q;
    hl.w = std::move(w);
    hl.v = std::move(v);
    ls.nnz = hl.nnz();
    out.stats_.levels.push_back(ls);
    out.stats_.work += ls.work;
    out.levels_.push_back(std::move(hl));
    prev_ratio = lf.defer_ratio();

    if (ns == 0) break;
    std::vector<Index> nr2(ns), nc2(ns);
    for (Index i = 0; i < ns; ++i) {
      nr2[i] = nr[lf.p[n1 + i]];
      nc2[i] = nc[lf.q[n1 + i]];
    }
    nr = std::move(nr2);
    nc = std::move(nc2);
    if (ls.decision == LevelDecision::dense) {
      // S lives in the units of the scaled level matrix
      dense_scale = scaled_max;
      dense_input = std::move(S);
      break;
    }
    cur = std::move(S);
  }

  if (dense_input && dense_input->nrows() > 0) {
    const Index m = dense_input->nrows();
    std::vector<T> colmajor(std::size_t(m) * m, T(0));
    const auto& dm = *dense_input;
    for (Index i = 0; i < m; ++i) {
      auto idx = dm.slice_indices(i);
      auto val = dm.slice_values(i);
      for (std::size_t t = 0; t < idx.size(); ++t) colmajor[std::size_t(idx[t]) * m + i] = val[t];
    }
    auto f = qrcp<T>(m, m, std::move(colmajor));
    const double eps = double(epsilon<T>());
    const double krr = std::min(params.kappa_rrqr, std::pow(eps, -2.0 / 3.0));
    // pivots at rounding level of the source matrix are numerically zero
    // no matter how well conditioned the block looks on its own
    const double floor = 10.0 * double(m) * eps * dense_scale;
    f.rank_default = estimate_rank(f, krr, floor);
    f.rank_nullspace = estimate_rank(f, 1.0 / eps, floor);
    out.stats_.final_dim = m;
    out.stats_.rank_default = f.rank_default;
    out.stats_.rank_nullspace = f.rank_nullspace;
    out.stats_.dense_work = f.work;
    out.stats_.work += f.work;
    out.final_ = std::move(f);
  }

  std::size_t nnzf = 0;
  for (const auto& lv : out.levels_) nnzf += lv.nnz();
  nnzf += std::size_t(out.stats_.final_dim) * std::size_t(out.stats_.final_dim);
  out.stats_.nnz_factors = nnzf;
  out.stats_.nnz_ratio = a.nnz() == 0 ? 0.0 : double(nnzf) / double(a.nnz());
  out.stats_.factor_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace hif
