#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hif/types.hpp"

namespace hif {

// Incremental estimate of the extreme singular values of an upper
// triangular matrix grown one column at a time. Works in double precision
// regardless of the matrix scalar.
template <class T>
class IncrementalCondition {
 public:
  using W = std::conditional_t<is_complex_v<T>, std::complex<double>, double>;

  struct Proposal {
    double smax = 0, smin = 0;
    W smax_s{}, smax_c{}, smin_s{}, smin_c{};
  };

  std::size_t size() const { return xmax_.size(); }
  double smax() const { return smax_; }
  double smin() const { return smin_; }
  double condition() const { return smin_ > 0 ? smax_ / smin_ : INFINITY; }

  void reset() {
    xmax_.clear();
    xmin_.clear();
    smax_ = smin_ = 0;
  }

  // estimates after appending column [col; diag]; col has size() entries
  Proposal propose(std::span<const T> col, const T& diag) const {
    Proposal pr;
    const W rho = scalar_cast<W>(diag);
    if (xmax_.empty()) {
      pr.smax = pr.smin = std::abs(rho);
      pr.smax_c = pr.smin_c = W(1);
      return pr;
    }
    auto step = [&](const std::vector<W>& x, double sest, bool largest, double& snew, W& s,
                    W& c) {
      W alpha(0);
      for (std::size_t i = 0; i < x.size(); ++i) alpha += hif::conj(x[i]) * scalar_cast<W>(col[i]);
      const double a = sest * sest + abs2(alpha);
      const double cc = abs2(rho);
      const W b = hif::conj(alpha) * rho;
      const double mean = 0.5 * (a + cc);
      const double rad = std::sqrt(0.25 * (a - cc) * (a - cc) + abs2(b));
      const double lmax = mean + rad;
      const double lam = largest ? lmax : (lmax > 0 ? (sest * sest * cc) / lmax : 0.0);
      W z1 = b, z2 = W(lam - a);
      W y1 = W(lam - cc), y2 = hif::conj(b);
      if (abs2(y1) + abs2(y2) > abs2(z1) + abs2(z2)) {
        z1 = y1;
        z2 = y2;
      }
      double nz = std::sqrt(abs2(z1) + abs2(z2));
      if (nz == 0.0) {
        // M is a multiple of the identity
        z1 = W(1);
        z2 = W(0);
        nz = 1.0;
      }
      s = hif::conj(z1 / nz);
      c = hif::conj(z2 / nz);
      snew = std::sqrt(std::max(lam, 0.0));
    };
    step(xmax_, smax_, true, pr.smax, pr.smax_s, pr.smax_c);
    step(xmin_, smin_, false, pr.smin, pr.smin_s, pr.smin_c);
    return pr;
  }

  void commit(const Proposal& pr) {
    for (auto& v : xmax_) v *= pr.smax_s;
    for (auto& v : xmin_) v *= pr.smin_s;
    xmax_.push_back(pr.smax_c);
    xmin_.push_back(pr.smin_c);
    smax_ = pr.smax;
    smin_ = pr.smin;
  }

 private:
  std::vector<W> xmax_, xmin_;
  double smax_ = 0, smin_ = 0;
};

// Householder QR with column pivoting, S P = Q R. Storage is column-major
// with R in the upper triangle and the reflectors below it (unit leading
// entry implied).
template <class T>
struct QrcpFactor {
  Index m = 0;
  Index n = 0;
  std::vector<T> qr;
  std::vector<T> tau;
  std::vector<Index> perm;  // column k of QR is original column perm[k]
  Index rank_default = 0;
  Index rank_nullspace = 0;
  std::size_t work = 0;  // array entries touched while factoring

  T r(Index i, Index j) const { return qr[std::size_t(j) * m + i]; }
  Index kmax() const { return std::min(m, n); }

  // y <- Q^H y restricted to the first nref reflectors
  void apply_qh(std::span<T> y, Index nref) const {
    for (Index k = 0; k < nref; ++k) reflect(y, k, true);
  }
  // y <- Q y restricted to the first nref reflectors
  void apply_q(std::span<T> y, Index nref) const {
    for (Index k = nref - 1; k >= 0; --k) reflect(y, k, false);
  }

  // x = P[:,1:r] R_r^{-1} Q[:,1:r]^H y, or its adjoint
  void apply_pinv(std::span<const T> y, std::span<T> x, Index rank, bool adjoint = false) const {
    check_rank(rank);
    if (!adjoint) {
      if (Index(y.size()) != m || Index(x.size()) != n) throw std::invalid_argument("apply_pinv: size");
      std::vector<T> z(y.begin(), y.end());
      apply_qh(z, rank);
      for (Index i = rank - 1; i >= 0; --i) {
        T s = z[i];
        for (Index j = i + 1; j < rank; ++j) s -= r(i, j) * z[j];
        z[i] = s / r(i, i);
      }
      std::fill(x.begin(), x.end(), T(0));
      for (Index i = 0; i < rank; ++i) x[perm[i]] = z[i];
    } else {
      if (Index(y.size()) != n || Index(x.size()) != m) throw std::invalid_argument("apply_pinv: size");
      std::vector<T> z(m, T(0));
      for (Index i = 0; i < rank; ++i) {
        T s = y[perm[i]];
        for (Index j = 0; j < i; ++j) s -= hif::conj(r(j, i)) * z[j];
        z[i] = s / hif::conj(r(i, i));
      }
      apply_q(z, rank);
      std::copy(z.begin(), z.end(), x.begin());
    }
  }

  // x -> S_r x with S_r = Q [R(1:r,:); 0] P^T, or its adjoint
  void apply_truncated(std::span<const T> x, std::span<T> y, Index rank, bool adjoint = false) const {
    check_rank(rank);
    if (!adjoint) {
      if (Index(x.size()) != n || Index(y.size()) != m) throw std::invalid_argument("apply_truncated: size");
      std::vector<T> z(m, T(0));
      for (Index i = 0; i < rank; ++i) {
        T s(0);
        for (Index j = i; j < n; ++j) s += r(i, j) * x[perm[j]];
        z[i] = s;
      }
      apply_q(z, rank);
      std::copy(z.begin(), z.end(), y.begin());
    } else {
      if (Index(x.size()) != m || Index(y.size()) != n) throw std::invalid_argument("apply_truncated: size");
      std::vector<T> w(x.begin(), x.end());
      apply_qh(w, rank);
      std::fill(y.begin(), y.end(), T(0));
      for (Index j = 0; j < n; ++j) {
        T s(0);
        for (Index i = 0; i <= std::min(j, rank - 1); ++i) s += hif::conj(r(i, j)) * w[i];
        y[perm[j]] = s;
      }
    }
  }

 private:
  void check_rank(Index rank) const {
    if (rank < 0 || rank > kmax()) throw std::invalid_argument("rank out of range");
  }

  void reflect(std::span<T> y, Index k, bool adjoint) const {
    const T t = adjoint ? hif::conj(tau[k]) : tau[k];
    if (t == T(0)) return;
    const T* v = qr.data() + std::size_t(k) * m;
    T s = y[k];
    for (Index i = k + 1; i < m; ++i) s += hif::conj(v[i]) * y[i];
    s *= t;
    y[k] -= s;
    for (Index i = k + 1; i < m; ++i) y[i] -= v[i] * s;
  }
};

// QR with column pivoting on a column-major m x n array
template <class T>
QrcpFactor<T> qrcp(Index m, Index n, std::vector<T> a) {
  using R = real_t<T>;
  if (m < 0 || n < 0 || a.size() != std::size_t(m) * std::size_t(n))
    throw std::invalid_argument("qrcp: size mismatch");
  QrcpFactor<T> f;
  f.m = m;
  f.n = n;
  f.perm.resize(n);
  for (Index j = 0; j < n; ++j) f.perm[j] = j;
  const Index kmax = std::min(m, n);
  f.tau.assign(kmax, T(0));
  auto col = [&](Index j) { return a.data() + std::size_t(j) * m; };
  auto norm_from = [&](Index j, Index i0) {
    R s(0);
    const T* c = col(j);
    for (Index i = i0; i < m; ++i) s += abs2(c[i]);
    return std::sqrt(s);
  };
  std::vector<R> vn1(n), vn2(n);
  for (Index j = 0; j < n; ++j) vn1[j] = vn2[j] = norm_from(j, 0);
  const R tol3z = std::sqrt(epsilon<T>());

  for (Index k = 0; k < kmax; ++k) {
    Index pvt = k;
    for (Index j = k + 1; j < n; ++j)
      if (vn1[j] > vn1[pvt]) pvt = j;
    if (pvt != k) {
      std::swap_ranges(col(pvt), col(pvt) + m, col(k));
      std::swap(f.perm[pvt], f.perm[k]);
      vn1[pvt] = vn1[k];
      vn2[pvt] = vn2[k];
    }
    // reflector for a[k:m, k]
    T* c = col(k);
    const T alpha = c[k];
    const R xnorm = norm_from(k, k + 1);
    f.work += std::size_t(m - k);
    T tk(0);
    if (xnorm != R(0) || (is_complex_v<T> && std::imag(std::complex<R>(alpha)) != R(0))) {
      R beta = std::sqrt(abs2(alpha) + xnorm * xnorm);
      if (std::real(std::complex<R>(alpha)) >= R(0)) beta = -beta;
      tk = (T(beta) - alpha) / T(beta);
      const T scal = T(1) / (alpha - T(beta));
      for (Index i = k + 1; i < m; ++i) c[i] *= scal;
      c[k] = T(beta);
    }
    f.tau[k] = tk;
    if (tk != T(0)) {
      const T ct = hif::conj(tk);
      for (Index j = k + 1; j < n; ++j) {
        T* cj = col(j);
        T s = cj[k];
        for (Index i = k + 1; i < m; ++i) s += hif::conj(c[i]) * cj[i];
        s *= ct;
        cj[k] -= s;
        for (Index i = k + 1; i < m; ++i) cj[i] -= c[i] * s;
      }
      f.work += 2 * std::size_t(n - k - 1) * std::size_t(m - k);
    }
    for (Index j = k + 1; j < n; ++j) {
      if (vn1[j] == R(0)) continue;
      R temp = abs(col(j)[k]) / vn1[j];
      temp = std::max(R(0), (R(1) + temp) * (R(1) - temp));
      const R ratio = vn1[j] / vn2[j];
      ++f.work;
      if (temp * ratio * ratio <= tol3z) {
        vn1[j] = vn2[j] = norm_from(j, k + 1);
        f.work += std::size_t(m - k - 1);
      } else {
        vn1[j] *= std::sqrt(temp);
      }
    }
  }
  f.qr = std::move(a);
  return f;
}

// Largest r such that the estimated condition number of R(1:r,1:r) stays
// strictly below kappa and every |r_ii| exceeds abs_tol; scanning stops at
// the first failure.
template <class T>
Index estimate_rank(const QrcpFactor<T>& f, double kappa, double abs_tol = 0.0) {
  const Index kmax = f.kmax();
  if (kmax == 0 || !(double(abs(f.r(0, 0))) > abs_tol)) return 0;
  IncrementalCondition<T> ice;
  ice.commit(ice.propose({}, f.r(0, 0)));
  Index rank = 1;
  std::vector<T> colbuf;
  for (Index i = 1; i < kmax; ++i) {
    colbuf.resize(i);
    for (Index j = 0; j < i; ++j) colbuf[j] = f.r(j, i);
    const auto pr = ice.propose(colbuf, f.r(i, i));
    if (!(pr.smin > 0.0) || !(pr.smax < kappa * pr.smin)) break;
    if (!(double(abs(f.r(i, i))) > abs_tol)) break;
    ice.commit(pr);
    rank = i + 1;
  }
  return rank;
}

}  // namespace hif
