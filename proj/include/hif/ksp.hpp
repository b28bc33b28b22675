#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hif/compressed_matrix.hpp"
#include "hif/hif.hpp"
#include "hif/qrcp.hpp"

namespace hif {

struct KspConfig {
  int restart = 30;
  double rtol = 1e-6;
  int maxit = 500;
  int nirs_start = 1;  // refinement sweeps in the first FGMRES cycle
  int nirs_inc = 1;    // added per restart
  int nirs_cap = 16;
  double hessenberg_cond_limit = 1e12;
  double null_tol = 1e-10;  // acceptance for ||A^H v|| / ||A||_F
  std::uint64_t seed = 20240229;

  void validate() const {
    if (restart < 1) throw std::invalid_argument("restart must be positive");
    if (!(rtol > 0)) throw std::invalid_argument("rtol must be positive");
    if (maxit < 1) throw std::invalid_argument("maxit must be positive");
    if (nirs_start < 1 || nirs_inc < 0 || nirs_cap < nirs_start)
      throw std::invalid_argument("invalid refinement schedule");
    if (!(hessenberg_cond_limit > 1)) throw std::invalid_argument("hessenberg_cond_limit must exceed 1");
  }
};

struct SolveStats {
  int iterations = 0;
  int restarts = 0;
  double relres = 0;
  bool converged = false;
  std::string reason;
  std::vector<double> history;  // relative residuals, iterations + 1 entries
  double seconds = 0;
};

template <class T>
struct KspResult {
  std::vector<T> x;
  SolveStats stats;
};

enum class NullSide { left, right };

// Raised by pipit when a null-space basis cannot be completed.
struct NullSpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
struct NullBasis {
  std::vector<std::vector<T>> vectors;  // orthonormal
  std::vector<double> residuals;        // ||op^H v|| / ||A||_F per vector
  bool complete = false;
  int iterations = 0;
};

template <class T>
struct PipitResult {
  std::vector<T> x;
  SolveStats stats;  // of the projected GMRES solve
  NullBasis<T> left;
  NullBasis<T> right;
  Index null_dim = 0;
};

namespace ksp_detail {

template <class T>
real_t<T> norm2(std::span<const T> x) {
  real_t<T> s(0);
  for (const auto& v : x) s += abs2(v);
  return std::sqrt(s);
}

template <class T>
T dot(std::span<const T> x, std::span<const T> y) {  // x^H y
  T s(0);
  for (std::size_t i = 0; i < x.size(); ++i) s += hif::conj(x[i]) * y[i];
  return s;
}

// Givens rotation zeroing b in (a, b); returns (c, s) with c real
template <class T>
void givens(const T& a, const T& b, real_t<T>& c, T& s) {
  const auto aa = abs(a), bb = abs(b);
  if (bb == 0) {
    c = 1;
    s = T(0);
  } else if (aa == 0) {
    c = 0;
    s = hif::conj(b) / bb;
  } else {
    const auto nrm = std::hypot(aa, bb);
    c = aa / nrm;
    s = (a / aa) * hif::conj(b) / nrm;
  }
}

// apply [c s; -conj(s) c] to (x, y)
template <class T>
void rotate(T& x, T& y, real_t<T> c, const T& s) {
  const T t = c * x + s * y;
  y = -hif::conj(s) * x + c * y;
  x = t;
}

// Restarted GMRES with modified Gram-Schmidt. precond(v, z, cycle) writes
// z = M_cycle v. With flexible set the preconditioned vectors are stored.
template <class T, class ApplyA, class ApplyM>
KspResult<T> gmres_mgs(ApplyA&& apply_a, ApplyM&& precond, std::span<const T> b,
                       std::span<const T> x0, const KspConfig& cfg, bool flexible) {
  using R = real_t<T>;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  KspResult<T> res;
  res.x.assign(n, T(0));
  if (!x0.empty()) {
    if (x0.size() != n) throw std::invalid_argument("initial guess length mismatch");
    std::copy(x0.begin(), x0.end(), res.x.begin());
  }
  auto& st = res.stats;
  const R bnorm = norm2(b);
  auto finish = [&]() {
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(res);
  };
  if (bnorm == R(0)) {
    std::fill(res.x.begin(), res.x.end(), T(0));
    st.converged = true;
    st.reason = "zero right-hand side";
    st.history.push_back(0.0);
    return finish();
  }
  const int m = cfg.restart;
  std::vector<T> r(n), w(n), z(n);
  apply_a(std::span<const T>(res.x), std::span<T>(w));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
  R beta = norm2<T>(r);
  st.relres = double(beta / bnorm);
  st.history.push_back(st.relres);
  if (st.relres <= cfg.rtol) {
    st.converged = true;
    st.reason = "initial guess";
    return finish();
  }
  std::vector<std::vector<T>> V(m + 1, std::vector<T>(n)), Z(flexible ? m : 0, std::vector<T>(n));
  std::vector<T> H(std::size_t(m + 1) * m), g(m + 1), sn(m);
  std::vector<R> cs(m);
  auto h = [&](int i, int j) -> T& { return H[std::size_t(j) * (m + 1) + i]; };
  int cycle = 0;
  while (st.iterations < cfg.maxit) {
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), T(0));
    g[0] = beta;
    int jm = 0;
    bool breakdown = false;
    for (int j = 0; j < m && st.iterations < cfg.maxit; ++j) {
      std::span<T> zj = flexible ? std::span<T>(Z[j]) : std::span<T>(z);
      precond(std::span<const T>(V[j]), zj, cycle);
      apply_a(std::span<const T>(zj), std::span<T>(w));
      for (int i = 0; i <= j; ++i) {
        h(i, j) = dot<T>(V[i], w);
        for (std::size_t k = 0; k < n; ++k) w[k] -= h(i, j) * V[i][k];
      }
      const R hn = norm2<T>(w);
      h(j + 1, j) = hn;
      for (int i = 0; i < j; ++i) rotate(h(i, j), h(i + 1, j), cs[i], sn[i]);
      givens(h(j, j), h(j + 1, j), cs[j], sn[j]);
      rotate(h(j, j), h(j + 1, j), cs[j], sn[j]);
      rotate(g[j], g[j + 1], cs[j], sn[j]);
      ++st.iterations;
      jm = j + 1;
      const double est = double(abs(g[j + 1]) / bnorm);
      st.history.push_back(est);
      if (hn <= R(10) * epsilon<T>() * bnorm) {
        breakdown = true;
        break;
      }
      for (std::size_t k = 0; k < n; ++k) V[j + 1][k] = w[k] / hn;
      if (est <= cfg.rtol) break;
    }
    // back substitution
    std::vector<T> y(jm);
    for (int i = jm - 1; i >= 0; --i) {
      T s = g[i];
      for (int k = i + 1; k < jm; ++k) s -= h(i, k) * y[k];
      y[i] = h(i, i) == T(0) ? T(0) : s / h(i, i);
    }
    if (flexible) {
      for (int k = 0; k < jm; ++k)
        for (std::size_t i = 0; i < n; ++i) res.x[i] += y[k] * Z[k][i];
    } else {
      std::fill(w.begin(), w.end(), T(0));
      for (int k = 0; k < jm; ++k)
        for (std::size_t i = 0; i < n; ++i) w[i] += y[k] * V[k][i];
      precond(std::span<const T>(w), std::span<T>(z), cycle);
      for (std::size_t i = 0; i < n; ++i) res.x[i] += z[i];
    }
    apply_a(std::span<const T>(res.x), std::span<T>(w));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    beta = norm2<T>(r);
    st.relres = double(beta / bnorm);
    st.history.back() = st.relres;
    if (st.relres <= cfg.rtol) {
      st.converged = true;
      st.reason = "converged";
      return finish();
    }
    if (breakdown) {
      st.reason = "breakdown";
      return finish();
    }
    if (st.iterations >= cfg.maxit) break;
    ++cycle;
    ++st.restarts;
  }
  st.reason = "maximum iterations";
  return finish();
}

// Restarted flexible GMRES with Householder Arnoldi. A cycle stops when the
// incremental condition estimate of the triangularized Hessenberg exceeds
// cfg.hessenberg_cond_limit; the offending column is dropped and the solve
// ends. For a singular A the residual is then the least-squares one when the
// preconditioner's null space is N(A^H).
template <class T, class ApplyA, class ApplyM>
KspResult<T> fgmres_householder(ApplyA&& apply_a, ApplyM&& precond, std::span<const T> b,
                                const KspConfig& cfg) {
  using R = real_t<T>;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  KspResult<T> res;
  res.x.assign(n, T(0));
  auto& st = res.stats;
  const R bnorm = norm2(b);
  auto finish = [&]() {
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(res);
  };
  if (bnorm == R(0)) {
    st.converged = true;
    st.reason = "zero right-hand side";
    st.history.push_back(0.0);
    return finish();
  }
  const int m = std::min<int>(cfg.restart, int(n));
  std::vector<T> r(b.begin(), b.end()), z(n), vj(n);
  st.relres = 1.0;
  st.history.push_back(1.0);
  std::vector<std::vector<T>> U(m + 1, std::vector<T>(n)), Z(m, std::vector<T>(n));
  std::vector<R> unorm2(m + 1);
  std::vector<T> H(std::size_t(m + 1) * m), g(m + 1), sn(m), col;
  std::vector<R> cs(m);
  auto h = [&](int i, int j) -> T& { return H[std::size_t(j) * (m + 1) + i]; };
  // z <- P_j z with P_j = I - 2 u u^H / |u|^2
  auto reflect = [&](int j, std::span<T> v) {
    if (unorm2[j] == R(0)) return;
    T s(0);
    for (std::size_t i = j; i < n; ++i) s += hif::conj(U[j][i]) * v[i];
    s *= T(R(2) / unorm2[j]);
    for (std::size_t i = j; i < n; ++i) v[i] -= s * U[j][i];
  };
  int cycle = 0;
  bool stop = false;
  while (!stop && st.iterations < cfg.maxit) {
    std::copy(r.begin(), r.end(), z.begin());
    IncrementalCondition<T> ice;
    int jm = 0;
    bool small = false;
    for (int j = 0; j <= m; ++j) {
      // reflector zeroing z[j+1:]
      R tail(0);
      for (std::size_t i = j; i < n; ++i) tail += abs2(z[i]);
      tail = std::sqrt(tail);
      std::fill(U[j].begin(), U[j].end(), T(0));
      T alpha(0);
      if (tail > R(0)) {
        const T sgn = unit_sign(z[j]);
        alpha = -sgn * tail;
        for (std::size_t i = j; i < n; ++i) U[j][i] = z[i];
        U[j][j] -= alpha;
        R un(0);
        for (std::size_t i = j; i < n; ++i) un += abs2(U[j][i]);
        unorm2[j] = un;
      } else {
        unorm2[j] = 0;
      }
      if (j == 0) {
        g.assign(m + 1, T(0));
        g[0] = alpha;
      } else {
        const int c = j - 1;
        for (int i = 0; i < j; ++i) h(i, c) = z[i];
        h(j, c) = alpha;
        for (int i = 0; i < c; ++i) rotate(h(i, c), h(i + 1, c), cs[i], sn[i]);
        givens(h(c, c), h(c + 1, c), cs[c], sn[c]);
        rotate(h(c, c), h(c + 1, c), cs[c], sn[c]);
        col.assign(c, T(0));
        for (int i = 0; i < c; ++i) col[i] = h(i, c);
        const auto pr = ice.propose(col, h(c, c));
        if (!(pr.smin > 0) || pr.smax > cfg.hessenberg_cond_limit * pr.smin) {
          stop = true;
          st.reason = "ill-conditioned Hessenberg";
          break;
        }
        ice.commit(pr);
        T g1 = g[c + 1];
        rotate(g[c], g1, cs[c], sn[c]);
        g[c + 1] = g1;
        ++st.iterations;
        jm = j;
        const double est = double(abs(g[c + 1]) / bnorm);
        st.history.push_back(est);
        if (est <= cfg.rtol || abs(alpha) <= R(10) * epsilon<T>() * bnorm) {
          small = true;
          break;
        }
        if (st.iterations >= cfg.maxit) break;
      }
      if (j == m) break;
      // v_j = P_0 ... P_j e_j
      std::fill(vj.begin(), vj.end(), T(0));
      vj[j] = T(1);
      for (int i = j; i >= 0; --i) reflect(i, vj);
      precond(std::span<const T>(vj), std::span<T>(Z[j]), cycle);
      apply_a(std::span<const T>(Z[j]), std::span<T>(z));
      for (int i = 0; i <= j; ++i) reflect(i, z);
    }
    std::vector<T> y(jm);
    for (int i = jm - 1; i >= 0; --i) {
      T s = g[i];
      for (int k = i + 1; k < jm; ++k) s -= h(i, k) * y[k];
      y[i] = s / h(i, i);
    }
    for (int k = 0; k < jm; ++k)
      for (std::size_t i = 0; i < n; ++i) res.x[i] += y[k] * Z[k][i];
    apply_a(std::span<const T>(res.x), std::span<T>(z));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - z[i];
    st.relres = double(norm2<T>(r) / bnorm);
    st.history.back() = st.relres;
    if (st.relres <= cfg.rtol) {
      st.converged = true;
      st.reason = "converged";
      return finish();
    }
    if (jm == 0) {
      if (st.reason.empty()) st.reason = "stagnation";
      return finish();
    }
    if (small && st.reason.empty()) {
      st.reason = "breakdown";
      return finish();
    }
    if (stop) return finish();
    ++cycle;
    ++st.restarts;
  }
  if (st.reason.empty()) st.reason = "maximum iterations";
  return finish();
}

template <class T>
std::vector<T> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<T> x(n);
  for (auto& v : x) {
    if constexpr (is_complex_v<T>)
      v = T(real_t<T>(nd(rng)), real_t<T>(nd(rng)));
    else
      v = T(nd(rng));
  }
  return x;
}

// orthogonalize x against an orthonormal set, two passes
template <class T>
void orthogonalize(std::vector<T>& x, const std::vector<std::vector<T>>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) {
      const T c = dot<T>(q, x);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * q[i];
    }
}

template <class T>
bool is_hermitian(const CompressedMatrix<T>& a) {
  if (a.nrows() != a.ncols()) return false;
  const auto h = a.adjoint().convert(a.orientation());
  if (h.nnz() != a.nnz()) return false;
  for (Index i = 0; i < a.primary_dim(); ++i) {
    auto i1 = a.slice_indices(i), i2 = h.slice_indices(i);
    auto v1 = a.slice_values(i), v2 = h.slice_values(i);
    if (!std::equal(i1.begin(), i1.end(), i2.begin(), i2.end())) return false;
    if (!std::equal(v1.begin(), v1.end(), v2.begin(), v2.end())) return false;
  }
  return true;
}

}  // namespace ksp_detail

// Right-preconditioned restarted GMRES with M^g from the preconditioner.
template <class T, class P>
KspResult<T> gmres(const CompressedMatrix<T>& a, std::span<const T> b, const HifPrecond<P>& m,
                   const KspConfig& cfg = {}, std::span<const T> x0 = {}, int rnk = 0) {
  if (a.nrows() != a.ncols() || Index(b.size()) != a.nrows() || m.nrows() != a.nrows())
    throw std::invalid_argument("gmres: dimension mismatch");
  return ksp_detail::gmres_mgs<T>(
      [&](std::span<const T> x, std::span<T> y) { a.spmv(x, y); },
      [&](std::span<const T> v, std::span<T> z, int) {
        const auto s = m.solve(v, false, rnk);
        std::copy(s.begin(), s.end(), z.begin());
      },
      b, x0, cfg, false);
}

// Unpreconditioned restarted GMRES (reference path for tests and tooling).
template <class T>
KspResult<T> gmres_plain(const CompressedMatrix<T>& a, std::span<const T> b, const KspConfig& cfg = {}) {
  return ksp_detail::gmres_mgs<T>(
      [&](std::span<const T> x, std::span<T> y) { a.spmv(x, y); },
      [](std::span<const T> v, std::span<T> z, int) { std::copy(v.begin(), v.end(), z.begin()); },
      b, {}, cfg, false);
}

// Flexible GMRES whose preconditioner is HIFIR; the number of refinement
// sweeps grows by cfg.nirs_inc per restart up to cfg.nirs_cap.
template <class T, class P>
KspResult<T> fgmres_hifir(const CompressedMatrix<T>& a, std::span<const T> b, const HifPrecond<P>& m,
                          const KspConfig& cfg = {}, bool trans = false, int rnk = -1) {
  if (a.nrows() != a.ncols() || Index(b.size()) != a.nrows() || m.nrows() != a.nrows())
    throw std::invalid_argument("fgmres_hifir: dimension mismatch");
  return ksp_detail::fgmres_householder<T>(
      [&](std::span<const T> x, std::span<T> y) { a.spmv(x, y, trans); },
      [&](std::span<const T> v, std::span<T> z, int cycle) {
        const int nirs = std::min(cfg.nirs_cap, cfg.nirs_start + cycle * cfg.nirs_inc);
        const auto s = m.hifir(a, v, nirs, trans, rnk);
        std::copy(s.begin(), s.end(), z.begin());
      },
      b, cfg);
}

// Orthonormal basis of the left (N(A^H)) or right (N(A)) null space.
// With op = A^H (left) or A (right), a random b gives the consistent system
// op x = op b; FGMRES-HIFIR solves it and b - x lies in N(op). Reading the
// null vector off a least-squares residual of A x = b instead stalls: A G is
// an oblique projector for a HIF operator G, so the flexible Krylov space
// stops growing before the residual reaches N(A^H).
template <class T, class P>
NullBasis<T> nullspace_basis(const CompressedMatrix<T>& a, const HifPrecond<P>& m, Index count,
                             NullSide side, const KspConfig& cfg = {}) {
  using R = real_t<T>;
  NullBasis<T> out;
  if (count < 0) throw std::invalid_argument("null-space dimension must be nonnegative");
  const std::size_t n = std::size_t(a.nrows());
  const bool op_trans = side == NullSide::left;
  const R anorm = a.frobenius_norm();
  if (count == 0) {
    out.complete = true;
    return out;
  }
  KspConfig inner = cfg;
  inner.rtol = std::min(cfg.rtol, cfg.null_tol);
  std::vector<T> rhs(n), v(n), check(n);
  const int max_attempts = 3 * int(count) + 3;
  for (int attempt = 0; attempt < max_attempts && Index(out.vectors.size()) < count; ++attempt) {
    auto b = ksp_detail::random_vector<T>(n, cfg.seed + 7919u * std::uint64_t(attempt));
    ksp_detail::orthogonalize(b, out.vectors);
    // refine past the acceptance tolerance: whatever is left of the null
    // component in a projected right-hand side caps later residuals
    std::vector<T> best;
    double best_q = INFINITY;
    for (int refine = 0; refine < 3; ++refine) {
      const R bn = ksp_detail::norm2<T>(b);
      if (bn == R(0)) break;
      for (auto& x : b) x /= bn;
      a.spmv(b, rhs, op_trans);
      auto sol = fgmres_hifir(a, std::span<const T>(rhs), m, inner, op_trans, -1);
      out.iterations += sol.stats.iterations;
      for (std::size_t i = 0; i < n; ++i) v[i] = b[i] - sol.x[i];
      ksp_detail::orthogonalize(v, out.vectors);
      const R vn = ksp_detail::norm2<T>(v);
      // nothing left once the solve reproduces b: no further null direction
      if (!(double(vn) > 1e3 * inner.rtol)) break;
      for (auto& x : v) x /= vn;
      a.spmv(v, check, op_trans);
      const double q = anorm == R(0) ? 0.0 : double(ksp_detail::norm2<T>(check) / anorm);
      if (q < best_q) {
        best_q = q;
        best = v;
      }
      if (q <= 100 * epsilon<T>()) break;
      b = v;
    }
    if (best_q <= cfg.null_tol) {
      out.vectors.push_back(std::move(best));
      out.residuals.push_back(best_q);
    }
  }
  out.complete = Index(out.vectors.size()) == count;
  return out;
}

// Pseudoinverse solution of a (possibly inconsistent) singular system:
// remove the left null-space component of b, solve with GMRES, then remove
// the right null-space component of the solution. null_dim_hint < 0 uses the
// nullity estimated by the final dense factor of the preconditioner. Throws
// NullSpaceError when either basis comes up short.
template <class T, class P>
PipitResult<T> pipit(const CompressedMatrix<T>& a, std::span<const T> b, const HifPrecond<P>& m,
                     Index null_dim_hint = -1, const KspConfig& cfg = {}) {
  if (a.nrows() != a.ncols() || Index(b.size()) != a.nrows())
    throw std::invalid_argument("pipit: dimension mismatch");
  PipitResult<T> out;
  const Index k = null_dim_hint >= 0 ? null_dim_hint : m.null_dim_estimate();
  out.null_dim = k;
  auto require = [k](const NullBasis<T>& nb, const char* side) {
    if (!nb.complete)
      throw NullSpaceError(std::string("pipit: ") + side + " null space: found " +
                           std::to_string(nb.vectors.size()) + " of " + std::to_string(k) +
                           " vectors after " + std::to_string(nb.iterations) + " iterations");
  };
  out.left = nullspace_basis(a, m, k, NullSide::left, cfg);
  require(out.left, "left");
  std::vector<T> bp(b.begin(), b.end());
  ksp_detail::orthogonalize(bp, out.left.vectors);
  if (k > 0 && ksp_detail::is_hermitian(a))
    out.right = out.left;
  else
    out.right = nullspace_basis(a, m, k, NullSide::right, cfg);
  require(out.right, "right");
  // the right null directions are removed from every preconditioned vector;
  // a factor that misses the rank deficiency puts most of its gain there
  auto sol = ksp_detail::gmres_mgs<T>(
      [&](std::span<const T> x, std::span<T> y) { a.spmv(x, y); },
      [&](std::span<const T> v, std::span<T> z, int) {
        auto s = m.solve(v, false, 0);
        ksp_detail::orthogonalize(s, out.right.vectors);
        std::copy(s.begin(), s.end(), z.begin());
      },
      std::span<const T>(bp), {}, cfg, false);
  out.x = std::move(sol.x);
  ksp_detail::orthogonalize(out.x, out.right.vectors);
  out.stats = std::move(sol.stats);
  return out;
}

template <class T>
PipitResult<T> pipit(const CompressedMatrix<T>& a, std::span<const T> b, Index null_dim_hint = -1,
                     const KspConfig& cfg = {}, const Params& params = {}) {
  const auto m = factorize<T>(a, params);
  return pipit(a, b, m, null_dim_hint, cfg);
}

}  // namespace hif
