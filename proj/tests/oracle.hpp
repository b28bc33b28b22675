// Dense reference computations and problem generators for the tests. These
// are independent of the library algorithms (Eigen SVD / LU).
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <random>
#include <vector>

#include "hif/compressed_matrix.hpp"

namespace oracle {

using hif::Index;

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
Mat<T> dense(const hif::CompressedMatrix<T>& a) {
  Mat<T> m = Mat<T>::Zero(a.nrows(), a.ncols());
  for (Index i = 0; i < a.primary_dim(); ++i) {
    auto idx = a.slice_indices(i);
    auto val = a.slice_values(i);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      if (a.is_row_major())
        m(i, idx[t]) = val[t];
      else
        m(idx[t], i) = val[t];
    }
  }
  return m;
}

template <class T>
hif::CompressedMatrix<T> sparse(const Mat<T>& m, double drop = 0.0,
                                hif::Orientation o = hif::Orientation::row_major) {
  std::vector<hif::Triplet<T>> t;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > drop) t.push_back({i, j, m(i, j)});
  return hif::CompressedMatrix<T>::from_triplets(Index(m.rows()), Index(m.cols()), t, o);
}

template <class T>
Vec<T> vec(const std::vector<T>& x) {
  return Eigen::Map<const Vec<T>>(x.data(), Index(x.size()));
}

template <class T>
std::vector<T> stdvec(const Vec<T>& x) {
  return std::vector<T>(x.data(), x.data() + x.size());
}

template <class T>
Mat<T> pinv(const Mat<T>& a, double rel = 1e-10) {
  Eigen::JacobiSVD<Mat<T>> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? double(s(0)) : 0.0;
  Mat<T> sinv = Mat<T>::Zero(a.cols(), a.rows());
  for (Index i = 0; i < s.size(); ++i)
    if (double(s(i)) > rel * smax) sinv(i, i) = T(1.0 / double(s(i)));
  return svd.matrixV() * sinv * svd.matrixU().adjoint();
}

template <class T>
Eigen::VectorXd singular_values(const Mat<T>& a) {
  Eigen::JacobiSVD<Mat<T>> svd(a);
  return svd.singularValues().template cast<double>();
}

template <class T>
T random_scalar(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  if constexpr (hif::is_complex_v<T>)
    return T(nd(rng), nd(rng));
  else
    return T(nd(rng));
}

template <class T>
Mat<T> random_dense(Index m, Index n, std::mt19937_64& rng) {
  Mat<T> a(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) a(i, j) = random_scalar<T>(rng);
  return a;
}

// random orthogonal/unitary factors and prescribed singular values
template <class T>
Mat<T> with_singular_values(const std::vector<double>& sv, std::mt19937_64& rng) {
  const Index n = Index(sv.size());
  Eigen::HouseholderQR<Mat<T>> q1(random_dense<T>(n, n, rng)), q2(random_dense<T>(n, n, rng));
  Mat<T> U = q1.householderQ(), V = q2.householderQ();
  Mat<T> S = Mat<T>::Zero(n, n);
  for (Index i = 0; i < n; ++i) S(i, i) = T(sv[i]);
  return U * S * V.adjoint();
}

template <class T>
Vec<T> random_vec(Index n, std::mt19937_64& rng) {
  Vec<T> v(n);
  for (Index i = 0; i < n; ++i) v(i) = random_scalar<T>(rng);
  return v;
}

// 5-point Laplacian on an nx x ny grid. Neumann uses the graph Laplacian
// (row sums zero, null space = constants).
inline hif::CompressedMatrix<double> laplace2d(Index nx, Index ny, bool neumann = false) {
  std::vector<hif::Triplet<double>> t;
  auto id = [&](Index i, Index j) { return j * nx + i; };
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      const Index r = id(i, j);
      double diag = neumann ? 0.0 : 4.0;
      const Index di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        const Index a = i + di[k], b = j + dj[k];
        if (a < 0 || a >= nx || b < 0 || b >= ny) continue;
        t.push_back({r, id(a, b), -1.0});
        if (neumann) diag += 1.0;
      }
      t.push_back({r, r, diag});
    }
  return hif::CompressedMatrix<double>::from_triplets(nx * ny, nx * ny, t);
}

// 7-point -Laplacian (Dirichlet) minus shift*I on an n^3 grid
template <class T>
hif::CompressedMatrix<T> laplace3d_shifted(Index n, T shift) {
  std::vector<hif::Triplet<T>> t;
  auto id = [&](Index i, Index j, Index k) { return (k * n + j) * n + i; };
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        const Index r = id(i, j, k);
        t.push_back({r, r, T(6.0) - shift});
        if (i > 0) t.push_back({r, id(i - 1, j, k), T(-1.0)});
        if (i + 1 < n) t.push_back({r, id(i + 1, j, k), T(-1.0)});
        if (j > 0) t.push_back({r, id(i, j - 1, k), T(-1.0)});
        if (j + 1 < n) t.push_back({r, id(i, j + 1, k), T(-1.0)});
        if (k > 0) t.push_back({r, id(i, j, k - 1), T(-1.0)});
        if (k + 1 < n) t.push_back({r, id(i, j, k + 1), T(-1.0)});
      }
  return hif::CompressedMatrix<T>::from_triplets(n * n * n, n * n * n, t);
}

// 5-point Laplacian minus a (complex) shift, 2D Dirichlet
template <class T>
hif::CompressedMatrix<T> laplace2d_shifted(Index nx, T shift) {
  const auto a = laplace2d(nx, nx);
  std::vector<hif::Triplet<T>> t;
  for (Index i = 0; i < a.nrows(); ++i) {
    auto idx = a.slice_indices(i);
    auto val = a.slice_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k)
      t.push_back({i, idx[k], T(val[k]) - (idx[k] == i ? shift : T(0))});
  }
  return hif::CompressedMatrix<T>::from_triplets(a.nrows(), a.ncols(), t);
}

// random sparse matrix with about `per_row` off-diagonal entries per row and
// a diagonal of the given magnitude factor times the row sum
template <class T>
hif::CompressedMatrix<T> random_sparse(Index n, Index per_row, double diag_factor,
                                       std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> col(0, n - 1);
  std::vector<hif::Triplet<T>> t;
  for (Index i = 0; i < n; ++i) {
    double rs = 0;
    for (Index k = 0; k < per_row; ++k) {
      const Index j = col(rng);
      if (j == i) continue;
      const T v = random_scalar<T>(rng);
      rs += std::abs(v);
      t.push_back({i, j, v});
    }
    t.push_back({i, i, T(diag_factor * (rs + 1.0))});
  }
  return hif::CompressedMatrix<T>::from_triplets(n, n, t);
}

}  // namespace oracle
