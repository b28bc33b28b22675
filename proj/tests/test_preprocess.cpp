#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "hif/preprocess.hpp"
#include "oracle.hpp"

using namespace hif;

namespace {

bool is_perm(const std::vector<Index>& p) {
  std::vector<Index> s(p);
  std::sort(s.begin(), s.end());
  for (Index i = 0; i < Index(s.size()); ++i)
    if (s[i] != i) return false;
  return true;
}

// brute-force maximum of prod |a(perm[j], j)| over all permutations
double best_product(const oracle::Mat<double>& a) {
  const Index n = Index(a.rows());
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double p = 1.0;
    for (Index j = 0; j < n; ++j) p *= std::abs(a(perm[j], j));
    best = std::max(best, p);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Index bandwidth(const std::vector<std::vector<Index>>& adj, const std::vector<Index>& order) {
  std::vector<Index> pos(order.size());
  for (Index i = 0; i < Index(order.size()); ++i) pos[order[i]] = i;
  Index bw = 0;
  for (Index i = 0; i < Index(adj.size()); ++i)
    for (Index j : adj[i]) bw = std::max(bw, std::abs(pos[i] - pos[j]));
  return bw;
}

std::pair<std::vector<Index>, std::vector<Index>> csr_of(const std::vector<std::vector<Index>>& adj) {
  std::vector<Index> off{0}, ind;
  for (auto row : adj) {
    std::sort(row.begin(), row.end());
    ind.insert(ind.end(), row.begin(), row.end());
    off.push_back(Index(ind.size()));
  }
  return {off, ind};
}

// symbolic fill of Cholesky-style elimination in the given order
Index symbolic_fill(const std::vector<std::vector<Index>>& adj, const std::vector<Index>& order) {
  const Index n = Index(adj.size());
  std::vector<Index> pos(n);
  for (Index i = 0; i < n; ++i) pos[order[i]] = i;
  std::vector<std::vector<char>> g(n, std::vector<char>(n, 0));
  for (Index i = 0; i < n; ++i)
    for (Index j : adj[i]) g[pos[i]][pos[j]] = 1;
  Index fill = 0;
  for (Index k = 0; k < n; ++k)
    for (Index i = k + 1; i < n; ++i)
      if (g[i][k])
        for (Index j = k + 1; j < n; ++j)
          if (j != i && g[k][j] && !g[i][j]) {
            g[i][j] = 1;
            ++fill;
          }
  return fill;
}

}  // namespace

TEST_CASE("matching of an anti-diagonal matrix") {
  std::vector<Triplet<double>> t = {{0, 1, 2.0}, {1, 0, 3.0}};
  auto a = CompressedMatrix<double>::from_triplets(2, 2, t);
  auto m = equilibrate(a);
  CHECK(m.matched == 2);
  CHECK(m.row_of_col == std::vector<Index>{1, 0});
  CHECK(m.row_scale[0] * 2.0 * m.col_scale[1] == doctest::Approx(1.0));
  CHECK(m.row_scale[1] * 3.0 * m.col_scale[0] == doctest::Approx(1.0));
}

TEST_CASE("matching maximizes the diagonal product (brute-force oracle)") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = std::uniform_int_distribution<Index>(1, 7)(rng);
    oracle::Mat<double> d = oracle::Mat<double>::Zero(n, n);
    std::uniform_real_distribution<double> u(0, 1);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (u(rng) < 0.5) d(i, j) = std::exp(6.0 * (u(rng) - 0.5)) * (u(rng) < 0.5 ? -1 : 1);
    const double best = best_product(d);
    auto a = oracle::sparse<double>(d);
    auto m = equilibrate(a);
    REQUIRE(is_perm(m.row_of_col));
    if (best == 0.0) {
      CHECK(m.structurally_singular());
      continue;
    }
    CHECK(m.matched == n);
    double prod = 1.0;
    for (Index j = 0; j < n; ++j) prod *= std::abs(d(m.row_of_col[j], j));
    CHECK(prod == doctest::Approx(best).epsilon(1e-10));
    // scaled matrix: matched entries are one, all others at most one
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const double s = m.row_scale[i] * std::abs(d(i, j)) * m.col_scale[j];
        CHECK(s <= 1.0 + 1e-12);
        if (m.row_of_col[j] == i) CHECK(s == doctest::Approx(1.0));
      }
  }
}

TEST_CASE("structurally singular input still yields a permutation") {
  std::vector<Triplet<double>> t = {{0, 0, 1.0}, {1, 0, 1.0}, {2, 2, 4.0}};
  auto a = CompressedMatrix<double>::from_triplets(3, 3, t);
  auto m = equilibrate(a);
  CHECK(m.matched == 2);
  CHECK(is_perm(m.row_of_col));
  CHECK(m.col_scale[1] == 1.0);
}

TEST_CASE("scale symmetrization") {
  std::vector<double> w = {4.0, 1.0, 1e4}, v = {1.0, 1.0, 1.0};
  auto w1 = w, v1 = v;
  symmetrize_scaling(w1, v1, true, 1000.0);
  CHECK(w1[0] == doctest::Approx(2.0));
  CHECK(v1[0] == doctest::Approx(2.0));
  CHECK(w1[2] == doctest::Approx(100.0));
  auto w2 = w, v2 = v;
  symmetrize_scaling(w2, v2, false, 1000.0);
  CHECK(w2[0] == 4.0);  // ratio 4 is under beta
  CHECK(v2[0] == 1.0);
  CHECK(w2[2] == doctest::Approx(100.0));
  CHECK(v2[2] == doctest::Approx(100.0));
}

TEST_CASE("RCM recovers a band from a shuffled path") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 40;
    std::vector<Index> lab(n);
    std::iota(lab.begin(), lab.end(), 0);
    std::shuffle(lab.begin(), lab.end(), rng);
    std::vector<std::vector<Index>> adj(n);
    for (Index i = 0; i + 1 < n; ++i) {
      adj[lab[i]].push_back(lab[i + 1]);
      adj[lab[i + 1]].push_back(lab[i]);
    }
    auto [off, ind] = csr_of(adj);
    auto order = rcm_order(n, off, ind);
    REQUIRE(is_perm(order));
    CHECK(bandwidth(adj, order) == 1);
  }
}

TEST_CASE("RCM on a grid does not widen the natural bandwidth") {
  const Index nx = 9;
  auto a = oracle::laplace2d(nx, nx);
  std::vector<std::vector<Index>> adj(a.nrows());
  for (Index i = 0; i < a.nrows(); ++i)
    for (Index j : a.slice_indices(i))
      if (j != i) adj[i].push_back(j);
  std::mt19937_64 rng(8);
  std::vector<Index> shuffle(a.nrows());
  std::iota(shuffle.begin(), shuffle.end(), 0);
  std::shuffle(shuffle.begin(), shuffle.end(), rng);
  std::vector<std::vector<Index>> sh(a.nrows());
  std::vector<Index> inv(a.nrows());
  for (Index i = 0; i < a.nrows(); ++i) inv[shuffle[i]] = i;
  for (Index i = 0; i < a.nrows(); ++i)
    for (Index j : adj[i]) sh[inv[i]].push_back(inv[j]);
  auto [off, ind] = csr_of(sh);
  auto order = rcm_order(a.nrows(), off, ind);
  CHECK(is_perm(order));
  CHECK(bandwidth(sh, order) <= nx + 1);
}

TEST_CASE("RCM on an arrow matrix eliminates without fill") {
  const Index n = 15;
  std::vector<std::vector<Index>> adj(n);
  for (Index i = 1; i < n; ++i) {
    adj[0].push_back(i);
    adj[i].push_back(0);
  }
  auto [off, ind] = csr_of(adj);
  auto order = rcm_order(n, off, ind);
  REQUIRE(is_perm(order));
  const auto hub = Index(std::find(order.begin(), order.end(), 0) - order.begin());
  CHECK(hub >= n - 2);
  CHECK(symbolic_fill(adj, order) == 0);
  std::vector<Index> natural(n);
  std::iota(natural.begin(), natural.end(), 0);
  CHECK(symbolic_fill(adj, natural) == (n - 1) * (n - 2));
}

TEST_CASE("RCM handles disconnected graphs and isolated vertices") {
  std::vector<std::vector<Index>> adj(7);
  adj[1] = {2};
  adj[2] = {1};
  adj[4] = {5, 6};
  adj[5] = {4};
  adj[6] = {4};
  auto [off, ind] = csr_of(adj);
  CHECK(is_perm(rcm_order(7, off, ind)));
  CHECK(rcm_order(0, std::vector<Index>{0}, std::vector<Index>{}).empty());
}

TEST_CASE("static deferral moves tiny diagonals to the end, stably") {
  std::vector<Triplet<double>> t = {{0, 0, 1.0}, {1, 1, 1e-20}, {2, 2, 2.0}, {3, 3, 0.0},
                                    {3, 0, 1.0}, {4, 4, 3.0}};
  auto a = CompressedMatrix<double>::from_triplets(5, 5, t);
  std::vector<double> one(5, 1.0);
  std::vector<Index> p = {0, 1, 2, 3, 4}, q = p;
  const Index n1 = static_defer(a, one, one, p, q, 1e-12);
  CHECK(n1 == 3);
  CHECK(p == std::vector<Index>{0, 2, 4, 1, 3});
  CHECK(q == p);
}

TEST_CASE("preprocess picks the mode from pattern symmetry") {
  auto lap = oracle::laplace2d(6, 6);
  auto pre = preprocess(lap, Params{});
  CHECK(pre.symmetric_mode);
  CHECK(pre.n1 == lap.nrows());
  CHECK(pre.row_perm == pre.col_perm);
  CHECK(is_perm(pre.row_perm));
  for (Index i = 0; i < lap.nrows(); ++i) CHECK(pre.row_scale[i] == doctest::Approx(pre.col_scale[i]));

  // upper-triangular pattern plus a permuted diagonal: unsymmetric
  std::mt19937_64 rng(2);
  const Index n = 30;
  std::vector<Triplet<double>> t;
  for (Index i = 0; i < n; ++i) {
    t.push_back({(i + 7) % n, i, 5.0 + i});
    for (Index j = i + 1; j < n; j += 3) t.push_back({i, j, oracle::random_scalar<double>(rng)});
  }
  auto a = CompressedMatrix<double>::from_triplets(n, n, t);
  auto pu = preprocess(a, Params{});
  CHECK_FALSE(pu.symmetric_mode);
  CHECK(is_perm(pu.row_perm));
  CHECK(is_perm(pu.col_perm));
  CHECK(pu.unmatched == 0);
  CHECK(pu.static_deferred == 0);
  // the matched diagonal of the permuted scaled matrix is one
  for (Index k = 0; k < pu.n1; ++k) {
    const Index i = pu.row_perm[k], j = pu.col_perm[k];
    CHECK(pu.row_scale[i] * std::abs(a.coeff(i, j)) * pu.col_scale[j] == doctest::Approx(1.0));
  }
}
