#include <doctest.h>

#include <complex>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "../tools/cli.hpp"
#include "hif/ksp.hpp"
#include "hif/matrix_market.hpp"
#include "oracle.hpp"

using namespace hif;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("hif_cli_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

template <class T>
std::vector<T> parse_vector(const std::string& s) {
  std::istringstream in(s);
  return read_matrix_market_vector<T>(in);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

template <class T>
double true_relres(const CompressedMatrix<T>& a, const std::vector<T>& x, const std::vector<T>& b) {
  return (oracle::vec(b) - oracle::dense(a) * oracle::vec(x)).norm() / oracle::vec(b).norm();
}

}  // namespace

TEST_CASE("identity system converges in one iteration to the ones vector") {
  TempDir tmp;
  const auto mpath = tmp.file("eye.mtx");
  std::vector<Triplet<double>> t;
  for (Index i = 0; i < 7; ++i) t.push_back({i, i, 1.0});
  write_matrix_market(mpath, CompressedMatrix<double>::from_triplets(7, 7, t));
  const auto spath = tmp.file("stats.json");
  auto r = run_cli({mpath, "--stats", spath});
  REQUIRE(r.code == 0);
  const auto x = parse_vector<double>(r.out);
  for (double v : x) CHECK(std::abs(v - 1.0) <= 1e-14);
  const auto js = load_json(spath);
  CHECK(js["solve"]["iterations"] == 1);
  CHECK(js["exit_code"] == 0);
}

TEST_CASE("stats document layout and recomputable residual") {
  TempDir tmp;
  const auto a = oracle::laplace2d(12, 12);
  const auto mpath = tmp.file("lap.mtx");
  write_matrix_market(mpath, a);
  for (const std::string solver : {"gmres", "fgmres", "pipit"}) {
    CAPTURE(solver);
    const auto spath = tmp.file(solver + ".json");
    const auto xpath = tmp.file(solver + ".sol");
    auto r = run_cli({mpath, "--solver", solver, "--rtol", "1e-10", "--stats", spath, "-o", xpath});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const auto js = load_json(spath);
    CHECK(js["schema"] == "hif-run-stats");
    CHECK(js["version"] == 1);
    CHECK(js["solver"] == solver);
    CHECK(js["matrix"]["n"] == 144);
    CHECK(js["matrix"]["nnz"] == a.nnz());
    const auto& f = js["factorization"];
    REQUIRE(f["levels"].is_array());
    CHECK(f["levels"].size() >= 1);
    for (const auto& l : f["levels"])
      for (const char* key : {"n", "n1", "static_deferred", "dynamic_deferred", "row_swaps",
                              "col_swaps", "decision", "nnz"})
        CHECK(l.contains(key));
    CHECK(f["rank_default"].get<Index>() <= f["final_dim"].get<Index>());
    CHECK(f["rank_nullspace"].get<Index>() <= f["final_dim"].get<Index>());
    CHECK(f["nnz_ratio"].get<double>() > 0);
    const auto& s = js["solve"];
    CHECK(s["converged"] == true);
    CHECK(s["history"].size() == s["iterations"].get<std::size_t>() + 1);
    CHECK(s["history"].back().get<double>() == s["relres"].get<double>());
    for (const char* key : {"alpha_L", "tau_L", "kappa", "kappa_rrqr", "ibrp"}) CHECK(js["params"].contains(key));
    // residual recomputed from the emitted solution and the ones-image rhs
    const auto x = read_matrix_market_vector<double>(xpath);
    const auto b = a.multiply(std::vector<double>(144, 1.0));
    CHECK(std::abs(true_relres(a, x, b) - s["relres"].get<double>()) <= 1e-12);
  }
}

TEST_CASE("non-convergence exits with 2") {
  TempDir tmp;
  const auto mpath = tmp.file("lap.mtx");
  write_matrix_market(mpath, oracle::laplace2d(20, 20));
  const auto spath = tmp.file("s.json");
  auto r = run_cli({mpath, "--maxit", "1", "--rtol", "1e-14", "--tau", "0.5", "--alpha", "1", "--stats", spath});
  CHECK(r.code == 2);
  const auto js = load_json(spath);
  CHECK(js["solve"]["converged"] == false);
  CHECK(js["exit_code"] == 2);
  CHECK(parse_vector<double>(r.out).size() == 400);
}

TEST_CASE("input errors exit with 1 and a diagnostic") {
  TempDir tmp;
  const auto good = tmp.file("good.mtx");
  write_matrix_market(good, oracle::laplace2d(4, 4));
  const auto bad = tmp.file("bad.mtx");
  std::ofstream(bad) << "%%MatrixMarket matrix coordinate real general\n3 3 2\n1 1 1.0\n";
  const auto rect = tmp.file("rect.mtx");
  std::ofstream(rect) << "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n";
  const auto short_rhs = tmp.file("short.rhs");
  write_matrix_market_array(short_rhs, std::span<const double>(std::vector<double>(3, 1.0)));
  const std::vector<std::vector<std::string>> cases = {
      {tmp.file("missing.mtx")},
      {bad},
      {rect},
      {good, "--rhs", "file:" + short_rhs},
      {good, "--rhs", "bogus"},
      {good, "--rhs", "random:x"},
      {good, "--solver", "cg"},
      {good, "--precision", "f16"},
      {good, "--restart", "0"},
      {good, "--tau", "-1"},
      {good, "--rtol", "abc"},
      {},
  };
  for (const auto& args : cases) {
    CAPTURE(args.size());
    auto r = run_cli(args);
    CHECK(r.code == 1);
    CHECK(r.err.find("error") != std::string::npos);
  }
}

TEST_CASE("right-hand side variants") {
  TempDir tmp;
  const auto a = oracle::laplace2d(8, 8);
  const auto mpath = tmp.file("lap.mtx");
  write_matrix_market(mpath, a);
  auto r1 = run_cli({mpath, "--rhs", "random:7", "--rtol", "1e-10"});
  auto r2 = run_cli({mpath, "--rhs", "random:7", "--rtol", "1e-10"});
  auto r3 = run_cli({mpath, "--rhs", "random:8", "--rtol", "1e-10"});
  REQUIRE(r1.code == 0);
  CHECK(r1.out == r2.out);
  CHECK(r1.out != r3.out);
  CHECK(run_cli({mpath, "--rhs", "random"}).code == 0);
  // explicit file
  std::mt19937_64 rng(3);
  const auto b = oracle::stdvec<double>(oracle::random_vec<double>(64, rng));
  const auto bpath = tmp.file("b.mtx");
  write_matrix_market_array(bpath, std::span<const double>(b));
  auto r = run_cli({mpath, "--rhs", "file:" + bpath, "--rtol", "1e-10"});
  REQUIRE(r.code == 0);
  CHECK(true_relres(a, parse_vector<double>(r.out), b) <= 1e-10);
}

TEST_CASE("single precision factor and complex systems") {
  TempDir tmp;
  const auto a = oracle::laplace2d(10, 10);
  const auto mpath = tmp.file("lap.mtx");
  write_matrix_market(mpath, a);
  auto r = run_cli({mpath, "--precision", "f32", "--rtol", "1e-10"});
  REQUIRE(r.code == 0);
  const auto b = a.multiply(std::vector<double>(100, 1.0));
  CHECK(true_relres(a, parse_vector<double>(r.out), b) <= 1e-10);

  using cd = std::complex<double>;
  const auto c = oracle::laplace2d_shifted<cd>(9, cd(0.3, 0.7));
  const auto cpath = tmp.file("c.mtx");
  write_matrix_market(cpath, c);
  auto rc = run_cli({cpath, "--precision", "c64", "--rtol", "1e-10", "--ibrp", "on"});
  REQUIRE(rc.code == 0);
  const auto cb = c.multiply(std::vector<cd>(81, cd(1)));
  CHECK(true_relres(c, parse_vector<cd>(rc.out), cb) <= 1e-10);
}

TEST_CASE("pipit on a singular system and its failure path") {
  TempDir tmp;
  const auto a = oracle::laplace2d(10, 10, true);
  const auto mpath = tmp.file("neu.mtx");
  write_matrix_market(mpath, a);
  const auto spath = tmp.file("s.json");
  auto r = run_cli({mpath, "--solver", "pipit", "--null-dim", "1", "--rhs", "random:1", "--rtol", "1e-10",
                "--stats", spath});
  REQUIRE(r.code == 0);
  const auto js = load_json(spath);
  CHECK(js["pipit"]["null_dim"] == 1);
  CHECK(js["pipit"]["left_complete"] == true);
  const auto x = oracle::vec(parse_vector<double>(r.out));
  const auto b = oracle::vec(hif::ksp_detail::random_vector<double>(100, 1));
  const oracle::Vec<double> ref = oracle::pinv<double>(oracle::dense(a)) * b;
  CHECK((x - ref).norm() <= 1e-8 * ref.norm());

  const auto eye = tmp.file("eye.mtx");
  std::vector<Triplet<double>> t;
  for (Index i = 0; i < 5; ++i) t.push_back({i, i, 2.0});
  write_matrix_market(eye, CompressedMatrix<double>::from_triplets(5, 5, t));
  const auto fpath = tmp.file("f.json");
  auto f = run_cli({eye, "--solver", "pipit", "--null-dim", "1", "--stats", fpath});
  CHECK(f.code == 2);
  CHECK(f.err.find("null space") != std::string::npos);
  CHECK(load_json(fpath)["exit_code"] == 2);
}

TEST_CASE("help text") {
  auto r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--solver") != std::string::npos);
}
