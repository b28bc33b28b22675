#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "hif/hif.hpp"
#include "hif/ksp.hpp"
#include "hif/matrix_market.hpp"

namespace hif::cli {

namespace {

using json = nlohmann::json;

constexpr int kSchemaVersion = 1;

struct Options {
  std::string matrix;
  std::string solver = "gmres";
  double rtol = 1e-6;
  int restart = 30;
  int maxit = 500;
  std::string ibrp = "auto";
  std::optional<double> tau, alpha, kappa;
  std::string precision = "f64";
  std::string rhs = "ones-image";
  std::string output;
  std::string stats;
  Index null_dim = -1;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Params make_params(const Options& o) {
  Params p;
  if (o.tau) p.tau_L = p.tau_U = *o.tau;
  if (o.alpha) p.alpha_L = p.alpha_U = *o.alpha;
  if (o.kappa) p.kappa = p.kappa_d = *o.kappa;
  if (o.ibrp == "auto")
    p.ibrp = IbrpMode::automatic;
  else if (o.ibrp == "on")
    p.ibrp = IbrpMode::on;
  else
    p.ibrp = IbrpMode::off;
  p.validate();
  return p;
}

template <class T>
std::vector<T> make_rhs(const Options& o, const CompressedMatrix<T>& a) {
  const std::size_t n = std::size_t(a.nrows());
  if (o.rhs == "ones-image") {
    std::vector<T> ones(n, T(1));
    return a.multiply(ones);
  }
  if (o.rhs.rfind("random", 0) == 0) {
    std::uint64_t seed = 0;
    if (o.rhs.size() > 6) {
      if (o.rhs[6] != ':') throw InputError("bad --rhs value: " + o.rhs);
      try {
        seed = std::stoull(o.rhs.substr(7));
      } catch (const std::exception&) {
        throw InputError("bad random seed in --rhs: " + o.rhs);
      }
    }
    return ksp_detail::random_vector<T>(n, seed);
  }
  if (o.rhs.rfind("file:", 0) == 0) {
    std::vector<T> b;
    try {
      b = read_matrix_market_vector<T>(o.rhs.substr(5));
    } catch (const MatrixMarketError& e) {
      throw InputError(e.what());
    }
    if (b.size() != n) throw InputError("right-hand side length does not match the matrix");
    return b;
  }
  throw InputError("bad --rhs value: " + o.rhs);
}

json params_json(const Params& p) {
  return {{"alpha_L", p.alpha_L}, {"alpha_U", p.alpha_U}, {"kappa", p.kappa},
          {"kappa_d", p.kappa_d}, {"tau_L", p.tau_L},     {"tau_U", p.tau_U},
          {"beta", p.beta},       {"kappa_rrqr", p.kappa_rrqr},
          {"ibrp", p.ibrp == IbrpMode::on ? "on" : p.ibrp == IbrpMode::off ? "off" : "auto"}};
}

json factor_json(const HifStats& s) {
  json levels = json::array();
  for (const auto& l : s.levels)
    levels.push_back({{"n", l.n},
                      {"n0", l.n0},
                      {"n1", l.n1},
                      {"static_deferred", l.static_deferred},
                      {"dynamic_deferred", l.dynamic_deferred},
                      {"row_swaps", l.row_swaps},
                      {"col_swaps", l.col_swaps},
                      {"ibrp", l.ibrp},
                      {"symmetric_mode", l.symmetric_mode},
                      {"decision", to_string(l.decision)},
                      {"nnz", l.nnz}});
  return {{"levels", levels},
          {"final_dim", s.final_dim},
          {"rank_default", s.rank_default},
          {"rank_nullspace", s.rank_nullspace},
          {"nnz_input", s.nnz_input},
          {"nnz_factors", s.nnz_factors},
          {"nnz_ratio", s.nnz_ratio},
          {"work", s.work},
          {"dense_work", s.dense_work},
          {"seconds", s.factor_seconds}};
}

json solve_json(const SolveStats& s) {
  return {{"iterations", s.iterations}, {"restarts", s.restarts}, {"relres", s.relres},
          {"converged", s.converged},   {"reason", s.reason},     {"history", s.history},
          {"seconds", s.seconds}};
}

template <class T, class F>
int solve_with(const Options& o, const Params& prm, std::ostream& out, json& js) {
  CompressedMatrix<T> a;
  try {
    a = read_matrix_market<T>(o.matrix);
  } catch (const MatrixMarketError& e) {
    throw InputError(e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (a.nrows() != a.ncols()) throw InputError("matrix must be square");
  const auto b = make_rhs(o, a);
  KspConfig cfg;
  cfg.rtol = o.rtol;
  cfg.restart = o.restart;
  cfg.maxit = o.maxit;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  js["matrix"] = {{"path", o.matrix}, {"n", a.nrows()}, {"nnz", a.nnz()}};
  const auto m = factorize<F>(a, prm);
  js["factorization"] = factor_json(m.stats());
  std::vector<T> x;
  SolveStats st;
  if (o.solver == "gmres") {
    auto r = gmres(a, std::span<const T>(b), m, cfg);
    x = std::move(r.x);
    st = std::move(r.stats);
  } else if (o.solver == "fgmres") {
    auto r = fgmres_hifir(a, std::span<const T>(b), m, cfg, false, 0);
    x = std::move(r.x);
    st = std::move(r.stats);
  } else {
    auto r = pipit(a, std::span<const T>(b), m, o.null_dim, cfg);
    x = std::move(r.x);
    st = std::move(r.stats);
    js["pipit"] = {{"null_dim", r.null_dim},
                   {"left_found", r.left.vectors.size()},
                   {"right_found", r.right.vectors.size()},
                   {"left_complete", r.left.complete},
                   {"right_complete", r.right.complete}};
  }
  js["solve"] = solve_json(st);
  if (o.output.empty() || o.output == "-") {
    write_matrix_market_array(out, std::span<const T>(x));
  } else {
    try {
      write_matrix_market_array(o.output, std::span<const T>(x));
    } catch (const MatrixMarketError& e) {
      throw InputError(e.what());
    }
  }
  return st.converged ? kConverged : kNotConverged;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solve a sparse linear system with a multilevel hybrid incomplete factorization"};
  Options o;
  app.add_option("matrix", o.matrix, "Matrix Market coordinate file")->required();
  app.add_option("--solver", o.solver, "Krylov driver")
      ->check(CLI::IsMember({"gmres", "fgmres", "pipit"}));
  app.add_option("--rtol", o.rtol, "relative residual tolerance");
  app.add_option("--restart", o.restart, "GMRES restart length");
  app.add_option("--maxit", o.maxit, "maximum Krylov iterations");
  app.add_option("--ibrp", o.ibrp, "rook pivoting on coarse levels")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  app.add_option("--tau", o.tau, "drop tolerance for L and U");
  app.add_option("--alpha", o.alpha, "fill factor for L and U");
  app.add_option("--kappa", o.kappa, "inverse-norm and pivot bound");
  app.add_option("--precision", o.precision, "factor precision")
      ->check(CLI::IsMember({"f64", "f32", "c64"}));
  app.add_option("--rhs", o.rhs, "file:PATH, ones-image, or random[:seed]");
  app.add_option("-o,--output", o.output, "solution file (Matrix Market array); stdout if omitted");
  app.add_option("--stats", o.stats, "write run statistics as JSON");
  app.add_option("--null-dim", o.null_dim, "null-space dimension for pipit (-1: estimate)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kConverged;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  json js;
  js["schema"] = "hif-run-stats";
  js["version"] = kSchemaVersion;
  js["solver"] = o.solver;
  js["precision"] = o.precision;
  int code = kInputError;
  try {
    const Params prm = make_params(o);
    js["params"] = params_json(prm);
    if (o.precision == "f64")
      code = solve_with<double, double>(o, prm, out, js);
    else if (o.precision == "f32")
      code = solve_with<double, float>(o, prm, out, js);
    else
      code = solve_with<std::complex<double>, std::complex<double>>(o, prm, out, js);
  } catch (const NullSpaceError& e) {
    err << "error: " << e.what() << "\n";
    js["exit_code"] = kNotConverged;
    js["error"] = e.what();
    code = kNotConverged;
    if (!o.stats.empty()) std::ofstream(o.stats) << js.dump(2) << "\n";
    return code;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  js["exit_code"] = code;
  if (!o.stats.empty()) {
    std::ofstream sf(o.stats);
    if (!sf) {
      err << "error: cannot write " << o.stats << "\n";
      return kInputError;
    }
    sf << js.dump(2) << "\n";
  }
  return code;
}

}  // namespace hif::cli
