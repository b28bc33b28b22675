#pragma once

#include <cfloat>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hif/types.hpp"

namespace hif {

enum class IbrpMode { off, automatic, on };
enum class Ordering { natural, rcm };

struct Params {
  double alpha_L = 10.0;  // fill budget factor for L columns
  double alpha_U = 10.0;  // fill budget factor for U rows
  double kappa = 3.0;     // bound on the inverse-norm estimates of L and U
  double kappa_d = 3.0;   // bound on 1/|d_k|
  double tau_L = 1e-4;
  double tau_U = 1e-4;
  double beta = 1000.0;   // row/column scale ratio safeguard
  double kappa_rrqr = std::pow(DBL_EPSILON, -2.0 / 3.0);

  double symmetry_threshold = 0.65;
  double ibrp_defer_trigger = 0.3;
  int max_steps = 4;
  Index dense_min = 500;
  double dense_density = 0.85;
  double alpha_growth = 2.0;
  double alpha_cap = 40.0;
  double tol_diag_rel = 1e-12;

  IbrpMode ibrp = IbrpMode::automatic;
  Ordering ordering = Ordering::rcm;
  int max_levels = 64;

  // no dropping at all: the factorization becomes exact up to deferrals
  static Params exact() {
    Params p;
    p.alpha_L = p.alpha_U = 1e30;
    p.alpha_cap = 1e30;
    p.tau_L = p.tau_U = 0.0;
    return p;
  }

  void validate() const {
    auto bad = [](const char* what) { throw std::invalid_argument(std::string("Params: ") + what); };
    if (!(alpha_L > 0) || !(alpha_U > 0)) bad("alpha_L and alpha_U must be positive");
    if (!(kappa >= 1) || !(kappa_d >= 1)) bad("kappa and kappa_d must be at least 1");
    if (!(tau_L >= 0) || !(tau_U >= 0)) bad("tau_L and tau_U must be nonnegative");
    if (!(beta >= 1)) bad("beta must be at least 1");
    if (!(kappa_rrqr > 1)) bad("kappa_rrqr must exceed 1");
    if (!(symmetry_threshold >= 0 && symmetry_threshold <= 1)) bad("symmetry_threshold in [0,1]");
    if (max_steps < 1) bad("max_steps must be positive");
    if (dense_min < 0) bad("dense_min must be nonnegative");
    if (!(alpha_growth >= 1) || !(alpha_cap > 0)) bad("alpha growth/cap");
    if (!(tol_diag_rel >= 0)) bad("tol_diag_rel must be nonnegative");
    if (max_levels < 1) bad("max_levels must be positive");
  }
};

}  // namespace hif
