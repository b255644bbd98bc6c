#pragma once

#include <map>
#include <string>
#include <vector>

#include "ptqm/continuum.hpp"
#include "ptqm/numerics.hpp"

namespace ptqm {

enum class KernelLabel { parity, identity, c_operator, cp, pc, custom };

const char* to_string(KernelLabel label);

/// Two-point kernel K(x_i, y_j) on a grid. Kernels act weight-aware:
/// (K g)(x_i) = sum_j w_j K(x_i, y_j) g(y_j).
struct KernelOnGrid {
  Grid grid;
  CMatrix values;
  KernelLabel label = KernelLabel::custom;
};

/// (f, g) = int dx conj(f(-x)) g(x), with f(-x) read off the mirrored index.
cplx pt_inner_product(const CVector& f, const CVector& g, const Grid& grid);

/// delta(x + y) as the weight-scaled index reversal. On a shifted line the
/// reversal realizes x -> -conj(x), the reflection that maps the line onto
/// itself; on real grids that is plain parity.
KernelOnGrid build_parity_kernel(const Grid& grid);

KernelOnGrid build_identity_kernel(const Grid& grid);

/// sum_{n < levels} (-1)^n phi_n(x) phi_n(-y). Real grids only; levels <= 0
/// means every stored level.
KernelOnGrid spectral_parity_kernel(const EigenSolution& solution, int levels = 0);

/// C(x, y) = sum_{n < levels} phi_n(x) phi_n(y), no conjugation.
/// Refuses broken solutions and solutions whose PT norms do not alternate.
KernelOnGrid build_c_kernel(const EigenSolution& solution, int levels = 0);

KernelOnGrid compose_kernels(const KernelOnGrid& a, const KernelOnGrid& b);

CVector apply_kernel(const KernelOnGrid& k, const CVector& g);

/// <f|g> = int dx [C PT f](x) g(x).
cplx cpt_inner_product(const CVector& f, const CVector& g, const KernelOnGrid& c_kernel);

/// sqrt(sum_i |w_i| |f_i|^2).
double grid_l2_norm(const CVector& f, const Grid& grid);

/// max over tests of ||K g - target(g)|| / ||g||, target(g) = g.
double smeared_identity_residual(const KernelOnGrid& k, const std::vector<CVector>& tests);

/// Same, against the mirrored samples g(-x).
double smeared_parity_residual(const KernelOnGrid& k, const std::vector<CVector>& tests);

/// Smeared form of sum_n (-1)^n phi_n(x) phi_n(y) = delta(x - y) over the
/// first `levels` eigenfunctions.
double completeness_residual(const EigenSolution& solution, int levels,
                             const std::vector<CVector>& tests);

/// e^{-x^2}, x e^{-x^2}, cos(x) e^{-x^2/2} sampled on the grid.
std::vector<CVector> default_test_functions(const Grid& grid);

struct CheckResult {
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::map<std::string, CheckResult> checks;
  int levels = 0;

  bool all_pass() const;
  void add(const std::string& name, double residual, double tolerance);
};

/// Checks, each a residual against a tolerance:
///   orthonormality   max |(phi_m, phi_n) - (-1)^n delta_mn|          residual
///   completeness     smeared sum_n (-1)^n phi_n phi_n = delta        truncation
///   c_squared        smeared C C = 1                                  truncation
///   cp_pc_conjugate  max entrywise |CP - conj(PC)|                    residual
///   c_pt_commutation smeared |C PT g - PT C g| / |g|                  truncation
///   cpt_completeness smeared sum_n phi_n [C PT phi_n] = delta         truncation
///   cpt_positivity   max_n |<phi_n|phi_n> - 1|                        residual
/// Uses every stored level. Throws c_undefined for broken solutions.
VerificationReport run_verification_suite(const EigenSolution& solution,
                                          const std::vector<CVector>& tests,
                                          const Tolerances& tolerances);

}  // namespace ptqm
