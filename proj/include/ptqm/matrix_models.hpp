#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "ptqm/numerics.hpp"

namespace ptqm {

struct TwoLevelParams {
  double r = 0.0;
  double s = 0.0;
  double t = 0.0;
  double theta = 0.0;
};

/// Even-dimensional h with a parity matrix p (p^2 = 1, tr p = 0, p = p^dagger).
struct MatrixHamiltonian {
  CMatrix h;
  CMatrix p;

  /// Throws invalid_argument when shapes or the parity axioms fail.
  void validate() const;
  /// p h^dagger p == h within tol (relative to max |h_ij|).
  bool is_pt_symmetric(double tol = 1e-12) const;
};

enum class PtPhase { unbroken, exceptional, broken };

const char* to_string(PtPhase phase);

/// h = [[r e^{i theta}, s], [t, r e^{-i theta}]], p = [[0, 1], [1, 0]].
MatrixHamiltonian build_two_level(const TwoLevelParams& params);

/// Block-diagonal direct sum of the blocks and of their parities.
MatrixHamiltonian direct_sum(const std::vector<MatrixHamiltonian>& blocks);

/// st - r^2 sin^2 theta.
double discriminant(const TwoLevelParams& params);

/// Sign of the discriminant; |disc| <= 1e-12 max(|st|, r^2 sin^2 theta) is
/// exceptional.
PtPhase reality_condition(const TwoLevelParams& params);

struct TwoLevelEigensystem {
  PtPhase phase = PtPhase::unbroken;
  cplx eps_plus;
  cplx eps_minus;
  // sin(alpha) = r sin(theta) / sqrt(st); complex when broken, NaN when st = 0.
  cplx alpha;
  CVector v_plus;
  CVector v_minus;
  // PT norms (v, v) = v^dagger p v of v_plus, v_minus. Unbroken only:
  // (+1, -1) for s, t > 0, reversed for s, t < 0.
  std::optional<std::array<int, 2>> pt_norms;
};

/// Closed forms. Unbroken: v_plus = k (q e^{i a/2}, g q^{-1} e^{-i a/2}),
/// v_minus = i k (q e^{-i a/2}, -g q^{-1} e^{i a/2}) with q = (s/t)^{1/4},
/// g = sign(s), k = 1/sqrt(2 cos a). Broken: unit-length eigenvectors.
/// Throws degenerate (carrying r cos theta) at the exceptional point.
TwoLevelEigensystem two_level_eigensystem(const TwoLevelParams& params);

/// (1/cos a) [[i g sin a, sqrt(s/t)], [sqrt(t/s), -i g sin a]].
/// Throws c_undefined outside the unbroken regime.
CMatrix build_c_two_level(const TwoLevelParams& params);

/// Eigenpairs of a PT-symmetric matrix scaled to |v^dagger p v| = 1 and
/// ordered by PT norm sign (+1 first), then ascending real part. The first
/// nonzero component of each vector has argument in (-pi/2, pi/2].
struct MatrixEigensystem {
  std::vector<cplx> energies;
  std::vector<CVector> vectors;
  std::vector<int> pt_norm_signs;
  double condition = 1.0;  // 2-norm condition number of [v_0 ... v_{n-1}]
};

/// Throws invalid_argument if h is not PT-symmetric, c_undefined for a
/// complex spectrum, degenerate for defective h or null PT norms.
MatrixEigensystem pt_eigensystem(const MatrixHamiltonian& h, double imag_reality = 1e-8);

/// C = sum_n v_n v_n^dagger p over PT-normalized eigenvectors, so that
/// C v_n = sign(v_n, v_n) v_n.
CMatrix spectral_c_operator(const MatrixHamiltonian& h, double imag_reality = 1e-8);

/// <u|v> = u^dagger p C v. Equal to (C p conj(u))^T v when h is also
/// PT-symmetric (s = t); stays positive and conserved when s != t.
cplx matrix_cpt_inner_product(const CVector& u, const CVector& v, const CMatrix& c, const CMatrix& p);

struct CompletenessResult {
  double residual = 0.0;   // max |sum_n |n><n| - 1|
  double condition = 1.0;  // condition number of the eigenvector matrix
};

/// sum_n v_n v_n^dagger p C against the identity.
CompletenessResult cpt_completeness(const std::vector<CVector>& vectors, const CMatrix& c,
                                    const CMatrix& p);
CompletenessResult cpt_completeness(const TwoLevelEigensystem& system, const CMatrix& c,
                                    const CMatrix& p);

/// exp(-i h t) psi0 by eigendecomposition. Throws degenerate when h is
/// defective (eigenvector condition number above 1e8).
std::vector<CVector> time_evolve(const MatrixHamiltonian& h, const CVector& psi0,
                                 const std::vector<double>& times);

struct CSplit {
  CMatrix c;
  Eigen::MatrixXd c_real;
  Eigen::MatrixXd c_imag;
};

struct CParityReport {
  CSplit split;
  double real_commutator = 0.0;      // max |C_R P - P C_R|
  double imag_anticommutator = 0.0;  // max |C_I P + P C_I|
};

CParityReport c_parity_commutation(const CMatrix& c, const CMatrix& p);

/// Coefficients a_0..a_n of det(lambda - m) = sum_k a_k lambda^k.
std::vector<cplx> characteristic_polynomial(const CMatrix& m);

struct ScanCell {
  double s = 0.0;
  double t = 0.0;
  PtPhase phase = PtPhase::unbroken;
};

struct PhaseScan {
  std::vector<ScanCell> cells;                      // s-major
  std::vector<std::pair<double, double>> boundary;  // (s, t), ascending s
};

/// Classifies an s_resolution x t_resolution node lattice over the ranges.
/// Along every s column, each sign change of the discriminant between
/// neighbouring nodes is refined to a boundary point with find_root_1d;
/// exceptional nodes between unbroken and broken neighbours count as-is.
PhaseScan exceptional_point_scan(double r, double theta, std::pair<double, double> s_range,
                                 std::pair<double, double> t_range, int s_resolution,
                                 int t_resolution);

}  // namespace ptqm
