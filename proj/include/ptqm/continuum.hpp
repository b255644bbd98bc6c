#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ptqm/defaults.hpp"
#include "ptqm/numerics.hpp"

namespace ptqm {

/// -phi'' + x^2 (ix)^nu phi = E phi on a contour, truncated to `basis_size`
/// Hermite functions for the spectral route.
///
/// The spectral basis is psi_k(x + i*c): Hermite functions on the horizontal
/// line Im x = -c, where c = contour_shift. Eigenvalues do not depend on c,
/// but eigenvector conditioning does, badly so on the real axis for large nu
/// and high levels. When unset, default_contour_shift picks c.
struct SturmLiouvilleProblem {
  double nu = 0.0;
  Grid grid;
  int basis_size = defaults::kBasisSize;
  Tolerances tolerances;
  std::optional<double> contour_shift;
};

/// Uniform real grid of grid_points points on [-grid_extent, grid_extent].
SturmLiouvilleProblem make_problem(double nu, int basis_size = defaults::kBasisSize,
                                   int grid_points = defaults::kGridPoints,
                                   double grid_extent = defaults::kGridExtent);

struct EigenSolution {
  double nu = 0.0;
  Grid grid;
  double contour_shift = 0.0;  // line carrying the Hermite basis (spectral only)
  std::vector<cplx> energies;
  std::vector<CVector> eigenfunctions;
  // Hermite-basis coefficients; empty for shooting-backed solutions.
  std::vector<CVector> coefficients;
  std::vector<int> pt_norm_signs;
  std::vector<double> phase_report;
  bool broken = false;

  std::size_t levels() const { return energies.size(); }
};

struct PhaseClassification {
  enum class Tag { unbroken, broken };
  Tag tag = Tag::unbroken;
  std::vector<std::pair<std::size_t, std::size_t>> conjugate_pairs;
};

/// V(x) = x^2 (ix)^nu on the principal branch of log(ix); V(0) = 0.
cplx potential(cplx x, double nu);

/// Contour shift c for n_levels levels: the basis line Im x = -c (spectral,
/// nu < 2) or the wedge junction -ic (shooting) passes a little above the
/// complex turning points of level n_levels - 1, which keeps the PT norms of
/// all requested levels far from cancellation. Zero for nu = 0 and for
/// shifts too small to matter.
double default_contour_shift(double nu, int n_levels);

/// Wedge radius for n_levels levels: far enough past the outermost turning
/// point that the eigenfunctions have decayed to rounding level.
double default_wedge_radius(double nu, int n_levels);

/// <chi_m| p^2 + x^2 (ix)^nu |chi_n> with chi_k(x) = psi_k(x + i c) and
/// c = contour_shift (0 when unset), integrated along Im x = -c.
/// On the real axis the potential block is exact up to rounding (half-range
/// generalized Gauss-Laguerre rules split by parity of m + n); off it the
/// potential is analytic along the line and Gauss-Hermite quadrature is used.
CMatrix assemble_hamiltonian_matrix(const SturmLiouvilleProblem& problem);

EigenSolution solve_spectrum(const SturmLiouvilleProblem& problem, int n_levels);

/// Matches inward integrations from both contour ends at the origin and
/// secant-iterates on the Wronskian in complex E.
cplx refine_eigenvalue_shooting(const SturmLiouvilleProblem& problem, cplx e_guess);

/// WKB estimate of level n, used to seed shooting.
double wkb_energy_estimate(double nu, int n);

/// Spectrum from shooting alone: WKB guesses refined by matching, with
/// eigenfunctions sampled by inward integration along problem.grid.
/// Works on wedge contours for any nu >= 0.
EigenSolution solve_spectrum_shooting(const SturmLiouvilleProblem& problem, int n_levels);

struct PtNormalized {
  CVector samples;
  double omega = 0.0;
  cplx factor{1.0, 0.0};  // samples == factor * phi
};

/// Rescales phi by e^{-i omega/2} so that conj(phi(-x)) == phi(x), where
/// omega = arg(phi(x) / conj(phi(-x))) is taken as an amplitude-weighted
/// average. The leftover sign makes Re phi > 0 at the largest |phi| with
/// parameter >= 0 (Im phi > 0 when the real part vanishes there).
PtNormalized pt_phase_normalize(const CVector& phi, const Grid& grid, double tol = 1e-6);

PhaseClassification classify_pt_phase(const std::vector<cplx>& energies, double imag_reality,
                                      double pair_tol);
PhaseClassification classify_pt_phase(const EigenSolution& solution, const Tolerances& tol);

/// max_x |conj(phi(-x)) - phi(x)| relative to max |phi|.
double pt_self_conjugacy_residual(const CVector& phi);

/// Relative L2 residual of -phi'' + V phi - E phi over interior grid points.
/// Uses the Hermite coefficients when present (exact second derivative),
/// otherwise a fourth-order finite difference in the contour parameter.
double eigen_residual(const EigenSolution& solution, std::size_t level);

}  // namespace ptqm
