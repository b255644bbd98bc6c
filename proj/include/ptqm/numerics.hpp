#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ptqm/errors.hpp"

namespace ptqm {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

enum class GridKind { gauss_hermite, uniform, wedge_contour, shifted_line };

enum class RealScheme { gauss_hermite, uniform };

/// Discretized integration path in the complex-x plane.
///
/// `parameter` is the real contour parameter s (arc length along each ray for
/// wedge contours, x itself on the real line). Points are strictly ordered in
/// s and every grid built here is closed under the PT reflection
/// x -> -conj(x), with the reflected point of index i at index size()-1-i.
struct Grid {
  CVector points;
  CVector weights;
  RVector parameter;
  GridKind kind = GridKind::uniform;

  Eigen::Index size() const { return points.size(); }
  Eigen::Index mirror(Eigen::Index i) const { return size() - 1 - i; }
  bool is_real() const { return kind == GridKind::gauss_hermite || kind == GridKind::uniform; }
};

struct WedgeSpec {
  double nu = 0.0;
  double center_right = 0.0;
  double center_left = -kPi;
  double half_opening = kPi / 4;

  /// Stokes-wedge geometry for the x^2 (ix)^nu potential.
  static WedgeSpec for_nu(double nu);
};

struct Tolerances {
  double eig_abs = 1e-8;
  double residual = 1e-6;
  double imag_reality = 1e-8;
  // Smeared delta-function identities converge only with truncation level,
  // so they get their own (looser) threshold.
  double truncation = 2e-2;

  void validate() const;
};

Grid build_real_grid(int n_points, double extent, RealScheme scheme);

/// Uniform points on the horizontal line Im x = -shift, x = s - i*shift with
/// s in [-extent, extent]. The line is closed under x -> -conj(x) and, for
/// 0 <= nu < 2, lies inside the Stokes wedges at both ends. shift = 0 gives
/// the uniform real grid.
Grid build_shifted_line(int n_points, double extent, double shift);

/// Two straight rays along the wedge centers, joined at the junction -i*shift:
/// j + radius*e^{i center_left} -> j -> j + radius*e^{i center_right}.
/// Weights are end-corrected trapezoid weights (fourth order) in the
/// arc-length parameter on each ray. An even `n_points` is bumped to the next
/// odd count so the junction is a node.
/// Moving the junction below the origin, near the complex turning points,
/// keeps excited-state PT norms well conditioned; see default_contour_shift.
Grid build_wedge_contour(const WedgeSpec& spec, double radius, int n_points, double shift = 0.0);

/// True if points[mirror(i)] == -conj(points[i]) and
/// weights[mirror(i)] == conj(weights[i]) within `tol`.
bool is_pt_symmetric(const Grid& grid, double tol = 1e-13);

cplx contour_integrate(const CVector& samples, const Grid& grid);

/// Samples f(x) at every grid point.
CVector sample(const Grid& grid, const std::function<cplx(cplx)>& f);

/// [PT f](x_i) = conj(f(x_mirror(i))).
CVector pt_reflect(const CVector& samples);

double find_root_1d(const std::function<double(double)>& f, double a, double b, double tol);

/// Orthonormal Hermite functions psi_0..psi_{count-1} at real x.
/// Stable for large |x|: values that underflow come back as 0.
RVector hermite_functions(double x, int count);

/// psi_k at complex x, with the same log scaling as the real version.
CVector hermite_functions(cplx x, int count);

/// Gauss rule for weight e^{-x^2} on the real line; the returned weights have
/// the e^{-x^2} factor divided out (i.e. they integrate f(x) dx directly).
struct QuadratureRule {
  RVector nodes;
  RVector weights;
};
QuadratureRule gauss_hermite_rule(int n);

/// Generalized Gauss-Laguerre rule for weight u^alpha e^{-u} on [0, inf), with
/// u^alpha e^{-u} divided out of the weights.
QuadratureRule gauss_laguerre_rule(int n, double alpha);

}  // namespace ptqm
