#include "ptqm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <boost/math/tools/roots.hpp>

namespace ptqm {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::bracket: return "bracket-error";
    case ErrorKind::unsupported_regime: return "unsupported-regime";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::not_pt_eigenfunction: return "not-a-PT-eigenfunction";
    case ErrorKind::inconsistency: return "inconsistency-error";
    case ErrorKind::c_undefined: return "c-undefined";
    case ErrorKind::degenerate: return "degenerate-error";
  }
  return "unknown";
}

WedgeSpec WedgeSpec::for_nu(double nu) {
  if (!(nu >= 0.0)) throw Error(ErrorKind::invalid_argument, "wedge requires nu >= 0");
  WedgeSpec spec;
  spec.nu = nu;
  spec.center_right = -kPi * nu / (2.0 * (nu + 4.0));
  spec.center_left = -kPi - spec.center_right;
  spec.half_opening = kPi / (nu + 4.0);
  return spec;
}

void Tolerances::validate() const {
  if (!(eig_abs > 0) || !(residual > 0) || !(imag_reality > 0) || !(truncation > 0))
    throw Error(ErrorKind::invalid_argument, "tolerances must be strictly positive");
}

namespace {

// Three-term recurrences for orthonormal functions overflow/underflow for large
// arguments. We run the recurrence on mantissas and carry a log scale.
template <class T>
class ScaledRecurrence {
 public:
  explicit ScaledRecurrence(double log_start) : log_scale_(log_start) {}

  // Registers a freshly computed pair (previous, current) and rescales both if
  // the current mantissa grows too large.
  void renormalize(T& prev, T& cur) {
    constexpr double kBig = 1e150;
    if (std::abs(cur) > kBig) {
      prev /= kBig;
      cur /= kBig;
      log_scale_ += std::log(kBig);
    }
  }

  T value(T mantissa) const {
    const double mag = std::abs(mantissa);
    if (mag == 0.0) return T(0.0);
    const double log_abs = std::log(mag) + log_scale_;
    if (log_abs < -745.0) return T(0.0);
    return (mantissa / mag) * std::exp(log_abs);
  }

 private:
  double log_scale_;
};

}  // namespace

RVector hermite_functions(double x, int count) {
  RVector out = RVector::Zero(std::max(count, 0));
  if (count <= 0) return out;
  ScaledRecurrence<double> scale(-0.5 * x * x - 0.25 * std::log(kPi));
  double prev = 0.0;
  double cur = 1.0;
  out[0] = scale.value(cur);
  for (int k = 0; k + 1 < count; ++k) {
    const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(double(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
    scale.renormalize(prev, cur);
    out[k + 1] = scale.value(cur);
  }
  return out;
}

CVector hermite_functions(cplx x, int count) {
  CVector out = CVector::Zero(std::max(count, 0));
  if (count <= 0) return out;
  // e^{-x^2/2}: modulus goes into the log scale, phase into the mantissa.
  const cplx gauss = -0.5 * x * x;
  ScaledRecurrence<cplx> scale(gauss.real() - 0.25 * std::log(kPi));
  cplx prev = 0.0;
  cplx cur = std::polar(1.0, gauss.imag());
  out[0] = scale.value(cur);
  for (int k = 0; k + 1 < count; ++k) {
    const cplx next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(double(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
    scale.renormalize(prev, cur);
    out[k + 1] = scale.value(cur);
  }
  return out;
}

namespace {

RVector tridiagonal_eigenvalues(const RVector& diag, const RVector& sub) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::numerical_failure, "tridiagonal eigensolver did not converge");
  return solver.eigenvalues();
}

// Orthonormal Laguerre functions q_k(u) = p_k(u) u^{alpha/2} e^{-u/2}; returns
// sum_k q_k(u)^2 for k < n.
double laguerre_christoffel_sum(double u, int n, double alpha) {
  ScaledRecurrence<double> scale(0.5 * alpha * std::log(u) - 0.5 * u - 0.5 * std::lgamma(alpha + 1.0));
  double prev = 0.0;
  double cur = 1.0;
  double v = scale.value(cur);
  double sum = v * v;
  for (int k = 0; k + 1 < n; ++k) {
    const double a_k = 2.0 * k + alpha + 1.0;
    const double b_k = std::sqrt(k * (k + alpha));
    const double b_next = std::sqrt((k + 1) * (k + 1 + alpha));
    const double next = ((u - a_k) * cur - b_k * prev) / b_next;
    prev = cur;
    cur = next;
    scale.renormalize(prev, cur);
    v = scale.value(cur);
    sum += v * v;
  }
  return sum;
}

}  // namespace

QuadratureRule gauss_hermite_rule(int n) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "Gauss-Hermite rule needs n >= 1");
  RVector diag = RVector::Zero(n);
  RVector sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(0.5 * k);
  RVector nodes = n == 1 ? RVector::Zero(1) : tridiagonal_eigenvalues(diag, sub);

  // Newton polish on psi_n, then enforce exact mirror symmetry.
  for (int i = 0; i < n; ++i) {
    for (int it = 0; it < 3; ++it) {
      const RVector psi = hermite_functions(nodes[i], n + 1);
      const double deriv = std::sqrt(2.0 * n) * psi[n - 1] - nodes[i] * psi[n];
      if (deriv == 0.0) break;
      nodes[i] -= psi[n] / deriv;
    }
  }
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;

  RVector weights(n);
  for (int i = 0; i < n; ++i) weights[i] = 1.0 / hermite_functions(nodes[i], n).squaredNorm();
  return {nodes, weights};
}

QuadratureRule gauss_laguerre_rule(int n, double alpha) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "Gauss-Laguerre rule needs n >= 1");
  if (!(alpha > -1.0)) throw Error(ErrorKind::invalid_argument, "Gauss-Laguerre rule needs alpha > -1");
  RVector diag(n);
  RVector sub(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + alpha + 1.0;
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(k * (k + alpha));
  RVector nodes = n == 1 ? RVector::Constant(1, alpha + 1.0) : tridiagonal_eigenvalues(diag, sub);
  RVector weights(n);
  for (int i = 0; i < n; ++i) weights[i] = 1.0 / laguerre_christoffel_sum(nodes[i], n, alpha);
  return {nodes, weights};
}

Grid build_real_grid(int n_points, double extent, RealScheme scheme) {
  if (n_points < 2) throw Error(ErrorKind::invalid_argument, "real grid needs n_points >= 2");
  if (!(extent > 0.0)) throw Error(ErrorKind::invalid_argument, "real grid needs extent > 0");
  Grid grid;
  grid.points.resize(n_points);
  grid.weights.resize(n_points);
  grid.parameter.resize(n_points);
  if (scheme == RealScheme::uniform) {
    grid.kind = GridKind::uniform;
    const double h = extent / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
      // (2i - (n-1)) is an exact integer, so mirrored points are exact negatives.
      const double x = double(2 * i - (n_points - 1)) * h;
      grid.parameter[i] = x;
      grid.points[i] = x;
      grid.weights[i] = 2.0 * h;
    }
    grid.weights[0] = h;
    grid.weights[n_points - 1] = h;
  } else {
    // Nodes are the natural Hermite nodes (their spread ~ sqrt(2n) is set by
    // n); extent is only validated.
    grid.kind = GridKind::gauss_hermite;
    const QuadratureRule rule = gauss_hermite_rule(n_points);
    for (int i = 0; i < n_points; ++i) {
      grid.parameter[i] = rule.nodes[i];
      grid.points[i] = rule.nodes[i];
      grid.weights[i] = rule.weights[i];
    }
  }
  return grid;
}

Grid build_shifted_line(int n_points, double extent, double shift) {
  if (!(shift >= 0.0)) throw Error(ErrorKind::invalid_argument, "line shift must be >= 0");
  Grid grid = build_real_grid(n_points, extent, RealScheme::uniform);
  if (shift == 0.0) return grid;
  grid.kind = GridKind::shifted_line;
  for (Eigen::Index i = 0; i < grid.size(); ++i) grid.points[i] = cplx(grid.parameter[i], -shift);
  return grid;
}

Grid build_wedge_contour(const WedgeSpec& spec, double radius, int n_points, double shift) {
  if (!(shift >= 0.0)) throw Error(ErrorKind::invalid_argument, "wedge junction shift must be >= 0");
  if (!(radius > 0.0)) throw Error(ErrorKind::invalid_argument, "wedge contour needs radius > 0");
  if (n_points < 15) throw Error(ErrorKind::invalid_argument, "wedge contour needs n_points >= 15");
  if (!(spec.nu >= 0.0) || !(spec.half_opening > 0.0))
    throw Error(ErrorKind::invalid_argument, "malformed wedge spec");
  if (std::abs(spec.center_left + kPi + spec.center_right) > 1e-12)
    throw Error(ErrorKind::invalid_argument, "wedges must mirror through the imaginary axis");
  if (n_points % 2 == 0) ++n_points;

  const cplx dir_right = std::polar(1.0, spec.center_right);
  // Left ray traversed toward the origin: x(s) = s * dir_left for s < 0.
  const cplx dir_left = -std::polar(1.0, spec.center_left);
  const int half = n_points / 2;
  const double h = radius / half;

  Grid grid;
  grid.kind = GridKind::wedge_contour;
  grid.points.resize(n_points);
  grid.weights.resize(n_points);
  grid.parameter.resize(n_points);
  // Each ray is integrated on its own with a fourth-order end-corrected
  // trapezoid rule: the integrand has a kink at the junction, and PT norms of
  // excited states cancel heavily, so plain trapezoid weights are not enough.
  // Collinear rays (nu = 0) form one straight segment and keep plain weights
  // at the junction.
  const bool kinked = std::abs(dir_left - dir_right) > 1e-15;
  const auto end_factor = [half, kinked](int k) {
    static constexpr double kCorr[4] = {17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0};
    const int from_end = kinked ? std::min(k, half - k) : half - k;
    if (!kinked && k == 0) return 0.5;
    return from_end < 4 ? kCorr[from_end] : 1.0;
  };
  for (int i = 0; i < n_points; ++i) {
    const int k = i - half;
    const double s = k * h;
    grid.parameter[i] = s;
    const cplx junction(0.0, -shift);
    if (k > 0) {
      grid.points[i] = junction + s * dir_right;
      grid.weights[i] = h * end_factor(k) * dir_right;
    } else if (k < 0) {
      grid.points[i] = junction + s * dir_left;
      grid.weights[i] = h * end_factor(-k) * dir_left;
    } else {
      grid.points[i] = junction;
      grid.weights[i] = h * end_factor(0) * (dir_left + dir_right);
    }
  }
  // Mirror exactly.
  for (int i = 0; i < half; ++i) {
    grid.points[i] = -std::conj(grid.points[n_points - 1 - i]);
    grid.weights[i] = std::conj(grid.weights[n_points - 1 - i]);
  }
  return grid;
}

bool is_pt_symmetric(const Grid& grid, double tol) {
  if (grid.points.size() != grid.weights.size()) return false;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Eigen::Index j = grid.mirror(i);
    const double scale = std::max(1.0, std::abs(grid.points[i]));
    if (std::abs(grid.points[j] + std::conj(grid.points[i])) > tol * scale) return false;
    if (std::abs(grid.weights[j] - std::conj(grid.weights[i])) > tol * std::max(1.0, std::abs(grid.weights[i])))
      return false;
  }
  return true;
}

cplx contour_integrate(const CVector& samples, const Grid& grid) {
  if (samples.size() != grid.size())
    throw Error(ErrorKind::invalid_argument, "sample count does not match grid size");
  return (grid.weights.array() * samples.array()).sum();
}

CVector sample(const Grid& grid, const std::function<cplx(cplx)>& f) {
  CVector out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = f(grid.points[i]);
  return out;
}

CVector pt_reflect(const CVector& samples) {
  return samples.reverse().conjugate();
}

double find_root_1d(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "root tolerance must be positive");
  if (a > b) std::swap(a, b);
  const double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (!(fa * fb < 0.0))
    throw Error(ErrorKind::bracket, "no sign change on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  std::uintmax_t max_iter = 200;
  const auto done = [tol](double lo, double hi) { return std::abs(hi - lo) <= tol; };
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, done, max_iter);
  return 0.5 * (lo + hi);
}

}  // namespace ptqm
