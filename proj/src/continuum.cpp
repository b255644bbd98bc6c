#include "ptqm/continuum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "ptqm/parallel.hpp"

namespace ptqm {

namespace {

constexpr cplx kI{0.0, 1.0};

// Fraction of an eigenvector's weight allowed in the upper half of the basis.
constexpr double kResolvedTailMass = 1e-6;

// e^{i nu pi/2}, exact for integer nu.
cplx quarter_turn_power(double nu) {
  const double rounded = std::round(nu);
  if (rounded == nu && std::abs(nu) < 1e9) {
    switch (static_cast<long long>(rounded) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  return std::polar(1.0, 0.5 * kPi * nu);
}

void check_nu(double nu) {
  if (!(nu >= 0.0)) throw Error(ErrorKind::invalid_argument, "nu must be >= 0");
}

// Half-range moments int_0^inf psi_m psi_n x^{2+nu} dx for all m, n of one
// parity class, via u = x^2 and a Gauss-Laguerre rule with exponent alpha.
Eigen::MatrixXd half_range_moments(int basis, double nu, double alpha) {
  const int nodes = basis + 8;
  const QuadratureRule rule = gauss_laguerre_rule(nodes, alpha);
  Eigen::MatrixXd psi(nodes, basis);
  RVector scale(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double u = rule.nodes[i];
    psi.row(i) = hermite_functions(std::sqrt(u), basis).transpose();
    scale[i] = 0.5 * rule.weights[i] * std::pow(u, 0.5 * (1.0 + nu));
  }
  return psi.transpose() * scale.asDiagonal() * psi;
}

// B(i, k) = psi_k(x_i + i c).
CMatrix basis_on_grid(const Grid& grid, int basis, double shift) {
  CMatrix out(grid.size(), basis);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const cplx y = grid.points[i] + kI * shift;
    if (y.imag() == 0.0)
      out.row(i) = hermite_functions(y.real(), basis).cast<cplx>().transpose();
    else
      out.row(i) = hermite_functions(y, basis).transpose();
  }
  return out;
}

cplx pt_norm(const CVector& phi, const Grid& grid) {
  return contour_integrate(pt_reflect(phi).cwiseProduct(phi), grid);
}

struct FinalizedLevel {
  CVector samples;
  cplx factor;
  double omega;
  int sign;
};

// PT phase, sign convention, then scale so that (phi, phi) = +-1.
FinalizedLevel finalize_level(const CVector& phi, const Grid& grid, double tol) {
  const PtNormalized normalized = pt_phase_normalize(phi, grid, tol);
  const cplx norm = pt_norm(normalized.samples, grid);
  if (std::abs(norm.real()) <= 1e-300)
    throw Error(ErrorKind::numerical_failure, "eigenfunction has vanishing PT norm");
  const double scale = 1.0 / std::sqrt(std::abs(norm.real()));
  return {normalized.samples * scale, normalized.factor * scale, normalized.omega,
          norm.real() > 0 ? 1 : -1};
}

// Sign convention: Re phi > 0 at the largest |phi| with parameter >= 0
// (Im phi > 0 if the real part vanishes there).
bool needs_sign_flip(const CVector& phi, const Grid& grid) {
  Eigen::Index anchor = -1;
  double best = -1.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (grid.parameter[i] < 0.0) continue;
    if (std::abs(phi[i]) > best) {
      best = std::abs(phi[i]);
      anchor = i;
    }
  }
  const cplx v = phi[anchor];
  return std::abs(v.real()) > 1e-8 * std::abs(v) ? v.real() < 0.0 : v.imag() < 0.0;
}

std::vector<std::size_t> order_by_real_part(const std::vector<cplx>& values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (values[a].real() != values[b].real()) return values[a].real() < values[b].real();
    return values[a].imag() < values[b].imag();
  });
  return idx;
}

}  // namespace

cplx potential(cplx x, double nu) {
  if (x == cplx(0.0)) return 0.0;
  if (nu == 0.0) return x * x;
  if (x.imag() == 0.0) {
    // Real axis: |x|^nu e^{+-i nu pi/2}, exact phase for integer nu.
    const cplx phase = quarter_turn_power(nu);
    const double mag = std::pow(std::abs(x.real()), 2.0 + nu);
    return x.real() > 0 ? mag * phase : mag * std::conj(phase);
  }
  return x * x * std::exp(nu * std::log(kI * x));
}

SturmLiouvilleProblem make_problem(double nu, int basis_size, int grid_points, double grid_extent) {
  SturmLiouvilleProblem problem;
  problem.nu = nu;
  problem.basis_size = basis_size;
  problem.grid = build_real_grid(grid_points, grid_extent, RealScheme::uniform);
  return problem;
}

double default_contour_shift(double nu, int n_levels) {
  check_nu(nu);
  if (n_levels < 1) throw Error(ErrorKind::invalid_argument, "n_levels must be >= 1");
  if (nu == 0.0) return 0.0;
  // Turning points of level n sit at |x| = E^{1/(2+nu)}, arg x = -nu pi / (2 (2 + nu)).
  const double radius = std::pow(wkb_energy_estimate(nu, n_levels - 1), 1.0 / (2.0 + nu));
  const double shift = 0.75 * radius * std::sin(0.5 * kPi * nu / (2.0 + nu));
  return shift < 0.5 ? 0.0 : shift;
}

double default_wedge_radius(double nu, int n_levels) {
  check_nu(nu);
  if (n_levels < 1) throw Error(ErrorKind::invalid_argument, "n_levels must be >= 1");
  const double turning = std::pow(wkb_energy_estimate(nu, n_levels - 1), 1.0 / (2.0 + nu));
  // Past the turning point phi ~ exp(-2 |x|^{(4+nu)/2} / (4 + nu)); e^{-40} is
  // below double precision relative to the peak.
  const double decay = std::pow(20.0 * (4.0 + nu), 2.0 / (4.0 + nu));
  return std::hypot(turning, decay);
}

namespace {

CMatrix kinetic_matrix(int n) {
  CMatrix h = CMatrix::Zero(n, n);
  // p^2 = (a a^+ + a^+ a - a^2 - a^+^2) / 2
  for (int k = 0; k < n; ++k) {
    h(k, k) += 0.5 * (2.0 * k + 1.0);
    if (k + 2 < n) {
      const double off = -0.5 * std::sqrt((k + 1.0) * (k + 2.0));
      h(k, k + 2) += off;
      h(k + 2, k) += off;
    }
  }
  return h;
}

// Real axis. x^2 (ix)^nu = |x|^{2+nu} [cos(nu pi/2) + i sign(x) sin(nu pi/2)];
// the even part pairs with even m+n, the odd part with odd m+n.
CMatrix potential_matrix_real_axis(int n, double nu) {
  const cplx phase = quarter_turn_power(nu);
  const Eigen::MatrixXd even = half_range_moments(n, nu, 0.5 * (1.0 + nu));
  const Eigen::MatrixXd odd =
      phase.imag() != 0.0 ? half_range_moments(n, nu, 1.0 + 0.5 * nu) : Eigen::MatrixXd::Zero(n, n);
  CMatrix v(n, n);
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < n; ++k) {
      if ((m + k) % 2 == 0)
        v(m, k) = 2.0 * phase.real() * even(m, k);
      else
        v(m, k) = kI * (2.0 * phase.imag() * odd(m, k));
    }
  }
  return v;
}

// Line Im x = -shift. V(y - i shift) is analytic in a strip around real y, so
// Gauss-Hermite converges geometrically.
CMatrix potential_matrix_shifted(int n, double nu, double shift) {
  const int nodes = 2 * n + 64;
  const QuadratureRule rule = gauss_hermite_rule(nodes);
  Eigen::MatrixXd psi(nodes, n);
  CVector w(nodes);
  for (int i = 0; i < nodes; ++i) {
    psi.row(i) = hermite_functions(rule.nodes[i], n).transpose();
    w[i] = rule.weights[i] * potential(cplx(rule.nodes[i], -shift), nu);
  }
  const CMatrix psi_c = psi.cast<cplx>();
  CMatrix v = psi_c.transpose() * w.asDiagonal() * psi_c;
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < m; ++k) v(m, k) = v(k, m) = 0.5 * (v(m, k) + v(k, m));
  }
  return v;
}

}  // namespace

CMatrix assemble_hamiltonian_matrix(const SturmLiouvilleProblem& problem) {
  const double nu = problem.nu;
  check_nu(nu);
  if (nu >= 2.0)
    throw Error(ErrorKind::unsupported_regime,
                "nu >= 2 needs a wedge contour; use the shooting solver");
  const int n = problem.basis_size;
  if (n < 2) throw Error(ErrorKind::invalid_argument, "basis_size must be >= 2");
  const double shift = problem.contour_shift.value_or(0.0);
  if (!(shift >= 0.0) || !std::isfinite(shift))
    throw Error(ErrorKind::invalid_argument, "contour_shift must be finite and >= 0");
  return kinetic_matrix(n) + (shift == 0.0 ? potential_matrix_real_axis(n, nu)
                                           : potential_matrix_shifted(n, nu, shift));
}

PtNormalized pt_phase_normalize(const CVector& phi, const Grid& grid, double tol) {
  if (phi.size() != grid.size())
    throw Error(ErrorKind::invalid_argument, "sample count does not match grid size");
  if (!is_pt_symmetric(grid))
    throw Error(ErrorKind::invalid_argument, "PT normalization needs a PT-symmetric grid");
  const double mass = phi.squaredNorm();
  if (!(mass > 0.0)) throw Error(ErrorKind::invalid_argument, "cannot normalize a zero function");

  // Amplitude-weighted average of conj(phi(-x)) / phi(x).
  const cplx ratio = (pt_reflect(phi).array() * phi.conjugate().array()).sum() / mass;
  if (std::abs(std::abs(ratio) - 1.0) > tol)
    throw Error(ErrorKind::not_pt_eigenfunction,
                "|conj(phi(-x))/phi(x)| = " + std::to_string(std::abs(ratio)) + " is not a pure phase");
  double omega = std::arg(std::conj(ratio));
  if (omega <= -kPi + 1e-12) omega += 2.0 * kPi;

  cplx factor = std::polar(1.0, -0.5 * omega);
  CVector out = factor * phi;

  if (needs_sign_flip(out, grid)) {
    out = -out;
    factor = -factor;
  }
  return {out, omega, factor};
}

double pt_self_conjugacy_residual(const CVector& phi) {
  const double scale = phi.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (pt_reflect(phi) - phi).cwiseAbs().maxCoeff() / scale;
}

namespace {

// PT acts on coefficients of a real basis on a PT-symmetric line as
// c_k -> (-1)^k conj(c_k).
CVector pt_coefficients(const CVector& c) {
  CVector out = c.conjugate();
  for (Eigen::Index k = 1; k < out.size(); k += 2) out[k] = -out[k];
  return out;
}

}  // namespace

EigenSolution solve_spectrum(const SturmLiouvilleProblem& problem, int n_levels) {
  problem.tolerances.validate();
  if (n_levels < 1) throw Error(ErrorKind::invalid_argument, "n_levels must be >= 1");
  if (2 * n_levels > problem.basis_size)
    throw Error(ErrorKind::invalid_argument, "n_levels must be <= basis_size / 2");
  if (!is_pt_symmetric(problem.grid))
    throw Error(ErrorKind::invalid_argument, "spectral solver needs a PT-symmetric grid");

  SturmLiouvilleProblem resolved = problem;
  if (!resolved.contour_shift) resolved.contour_shift = default_contour_shift(problem.nu, n_levels);
  const double shift = *resolved.contour_shift;
  const CMatrix h = assemble_hamiltonian_matrix(resolved);
  Eigen::ComplexEigenSolver<CMatrix> solver(h, true);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::numerical_failure, "complex eigensolver did not converge");

  // Truncation produces spurious eigenpairs living in the top of the basis;
  // keep only resolved ones.
  const int n = problem.basis_size;
  std::vector<cplx> all;
  std::vector<Eigen::Index> source;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto col = solver.eigenvectors().col(k);
    if (col.tail(n / 2).squaredNorm() < kResolvedTailMass * col.squaredNorm()) {
      all.push_back(solver.eigenvalues()[k]);
      source.push_back(k);
    }
  }
  if (all.size() < static_cast<std::size_t>(n_levels))
    throw Error(ErrorKind::numerical_failure,
                "only " + std::to_string(all.size()) + " resolved eigenpairs; increase basis_size");
  const std::vector<std::size_t> order = order_by_real_part(all);
  const CMatrix basis = basis_on_grid(problem.grid, n, shift);

  EigenSolution out;
  out.nu = problem.nu;
  out.grid = problem.grid;
  out.contour_shift = shift;
  for (int level = 0; level < n_levels; ++level) {
    const cplx energy = all[order[level]];
    CVector coeff = solver.eigenvectors().col(source[order[level]]);
    out.energies.push_back(energy);
    if (std::abs(energy.imag()) >= problem.tolerances.imag_reality) {
      out.broken = true;
      out.eigenfunctions.push_back(basis * coeff);
      out.coefficients.push_back(coeff);
      out.pt_norm_signs.push_back(0);
      out.phase_report.push_back(0.0);
      continue;
    }
    // Phase and norm are fixed on the coefficients, where the PT inner
    // product is the plain bilinear sum and suffers no sampling cancellation.
    const cplx ratio = pt_coefficients(coeff).dot(coeff) / coeff.squaredNorm();
    if (std::abs(std::abs(ratio) - 1.0) > problem.tolerances.residual)
      throw Error(ErrorKind::not_pt_eigenfunction,
                  "level " + std::to_string(level) + " is not a PT eigenvector; |lambda| = " +
                      std::to_string(std::abs(ratio)),
                  energy);
    // ratio = <c, PT c> = conj(lambda) with PT c = lambda c.
    double omega = std::arg(ratio);
    if (omega <= -kPi + 1e-12) omega += 2.0 * kPi;
    coeff *= std::polar(1.0, -0.5 * omega);
    coeff = 0.5 * (coeff + pt_coefficients(coeff));
    const cplx norm = coeff.transpose() * coeff;
    if (!(std::abs(norm.real()) > 1e-300))
      throw Error(ErrorKind::numerical_failure, "eigenfunction has vanishing PT norm", energy);
    coeff /= std::sqrt(std::abs(norm.real()));

    CVector phi = basis * coeff;
    if (needs_sign_flip(phi, problem.grid)) {
      phi = -phi;
      coeff = -coeff;
    }
    out.eigenfunctions.push_back(phi);
    out.coefficients.push_back(coeff);
    out.pt_norm_signs.push_back(norm.real() > 0 ? 1 : -1);
    out.phase_report.push_back(omega);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shooting

namespace {

using State = std::array<cplx, 2>;

struct Ray {
  cplx base;      // junction point shared by both rays
  cplx dir;       // outward unit direction
  double length;  // distance from the junction to the contour end

  cplx at(double rho) const { return base + rho * dir; }
};

// Junction: the contour's midpoint (0 on real and wedge grids, -ic on a
// shifted line).
cplx contour_junction(const Grid& grid) {
  const Eigen::Index n = grid.size();
  return 0.5 * (grid.points[(n - 1) / 2] + grid.points[n / 2]);
}

std::pair<Ray, Ray> contour_rays(const Grid& grid) {
  const cplx base = contour_junction(grid);
  const cplx left = grid.points[0] - base;
  const cplx right = grid.points[grid.size() - 1] - base;
  if (std::abs(left) == 0.0 || std::abs(right) == 0.0)
    throw Error(ErrorKind::invalid_argument, "contour endpoints must be away from the junction");
  return {Ray{base, left / std::abs(left), std::abs(left)}, Ray{base, right / std::abs(right), std::abs(right)}};
}

// Distance along the ray at which the WKB decay exponent, counted from the
// turning region, reaches `target`.
double decay_cutoff(const Ray& ray, double nu, cplx energy, double target = 40.0) {
  constexpr double step = 1e-3;
  double acc = 0.0;
  for (double rho = step; rho < ray.length; rho += step) {
    const cplx v = potential(ray.at(rho), nu);
    if (std::abs(v) <= std::abs(energy)) continue;
    acc += std::sqrt(ray.dir * ray.dir * (v - energy)).real() * step;
    if (acc >= target) return rho;
  }
  return ray.length;
}

class RayIntegrator {
 public:
  RayIntegrator(const Ray& ray, double nu, cplx energy) : ray_(ray), nu_(nu), energy_(energy) {}

  void operator()(const State& y, State& dy, double rho) const {
    dy[0] = y[1];
    dy[1] = ray_.dir * ray_.dir * (potential(ray_.at(rho), nu_) - energy_) * y[0];
  }

  State start(double rho_end) const {
    const cplx x = ray_.at(rho_end);
    cplx k = std::sqrt(ray_.dir * ray_.dir * (potential(x, nu_) - energy_));
    if (k.real() < 0.0) k = -k;
    return {cplx(1.0), -k};
  }

 private:
  Ray ray_;
  double nu_;
  cplx energy_;
};

constexpr double kOdeTol = 1e-12;

// Integrates inward from rho_end to rho = 0; `stops` (descending, all in
// [0, rho_end]) receive the state.
State integrate_inward(const Ray& ray, double nu, cplx energy, double rho_end,
                       const std::vector<double>& stops = {}, std::vector<State>* observed = nullptr) {
  namespace odeint = boost::numeric::odeint;
  RayIntegrator rhs(ray, nu, energy);
  State y = rhs.start(rho_end);
  auto stepper = odeint::make_controlled(kOdeTol, kOdeTol, odeint::runge_kutta_fehlberg78<State>());
  if (observed == nullptr) {
    odeint::integrate_adaptive(stepper, rhs, y, rho_end, 0.0, -1e-3);
    return y;
  }
  std::vector<double> times;
  times.reserve(stops.size() + 2);
  times.push_back(rho_end);
  for (double s : stops) times.push_back(s);
  times.push_back(0.0);
  std::vector<State> states;
  odeint::integrate_times(stepper, rhs, y, times.begin(), times.end(), -1e-3,
                          [&](const State& st, double) { states.push_back(st); });
  observed->assign(states.begin() + 1, states.end() - 1);
  return states.back();
}

struct Matching {
  State left;
  State right;
  Ray left_ray;
  Ray right_ray;
};

// Wronskian at the junction divided by |(phi_L, phi_L')| |(phi_R, phi_R')|:
// the sine of the angle between the two states, so values near 1e-14 are
// rounding noise whatever the growth along the rays.
cplx wronskian(const Matching& m) {
  // Convert d/drho to d/dx on each side before matching.
  const cplx left_dx = m.left[1] / m.left_ray.dir;
  const cplx right_dx = m.right[1] / m.right_ray.dir;
  const double scale = std::hypot(std::abs(m.left[0]), std::abs(left_dx)) *
                       std::hypot(std::abs(m.right[0]), std::abs(right_dx));
  const cplx w = m.left[0] * right_dx - left_dx * m.right[0];
  if (scale == 0.0 || !std::isfinite(scale)) return w;
  return w / scale;
}

constexpr double kMismatchFloor = 1e-14;

}  // namespace

cplx refine_eigenvalue_shooting(const SturmLiouvilleProblem& problem, cplx e_guess) {
  check_nu(problem.nu);
  const auto [left_ray, right_ray] = contour_rays(problem.grid);
  const double left_end = decay_cutoff(left_ray, problem.nu, e_guess);
  const double right_end = decay_cutoff(right_ray, problem.nu, e_guess);

  const auto mismatch = [&](cplx e) {
    Matching m{integrate_inward(left_ray, problem.nu, e, left_end),
               integrate_inward(right_ray, problem.nu, e, right_end), left_ray, right_ray};
    return wronskian(m);
  };

  cplx e0 = e_guess;
  cplx e1 = e_guess + 1e-4 * std::max(1.0, std::abs(e_guess));
  cplx m0 = mismatch(e0);
  cplx m1 = mismatch(e1);
  for (int it = 0; it < 60; ++it) {
    if (std::abs(m1) < kMismatchFloor) return e1;
    const cplx denom = m1 - m0;
    if (denom == cplx(0.0)) {
      // Two iterates with bit-identical mismatch: already at the root.
      if (std::abs(e1 - e0) < 1e-8 * std::max(1.0, std::abs(e1))) return e1;
      throw Error(ErrorKind::numerical_failure, "secant step degenerated", e1);
    }
    if (!std::isfinite(std::abs(denom)))
      throw Error(ErrorKind::numerical_failure, "secant step overflowed", e1);
    const cplx e2 = e1 - m1 * (e1 - e0) / denom;
    if (!std::isfinite(e2.real()) || !std::isfinite(e2.imag()))
      throw Error(ErrorKind::numerical_failure, "secant iteration diverged", e1);
    if (std::abs(e2 - e1) < 1e-12 * std::max(1.0, std::abs(e2))) return e2;
    e0 = e1;
    m0 = m1;
    e1 = e2;
    m1 = mismatch(e1);
  }
  throw Error(ErrorKind::numerical_failure, "secant iteration did not converge", e1);
}

double wkb_energy_estimate(double nu, int n) {
  check_nu(nu);
  const double big_n = nu + 2.0;
  const double a = std::tgamma(1.5 + 1.0 / big_n) * std::sqrt(kPi) * (n + 0.5);
  const double b = std::sin(kPi / big_n) * std::tgamma(1.0 + 1.0 / big_n);
  return std::pow(a / b, 2.0 * big_n / (big_n + 2.0));
}

EigenSolution solve_spectrum_shooting(const SturmLiouvilleProblem& problem, int n_levels) {
  problem.tolerances.validate();
  check_nu(problem.nu);
  if (n_levels < 1) throw Error(ErrorKind::invalid_argument, "n_levels must be >= 1");
  if (!is_pt_symmetric(problem.grid))
    throw Error(ErrorKind::invalid_argument, "shooting needs a PT-symmetric contour");

  std::vector<cplx> energies(n_levels);
  parallel_for(static_cast<std::size_t>(n_levels), [&](std::size_t n) {
    energies[n] = refine_eigenvalue_shooting(problem, wkb_energy_estimate(problem.nu, static_cast<int>(n)));
  });
  for (int n = 0; n + 1 < n_levels; ++n) {
    if (std::abs(energies[n + 1] - energies[n]) < 1e-6 * std::max(1.0, std::abs(energies[n])))
      throw Error(ErrorKind::numerical_failure,
                  "two WKB seeds converged to the same level near E = " + std::to_string(energies[n].real()),
                  energies[n]);
  }
  const std::vector<std::size_t> order = order_by_real_part(energies);

  const Grid& grid = problem.grid;
  const auto [left_ray, right_ray] = contour_rays(grid);

  EigenSolution out;
  out.nu = problem.nu;
  out.grid = grid;
  for (int level = 0; level < n_levels; ++level) {
    const cplx energy = energies[order[level]];
    const double left_end = decay_cutoff(left_ray, problem.nu, energy);
    const double right_end = decay_cutoff(right_ray, problem.nu, energy);

    // Grid indices per ray, ordered by descending distance from the origin.
    std::vector<Eigen::Index> left_idx;
    std::vector<Eigen::Index> right_idx;
    Eigen::Index origin = -1;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      const double rho = std::abs(grid.points[i] - left_ray.base);
      if (rho == 0.0) origin = i;
      else if (grid.parameter[i] < 0.0 && rho < left_end) left_idx.push_back(i);
      else if (grid.parameter[i] > 0.0 && rho < right_end) right_idx.push_back(i);
    }
    std::reverse(right_idx.begin(), right_idx.end());
    const auto stops_for = [&](const std::vector<Eigen::Index>& idx) {
      std::vector<double> stops;
      for (Eigen::Index i : idx) stops.push_back(std::abs(grid.points[i] - left_ray.base));
      return stops;
    };
    std::vector<State> left_states;
    std::vector<State> right_states;
    const State left0 = integrate_inward(left_ray, problem.nu, energy, left_end, stops_for(left_idx), &left_states);
    const State right0 =
        integrate_inward(right_ray, problem.nu, energy, right_end, stops_for(right_idx), &right_states);

    const cplx right_dx = right0[1] / right_ray.dir;
    const cplx left_dx = left0[1] / left_ray.dir;
    const cplx glue = std::abs(right0[0]) >= std::abs(right_dx) ? left0[0] / right0[0] : left_dx / right_dx;

    CVector phi = CVector::Zero(grid.size());
    for (std::size_t j = 0; j < left_idx.size(); ++j) phi[left_idx[j]] = left_states[j][0];
    for (std::size_t j = 0; j < right_idx.size(); ++j) phi[right_idx[j]] = glue * right_states[j][0];
    if (origin >= 0) phi[origin] = left0[0];

    out.energies.push_back(energy);
    if (std::abs(energy.imag()) >= problem.tolerances.imag_reality) {
      out.broken = true;
      out.eigenfunctions.push_back(phi / std::sqrt(phi.squaredNorm()));
      out.pt_norm_signs.push_back(0);
      out.phase_report.push_back(0.0);
      continue;
    }
    const FinalizedLevel fin = finalize_level(phi, grid, problem.tolerances.residual);
    out.eigenfunctions.push_back(fin.samples);
    out.pt_norm_signs.push_back(fin.sign);
    out.phase_report.push_back(fin.omega);
  }
  return out;
}

// ---------------------------------------------------------------------------

PhaseClassification classify_pt_phase(const std::vector<cplx>& energies, double imag_reality, double pair_tol) {
  if (energies.empty()) throw Error(ErrorKind::invalid_argument, "cannot classify an empty spectrum");
  PhaseClassification out;
  std::vector<std::size_t> complex_idx;
  for (std::size_t i = 0; i < energies.size(); ++i)
    if (std::abs(energies[i].imag()) >= imag_reality) complex_idx.push_back(i);
  if (complex_idx.empty()) return out;

  out.tag = PhaseClassification::Tag::broken;
  std::vector<bool> used(energies.size(), false);
  for (std::size_t i : complex_idx) {
    if (used[i]) continue;
    std::size_t best = energies.size();
    double best_gap = pair_tol;
    for (std::size_t j : complex_idx) {
      if (j == i || used[j]) continue;
      const double gap = std::abs(energies[i] - std::conj(energies[j]));
      if (gap < best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    if (best == energies.size())
      throw Error(ErrorKind::inconsistency,
                  "complex eigenvalue without a conjugate partner: the secular equation is not real", energies[i]);
    used[i] = used[best] = true;
    out.conjugate_pairs.emplace_back(std::min(i, best), std::max(i, best));
  }
  return out;
}

PhaseClassification classify_pt_phase(const EigenSolution& solution, const Tolerances& tol) {
  double scale = 1.0;
  for (const cplx& e : solution.energies) scale = std::max(scale, std::abs(e));
  return classify_pt_phase(solution.energies, tol.imag_reality, tol.residual * scale);
}

double eigen_residual(const EigenSolution& solution, std::size_t level) {
  if (level >= solution.levels()) throw Error(ErrorKind::invalid_argument, "level out of range");
  const Grid& grid = solution.grid;
  const cplx energy = solution.energies[level];
  const CVector& phi = solution.eigenfunctions[level];
  const Eigen::Index n = grid.size();
  CVector residual = CVector::Zero(n);
  std::vector<bool> use(static_cast<std::size_t>(n), false);

  if (!solution.coefficients.empty()) {
    const CVector& c = solution.coefficients[level];
    const int basis = static_cast<int>(c.size());
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const cplx x = grid.points[i];
      const cplx y = x + cplx(0.0, solution.contour_shift);
      const CVector psi = hermite_functions(y, basis);
      const cplx v = potential(x, solution.nu);
      cplx acc = 0.0;
      // -psi_k''(y) = (2k + 1 - y^2) psi_k(y)
      for (int k = 0; k < basis; ++k) acc += c[k] * (2.0 * k + 1.0 - y * y + v) * psi[k];
      // Coefficients carry the same scale as the stored samples.
      residual[i] = acc - energy * phi[i];
      use[static_cast<std::size_t>(i)] = true;
    }
  } else {
    if (grid.kind == GridKind::gauss_hermite)
      throw Error(ErrorKind::invalid_argument, "finite-difference residual needs a uniform parameter grid");
    const double h = grid.parameter[1] - grid.parameter[0];
    const Eigen::Index center = n / 2;
    for (Eigen::Index i = 2; i + 2 < n; ++i) {
      if (grid.kind == GridKind::wedge_contour && std::abs(i - center) <= 2) continue;
      // dx/ds, constant along each straight piece
      const cplx dir = (grid.points[i + 2] - grid.points[i - 2]) / (grid.parameter[i + 2] - grid.parameter[i - 2]);
      const cplx d2s = (-phi[i - 2] + 16.0 * phi[i - 1] - 30.0 * phi[i] + 16.0 * phi[i + 1] - phi[i + 2]) /
                       (12.0 * h * h);
      residual[i] = -d2s / (dir * dir) + (potential(grid.points[i], solution.nu) - energy) * phi[i];
      use[static_cast<std::size_t>(i)] = true;
    }
  }
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!use[static_cast<std::size_t>(i)]) continue;
    const double w = std::abs(grid.weights[i]);
    num += w * std::norm(residual[i]);
    den += w * std::norm(phi[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace ptqm
