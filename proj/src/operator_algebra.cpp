#include "ptqm/operator_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ptqm {

namespace {

void require_pt_grid(const Grid& grid) {
  if (!is_pt_symmetric(grid))
    throw Error(ErrorKind::invalid_argument, "grid is not closed under x -> -conj(x)");
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (a.size() != b.size() || a.points != b.points || a.weights != b.weights)
    throw Error(ErrorKind::invalid_argument, "kernels live on different grids");
}

void require_samples(const CVector& f, const Grid& grid) {
  if (f.size() != grid.size())
    throw Error(ErrorKind::invalid_argument, "sample count does not match grid size");
}

int resolve_levels(const EigenSolution& solution, int levels) {
  const int stored = static_cast<int>(solution.levels());
  if (levels <= 0) levels = stored;
  if (levels > stored)
    throw Error(ErrorKind::invalid_argument,
                "requested " + std::to_string(levels) + " levels, solution has " + std::to_string(stored));
  return levels;
}

void require_unbroken(const EigenSolution& solution, int levels) {
  if (solution.broken)
    throw Error(ErrorKind::c_undefined, "C is undefined when PT symmetry is broken");
  for (int n = 0; n < levels; ++n) {
    if (solution.pt_norm_signs[n] != (n % 2 == 0 ? 1 : -1))
      throw Error(ErrorKind::c_undefined, "PT norm of level " + std::to_string(n) + " does not have sign (-1)^n");
  }
}

CMatrix level_matrix(const EigenSolution& solution, int levels) {
  CMatrix phi(solution.grid.size(), levels);
  for (int n = 0; n < levels; ++n) {
    require_samples(solution.eigenfunctions[n], solution.grid);
    phi.col(n) = solution.eigenfunctions[n];
  }
  return phi;
}

double relative_error(const CVector& got, const CVector& want, const Grid& grid) {
  const double scale = grid_l2_norm(want, grid);
  return grid_l2_norm(got - want, grid) / (scale > 0.0 ? scale : 1.0);
}

}  // namespace

const char* to_string(KernelLabel label) {
  switch (label) {
    case KernelLabel::parity: return "parity";
    case KernelLabel::identity: return "identity";
    case KernelLabel::c_operator: return "c-operator";
    case KernelLabel::cp: return "cp";
    case KernelLabel::pc: return "pc";
    case KernelLabel::custom: return "custom";
  }
  return "custom";
}

cplx pt_inner_product(const CVector& f, const CVector& g, const Grid& grid) {
  require_pt_grid(grid);
  require_samples(f, grid);
  require_samples(g, grid);
  return contour_integrate(pt_reflect(f).cwiseProduct(g), grid);
}

KernelOnGrid build_parity_kernel(const Grid& grid) {
  require_pt_grid(grid);
  KernelOnGrid k{grid, CMatrix::Zero(grid.size(), grid.size()), KernelLabel::parity};
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Eigen::Index j = grid.mirror(i);
    k.values(i, j) = 1.0 / grid.weights[j];
  }
  return k;
}

KernelOnGrid build_identity_kernel(const Grid& grid) {
  KernelOnGrid k{grid, CMatrix::Zero(grid.size(), grid.size()), KernelLabel::identity};
  for (Eigen::Index i = 0; i < grid.size(); ++i) k.values(i, i) = 1.0 / grid.weights[i];
  return k;
}

KernelOnGrid spectral_parity_kernel(const EigenSolution& solution, int levels) {
  if (!solution.grid.is_real())
    throw Error(ErrorKind::invalid_argument, "spectral parity kernel needs a real grid");
  require_pt_grid(solution.grid);
  levels = resolve_levels(solution, levels);
  require_unbroken(solution, levels);
  const CMatrix phi = level_matrix(solution, levels);
  RVector signs(levels);
  for (int n = 0; n < levels; ++n) signs[n] = n % 2 == 0 ? 1.0 : -1.0;
  // phi_n(-y) is the row-reversed sample matrix.
  const CMatrix reflected = phi.colwise().reverse();
  return {solution.grid, phi * signs.asDiagonal() * reflected.transpose(), KernelLabel::parity};
}

KernelOnGrid build_c_kernel(const EigenSolution& solution, int levels) {
  levels = resolve_levels(solution, levels);
  require_unbroken(solution, levels);
  const CMatrix phi = level_matrix(solution, levels);
  return {solution.grid, phi * phi.transpose(), KernelLabel::c_operator};
}

KernelOnGrid compose_kernels(const KernelOnGrid& a, const KernelOnGrid& b) {
  require_same_grid(a.grid, b.grid);
  KernelLabel label = KernelLabel::custom;
  if (a.label == KernelLabel::identity) label = b.label;
  else if (b.label == KernelLabel::identity) label = a.label;
  else if (a.label == KernelLabel::c_operator && b.label == KernelLabel::parity) label = KernelLabel::cp;
  else if (a.label == KernelLabel::parity && b.label == KernelLabel::c_operator) label = KernelLabel::pc;
  return {a.grid, a.values * a.grid.weights.asDiagonal() * b.values, label};
}

CVector apply_kernel(const KernelOnGrid& k, const CVector& g) {
  require_samples(g, k.grid);
  return k.values * k.grid.weights.cwiseProduct(g);
}

cplx cpt_inner_product(const CVector& f, const CVector& g, const KernelOnGrid& c_kernel) {
  require_pt_grid(c_kernel.grid);
  require_samples(f, c_kernel.grid);
  require_samples(g, c_kernel.grid);
  return contour_integrate(apply_kernel(c_kernel, pt_reflect(f)).cwiseProduct(g), c_kernel.grid);
}

double grid_l2_norm(const CVector& f, const Grid& grid) {
  require_samples(f, grid);
  return std::sqrt((grid.weights.cwiseAbs().array() * f.cwiseAbs2().array()).sum());
}

double smeared_identity_residual(const KernelOnGrid& k, const std::vector<CVector>& tests) {
  double worst = 0.0;
  for (const CVector& g : tests) worst = std::max(worst, relative_error(apply_kernel(k, g), g, k.grid));
  return worst;
}

double smeared_parity_residual(const KernelOnGrid& k, const std::vector<CVector>& tests) {
  double worst = 0.0;
  for (const CVector& g : tests)
    worst = std::max(worst, relative_error(apply_kernel(k, g), CVector(g.reverse()), k.grid));
  return worst;
}

double completeness_residual(const EigenSolution& solution, int levels,
                             const std::vector<CVector>& tests) {
  levels = resolve_levels(solution, levels);
  const CMatrix phi = level_matrix(solution, levels);
  const Grid& grid = solution.grid;
  double worst = 0.0;
  for (const CVector& g : tests) {
    require_samples(g, grid);
    CVector overlaps = phi.transpose() * grid.weights.cwiseProduct(g);
    for (int n = 1; n < levels; n += 2) overlaps[n] = -overlaps[n];
    worst = std::max(worst, relative_error(phi * overlaps, g, grid));
  }
  return worst;
}

std::vector<CVector> default_test_functions(const Grid& grid) {
  return {
      sample(grid, [](cplx x) { return std::exp(-x * x); }),
      sample(grid, [](cplx x) { return x * std::exp(-x * x); }),
      sample(grid, [](cplx x) { return std::cos(x) * std::exp(-0.5 * x * x); }),
  };
}

bool VerificationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second.pass; });
}

void VerificationReport::add(const std::string& name, double residual, double tolerance) {
  checks[name] = {residual, tolerance, std::isfinite(residual) && residual < tolerance};
}

VerificationReport run_verification_suite(const EigenSolution& solution,
                                          const std::vector<CVector>& tests,
                                          const Tolerances& tolerances) {
  tolerances.validate();
  const Grid& grid = solution.grid;
  require_pt_grid(grid);
  if (tests.size() < 2)
    throw Error(ErrorKind::invalid_argument, "need at least two test functions");
  for (const CVector& g : tests) require_samples(g, grid);

  const int levels = resolve_levels(solution, 0);
  const KernelOnGrid c = build_c_kernel(solution, levels);
  const CMatrix phi = level_matrix(solution, levels);

  VerificationReport report;
  report.levels = levels;

  // (phi_m, phi_n) for all pairs: conj(phi(-x)) is the reversed conjugate.
  const CMatrix gram =
      CMatrix(phi.colwise().reverse().conjugate()).transpose() * grid.weights.asDiagonal() * phi;
  double ortho = 0.0;
  for (int m = 0; m < levels; ++m)
    for (int n = 0; n < levels; ++n) {
      const double want = m == n ? (n % 2 == 0 ? 1.0 : -1.0) : 0.0;
      ortho = std::max(ortho, std::abs(gram(m, n) - want));
    }
  report.add("orthonormality", ortho, tolerances.residual);

  report.add("completeness", completeness_residual(solution, levels, tests), tolerances.truncation);

  double c_squared = 0.0;
  for (const CVector& g : tests)
    c_squared = std::max(c_squared, relative_error(apply_kernel(c, apply_kernel(c, g)), g, grid));
  report.add("c_squared", c_squared, tolerances.truncation);

  const KernelOnGrid p = build_parity_kernel(grid);
  const CMatrix cp = compose_kernels(c, p).values;
  const CMatrix pc = compose_kernels(p, c).values;
  report.add("cp_pc_conjugate", (cp - pc.conjugate()).cwiseAbs().maxCoeff(), tolerances.residual);

  double commutation = 0.0;
  for (const CVector& g : tests) {
    const CVector lhs = apply_kernel(c, pt_reflect(g));
    const CVector rhs = pt_reflect(apply_kernel(c, g));
    commutation = std::max(commutation, grid_l2_norm(lhs - rhs, grid) / grid_l2_norm(g, grid));
  }
  report.add("c_pt_commutation", commutation, tolerances.residual);

  // [C PT phi_n] for every level, reused by the last two checks.
  CMatrix cpt_phi(grid.size(), levels);
  for (int n = 0; n < levels; ++n) cpt_phi.col(n) = apply_kernel(c, pt_reflect(phi.col(n)));

  double cpt_complete = 0.0;
  for (const CVector& g : tests) {
    const CVector overlaps = cpt_phi.transpose() * grid.weights.cwiseProduct(g);
    cpt_complete = std::max(cpt_complete, relative_error(phi * overlaps, g, grid));
  }
  report.add("cpt_completeness", cpt_complete, tolerances.truncation);

  double positivity = 0.0;
  for (int n = 0; n < levels; ++n) {
    const cplx norm = contour_integrate(cpt_phi.col(n).cwiseProduct(phi.col(n)), grid);
    positivity = std::max(positivity, std::abs(norm - 1.0));
  }
  report.add("cpt_positivity", positivity, tolerances.residual);
  return report;
}

}  // namespace ptqm
