#include <doctest.h>

#include <cmath>
#include <random>

#include "ptqm/operator_algebra.hpp"

using namespace ptqm;

namespace {

const Grid& real_grid() {
  static const Grid g = build_real_grid(400, 12.0, RealScheme::uniform);
  return g;
}

CVector oscillator(int n, const Grid& g) {
  CVector out(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) out[i] = hermite_functions(g.points[i].real(), n + 1)[n];
  return out;
}

const EigenSolution& oscillator_solution(int levels) {
  static std::map<int, EigenSolution> cache;
  auto it = cache.find(levels);
  if (it == cache.end()) it = cache.emplace(levels, solve_spectrum(make_problem(0.0), levels)).first;
  return it->second;
}

EigenSolution line_solution(double nu, int levels, int basis = 200) {
  SturmLiouvilleProblem p = make_problem(nu, basis);
  p.contour_shift = default_contour_shift(nu, levels);
  p.grid = build_shifted_line(400, 12.0, *p.contour_shift);
  return solve_spectrum(p, levels);
}

const EigenSolution& nu1_twenty() {
  static const EigenSolution s = line_solution(1.0, 20);
  return s;
}

CVector gaussian_on(const Grid& g) { return sample(g, [](cplx x) { return std::exp(-x * x); }); }

}  // namespace

TEST_CASE("PT inner product of oscillator states") {
  const Grid& g = real_grid();
  const CVector f0 = oscillator(0, g);
  const CVector f1 = oscillator(1, g);
  CHECK(std::abs(pt_inner_product(f0, f0, g) - 1.0) < 1e-12);
  CHECK(std::abs(pt_inner_product(f1, f1, g) + 1.0) < 1e-12);
  CHECK(std::abs(pt_inner_product(f0, f1, g)) < 1e-12);
}

TEST_CASE("PT inner product is independent of an overall phase") {
  const EigenSolution& s = nu1_twenty();
  for (int n : {0, 3, 7}) {
    const CVector& f = s.eigenfunctions[n];
    const cplx base = pt_inner_product(f, f, s.grid);
    for (double gamma : {0.3, 1.9, -2.4}) {
      const CVector rotated = std::polar(1.0, gamma) * f;
      CHECK(std::abs(pt_inner_product(rotated, rotated, s.grid) - base) < 1e-14);
    }
  }
}

TEST_CASE("PT inner product needs a PT-symmetric grid") {
  Grid g = real_grid();
  g.points[3] += 0.01;
  const CVector f = CVector::Ones(g.size());
  CHECK_THROWS_AS(pt_inner_product(f, f, g), Error);
  CHECK_THROWS_AS(pt_inner_product(CVector::Ones(3), f, real_grid()), Error);
}

TEST_CASE("permutation parity kernel") {
  const Grid& g = real_grid();
  const KernelOnGrid p = build_parity_kernel(g);
  CHECK(p.label == KernelLabel::parity);
  const CVector x = sample(g, [](cplx z) { return z; });
  CHECK((apply_kernel(p, x) + x).cwiseAbs().maxCoeff() < 1e-14);
  const CVector gauss = gaussian_on(g);
  CHECK((apply_kernel(p, gauss) - gauss).cwiseAbs().maxCoeff() < 1e-14);
  const CMatrix weighted = p.values * g.weights.asDiagonal();
  for (Eigen::Index i = 0; i < g.size(); ++i)
    for (Eigen::Index j = 0; j < g.size(); ++j)
      CHECK(weighted(i, j) == cplx(j == g.mirror(i) ? 1.0 : 0.0));
}

TEST_CASE("composition: P P = 1 and 1 K = K") {
  const Grid& g = real_grid();
  const KernelOnGrid p = build_parity_kernel(g);
  const KernelOnGrid id = build_identity_kernel(g);
  const KernelOnGrid pp = compose_kernels(p, p);
  std::mt19937 rng(7);
  std::normal_distribution<double> normal;
  CVector f(g.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = cplx(normal(rng), normal(rng));
  CHECK((apply_kernel(pp, f) - f).cwiseAbs().maxCoeff() < 1e-14);
  const KernelOnGrid c = build_c_kernel(oscillator_solution(10));
  const KernelOnGrid ic = compose_kernels(id, c);
  CHECK(ic.label == KernelLabel::c_operator);
  CHECK((ic.values - c.values).cwiseAbs().maxCoeff() < 1e-14 * c.values.cwiseAbs().maxCoeff());
  CHECK(compose_kernels(c, p).label == KernelLabel::cp);
  CHECK(compose_kernels(p, c).label == KernelLabel::pc);

  const Grid other = build_real_grid(300, 12.0, RealScheme::uniform);
  CHECK_THROWS_AS(compose_kernels(p, build_parity_kernel(other)), Error);
  CHECK_THROWS_AS(apply_kernel(p, CVector::Ones(5)), Error);
}

TEST_CASE("spectral parity kernel converges with truncation") {
  const std::vector<CVector> tests{gaussian_on(real_grid())};
  double previous = INFINITY;
  for (int levels : {20, 40, 80}) {
    const double err = smeared_parity_residual(spectral_parity_kernel(oscillator_solution(80), levels), tests);
    CHECK(err < previous);
    if (levels == 40) CHECK(err < 1e-3);
    previous = err;
  }
  CHECK_THROWS_AS(spectral_parity_kernel(nu1_twenty()), Error);  // shifted line
}

TEST_CASE("nu = 0: C equals P under smearing, and C C = 1") {
  const EigenSolution& s = oscillator_solution(40);
  const KernelOnGrid c = build_c_kernel(s);
  const std::vector<CVector> tests = default_test_functions(s.grid);
  CHECK(smeared_parity_residual(c, tests) < 1e-3);
  CHECK(smeared_identity_residual(compose_kernels(c, c), {gaussian_on(s.grid)}) < 1e-3);
}

TEST_CASE("rank-one C from a single level") {
  const Grid& g = real_grid();
  EigenSolution toy;
  toy.grid = g;
  toy.energies = {1.0};
  toy.eigenfunctions = {oscillator(0, g)};
  toy.pt_norm_signs = {1};
  const KernelOnGrid c = build_c_kernel(toy);
  const CVector& f0 = toy.eigenfunctions[0];
  CHECK((c.values - f0 * f0.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((apply_kernel(compose_kernels(c, c), f0) - f0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("C construction refuses broken or misnormalized solutions") {
  EigenSolution s = oscillator_solution(4);
  s.broken = true;
  try {
    build_c_kernel(s);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::c_undefined);
  }
  s = oscillator_solution(4);
  s.pt_norm_signs[2] = -1;
  CHECK_THROWS_AS(build_c_kernel(s), Error);
  CHECK_THROWS_AS(build_c_kernel(oscillator_solution(4), 5), Error);
  CHECK_THROWS_AS(run_verification_suite(
                      [] {
                        EigenSolution b = oscillator_solution(4);
                        b.broken = true;
                        return b;
                      }(),
                      default_test_functions(real_grid()), Tolerances{}),
                  Error);
}

TEST_CASE("nu = 1: C C residual decreases with the level count") {
  const EigenSolution& s = nu1_twenty();
  const std::vector<CVector> tests = default_test_functions(s.grid);
  double previous = INFINITY;
  for (int levels : {5, 10, 20}) {
    const KernelOnGrid c = build_c_kernel(s, levels);
    const double r = smeared_identity_residual(compose_kernels(c, c), tests);
    CHECK(r < previous);
    previous = r;
  }
}

TEST_CASE("CPT norms are +1") {
  const EigenSolution& s0 = oscillator_solution(10);
  const KernelOnGrid c0 = build_c_kernel(s0);
  CHECK(std::abs(cpt_inner_product(s0.eigenfunctions[0], s0.eigenfunctions[0], c0) - 1.0) < 1e-12);
  CHECK(std::abs(cpt_inner_product(s0.eigenfunctions[1], s0.eigenfunctions[1], c0) - 1.0) < 1e-12);

  const EigenSolution& s1 = nu1_twenty();
  const KernelOnGrid c1 = build_c_kernel(s1);
  for (int n = 0; n < 10; ++n) CHECK(std::abs(cpt_inner_product(s1.eigenfunctions[n], s1.eigenfunctions[n], c1) - 1.0) < 1e-4);
  CHECK_THROWS_AS(cpt_inner_product(CVector::Ones(3), s1.eigenfunctions[0], c1), Error);
}

TEST_CASE("CPT inner product is positive on random combinations") {
  const EigenSolution& s = nu1_twenty();
  const KernelOnGrid c = build_c_kernel(s);
  std::mt19937 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    CVector f = CVector::Zero(s.grid.size());
    double expected = 0.0;
    for (int n = 0; n < 20; ++n) {
      const cplx a(normal(rng), normal(rng));
      f += a * s.eigenfunctions[n];
      expected += std::norm(a);
    }
    const cplx norm = cpt_inner_product(f, f, c);
    CHECK(std::abs(norm.imag()) < 1e-8 * expected);
    CHECK(norm.real() > 0.0);
    CHECK(std::abs(norm.real() - expected) < 1e-8 * expected);
  }
}

TEST_CASE("verification suite: harmonic oscillator passes everything") {
  const EigenSolution& s = oscillator_solution(40);
  const VerificationReport r = run_verification_suite(s, default_test_functions(s.grid), Tolerances{});
  CHECK(r.levels == 40);
  CHECK(r.checks.size() == 7);
  for (const auto& [name, check] : r.checks) {
    CAPTURE(name);
    CHECK(check.pass);
    CHECK(check.residual >= 0.0);
    CHECK(check.pass == (check.residual < check.tolerance));
  }
  CHECK(r.all_pass());
}

TEST_CASE("verification suite: nu = 1 with 20 levels") {
  const EigenSolution& s = nu1_twenty();
  const VerificationReport r = run_verification_suite(s, default_test_functions(s.grid), Tolerances{});
  CHECK(r.checks.at("orthonormality").residual < 1e-6);
  CHECK(r.checks.at("completeness").residual < 1e-2);
  CHECK(r.checks.at("cp_pc_conjugate").residual < 1e-10);
  CHECK(r.checks.at("c_pt_commutation").pass);
  CHECK(r.checks.at("cpt_positivity").pass);
  CHECK(r.all_pass());
}

TEST_CASE("verification suite: a flipped eigenfunction breaks completeness only") {
  // Multiplying one eigenfunction by i keeps every (phi_m, phi_n) and the
  // CP/PC relation but flips its term in the completeness sum.
  EigenSolution s = oscillator_solution(40);
  s.eigenfunctions[3] *= cplx(0.0, 1.0);
  const VerificationReport r = run_verification_suite(s, default_test_functions(s.grid), Tolerances{});
  CHECK(r.checks.at("orthonormality").pass);
  CHECK(r.checks.at("cp_pc_conjugate").pass);
  CHECK_FALSE(r.checks.at("completeness").pass);
  CHECK_FALSE(r.all_pass());
}

TEST_CASE("verification suite needs two test functions") {
  const EigenSolution& s = oscillator_solution(4);
  CHECK_THROWS_AS(run_verification_suite(s, {gaussian_on(s.grid)}, Tolerances{}), Error);
}

TEST_CASE("completeness residual decreases with truncation") {
  const EigenSolution& s = nu1_twenty();
  const std::vector<CVector> tests = default_test_functions(s.grid);
  const double r5 = completeness_residual(s, 5, tests);
  const double r10 = completeness_residual(s, 10, tests);
  const double r20 = completeness_residual(s, 20, tests);
  CHECK(r10 < r5);
  CHECK(r20 < r10);
}
