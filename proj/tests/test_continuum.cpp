#include <doctest.h>

#include <cmath>

#include "ptqm/continuum.hpp"

using namespace ptqm;

namespace {

// Reference values: spectral solutions at N = 200 and 300 on shifted lines
// agreeing to 1e-11, cross-checked by shooting on the same lines.
constexpr double kNu1[] = {1.156267071987, 4.109228752809, 7.562273854979, 11.314421820196};
constexpr double kNuHalf[] = {1.048955524910, 3.434538787589, 6.051737437899, 8.791012282553};
constexpr double kNu3Half[] = {1.301513692756, 4.969791009972, 9.480030374305, 14.530476073597};

SturmLiouvilleProblem line_problem(double nu, int levels, int basis = 200) {
  SturmLiouvilleProblem p = make_problem(nu, basis);
  p.contour_shift = default_contour_shift(nu, levels);
  p.grid = build_shifted_line(400, 12.0, *p.contour_shift);
  return p;
}

SturmLiouvilleProblem wedge_problem(double nu, int levels) {
  SturmLiouvilleProblem p = make_problem(nu);
  p.grid = build_wedge_contour(WedgeSpec::for_nu(nu), default_wedge_radius(nu, levels), 801,
                               default_contour_shift(nu, levels));
  return p;
}

int alternating(int n) { return n % 2 == 0 ? 1 : -1; }

}  // namespace

TEST_CASE("potential branch: V*(-x) = V(x) on the real axis") {
  CHECK(potential(0.0, 1.3) == cplx(0.0));
  for (double nu : {0.0, 0.5, 1.0, 1.5, 3.0})
    for (double x : {0.3, 1.0, 2.7}) {
      CHECK(std::abs(std::conj(potential(-x, nu)) - potential(x, nu)) < 1e-13 * std::abs(potential(x, nu)));
      CHECK(std::abs(potential(x, nu) - std::pow(x, 2.0 + nu) * std::polar(1.0, 0.5 * kPi * nu)) <
            1e-12 * std::pow(x, 2.0 + nu));
    }
  CHECK(potential(2.0, 1.0) == cplx(0.0, 8.0));
}

TEST_CASE("harmonic oscillator matrix") {
  const CMatrix h = assemble_hamiltonian_matrix(make_problem(0.0, 50));
  for (int k = 0; k < 50; ++k) CHECK(std::abs(h(k, k) - cplx(2.0 * k + 1.0)) < 1e-12);
  CHECK((h - CMatrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("nu = 1 matrix is complex symmetric, not Hermitian") {
  for (std::optional<double> shift : {std::optional<double>{}, std::optional<double>{1.2}}) {
    SturmLiouvilleProblem p = make_problem(1.0, 50);
    p.contour_shift = shift;
    const CMatrix h = assemble_hamiltonian_matrix(p);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-2);
  }
}

TEST_CASE("assemble: regime and argument errors") {
  try {
    assemble_hamiltonian_matrix(make_problem(2.0));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported_regime);
  }
  try {
    assemble_hamiltonian_matrix(make_problem(-0.1));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
  }
}

TEST_CASE("nu = 1 ground state: dense diagonalization at N = 200 and 300") {
  const EigenSolution a = solve_spectrum(make_problem(1.0, 200), 1);
  const EigenSolution b = solve_spectrum(make_problem(1.0, 300), 1);
  CHECK(std::abs(a.energies[0] - b.energies[0]) < 1e-6);
  CHECK(std::abs(a.energies[0] - kNu1[0]) < 1e-7);
}

TEST_CASE("harmonic oscillator spectrum and alternating PT norms") {
  const EigenSolution s = solve_spectrum(make_problem(0.0), 8);
  CHECK(s.contour_shift == 0.0);
  CHECK_FALSE(s.broken);
  for (int n = 0; n < 8; ++n) {
    CHECK(std::abs(s.energies[n] - cplx(2.0 * n + 1.0)) < 1e-8);
    CHECK(s.pt_norm_signs[n] == alternating(n));
  }
}

TEST_CASE("nu = 1 low levels") {
  const EigenSolution s = solve_spectrum(make_problem(1.0), 4);
  for (int n = 0; n < 4; ++n) CHECK(std::abs(s.energies[n] - kNu1[n]) < 1e-8);
}

TEST_CASE("solve_spectrum preconditions") {
  CHECK_THROWS_AS(solve_spectrum(make_problem(1.0, 20), 11), Error);
  CHECK_THROWS_AS(solve_spectrum(make_problem(1.0), 0), Error);
  SturmLiouvilleProblem p = make_problem(1.0);
  p.grid.points[0] += cplx(0.0, 0.1);
  CHECK_THROWS_AS(solve_spectrum(p, 2), Error);
}

TEST_CASE("shooting refinement") {
  const SturmLiouvilleProblem p0 = wedge_problem(0.0, 4);
  CHECK(std::abs(refine_eigenvalue_shooting(p0, 0.9) - 1.0) < 1e-9);
  CHECK(std::abs(refine_eigenvalue_shooting(p0, 3.2) - 3.0) < 1e-9);
  const SturmLiouvilleProblem p1 = wedge_problem(1.0, 4);
  const cplx e = refine_eigenvalue_shooting(p1, 1.1);
  const EigenSolution s = solve_spectrum(make_problem(1.0), 1);
  CHECK(std::abs(e - s.energies[0]) < 1e-6);
}

TEST_CASE("shooting divergence reports the last iterate") {
  SturmLiouvilleProblem p = wedge_problem(1.0, 4);
  try {
    refine_eigenvalue_shooting(p, cplx(std::nan(""), 0.0));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical_failure);
    CHECK(e.value().has_value());
  }
}

TEST_CASE("spectral and shooting agree on E0..E3") {
  for (double nu : {0.0, 0.5, 1.0, 1.5}) {
    CAPTURE(nu);
    const EigenSolution spectral = solve_spectrum(line_problem(nu, 4), 4);
    const EigenSolution shooting = solve_spectrum_shooting(wedge_problem(nu, 4), 4);
    for (int n = 0; n < 4; ++n) CHECK(std::abs(spectral.energies[n] - shooting.energies[n]) < 1e-6);
  }
  const EigenSolution half = solve_spectrum(line_problem(0.5, 4), 4);
  const EigenSolution three_half = solve_spectrum(line_problem(1.5, 4), 4);
  for (int n = 0; n < 4; ++n) {
    CHECK(std::abs(half.energies[n] - kNuHalf[n]) < 1e-8);
    CHECK(std::abs(three_half.energies[n] - kNu3Half[n]) < 1e-8);
  }
}

TEST_CASE("accepted eigenpairs: residual, PT self-conjugacy, alternating norms") {
  const Tolerances tol;
  for (double nu : {0.0, 0.5, 1.0, 1.5}) {
    CAPTURE(nu);
    const EigenSolution s = solve_spectrum(line_problem(nu, 12), 12);
    CHECK_FALSE(s.broken);
    for (int n = 0; n < 12; ++n) {
      CAPTURE(n);
      CHECK(eigen_residual(s, n) < tol.residual);
      CHECK(pt_self_conjugacy_residual(s.eigenfunctions[n]) < tol.residual);
      CHECK(s.pt_norm_signs[n] == alternating(n));
      CHECK(std::abs(s.energies[n].imag()) < tol.imag_reality);
    }
  }
}

TEST_CASE("basis-size stability") {
  const Tolerances tol;
  for (double nu : {0.5, 1.0}) {
    const EigenSolution a = solve_spectrum(line_problem(nu, 10, 150), 10);
    const EigenSolution b = solve_spectrum(line_problem(nu, 10, 300), 10);
    for (int n = 0; n < 10; ++n) CHECK(std::abs(a.energies[n] - b.energies[n]) < tol.eig_abs);
  }
}

TEST_CASE("eigenvalues do not depend on the basis line") {
  for (double c : {0.0, 0.7, 1.4}) {
    SturmLiouvilleProblem p = make_problem(1.0);
    p.contour_shift = c;
    const EigenSolution s = solve_spectrum(p, 4);
    for (int n = 0; n < 4; ++n) CHECK(std::abs(s.energies[n] - kNu1[n]) < 1e-8);
  }
}

TEST_CASE("wedge shooting beyond nu = 2 keeps alternating PT norms") {
  for (double nu : {2.0, 3.0}) {
    CAPTURE(nu);
    const EigenSolution s = solve_spectrum_shooting(wedge_problem(nu, 8), 8);
    for (int n = 0; n < 8; ++n) {
      CHECK(s.pt_norm_signs[n] == alternating(n));
      CHECK(std::abs(s.energies[n].imag()) < 1e-8);
    }
  }
  const EigenSolution s2 = solve_spectrum_shooting(wedge_problem(2.0, 4), 4);
  CHECK(std::abs(s2.energies[0] - 1.477149753578) < 1e-8);
  CHECK(std::abs(s2.energies[1] - 6.003386083308) < 1e-8);
}

TEST_CASE("pt_phase_normalize: phased Gaussian") {
  const Grid g = build_real_grid(401, 10.0, RealScheme::uniform);
  const CVector gauss = sample(g, [](cplx x) { return std::exp(-0.5 * x * x); });
  const PtNormalized out = pt_phase_normalize(std::polar(1.0, kPi / 3) * gauss, g);
  CHECK(out.omega == doctest::Approx(2 * kPi / 3).epsilon(1e-12));
  CHECK((out.samples - gauss).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(out.samples[200].real() > 0.0);
}

TEST_CASE("pt_phase_normalize: real odd function picks up a quarter turn") {
  // conj(phi(-x)) = -phi(x) for a real odd phi, so omega = pi and the
  // normalized function is i x e^{-x^2/2}.
  const Grid g = build_real_grid(401, 10.0, RealScheme::uniform);
  const CVector odd = sample(g, [](cplx x) { return x * std::exp(-0.5 * x * x); });
  const PtNormalized out = pt_phase_normalize(odd, g);
  CHECK(out.omega == doctest::Approx(kPi).epsilon(1e-12));
  CHECK((out.samples - cplx(0.0, 1.0) * odd).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(pt_self_conjugacy_residual(out.samples) < 1e-14);
}

TEST_CASE("pt_phase_normalize rejects non-PT functions") {
  const Grid g = build_real_grid(401, 10.0, RealScheme::uniform);
  const CVector shifted = sample(g, [](cplx x) { return std::exp(-0.5 * (x - 1.0) * (x - 1.0)); });
  try {
    pt_phase_normalize(shifted, g);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_pt_eigenfunction);
  }
}

TEST_CASE("pt_phase_normalize on a numerical ground state") {
  const EigenSolution s = solve_spectrum(make_problem(1.0), 1);
  const CVector scrambled = std::polar(2.5, 0.77) * s.eigenfunctions[0];
  const PtNormalized out = pt_phase_normalize(scrambled, s.grid);
  CHECK(pt_self_conjugacy_residual(out.samples) < 1e-8);
}

TEST_CASE("phase classification") {
  const Tolerances tol;
  CHECK(classify_pt_phase(solve_spectrum(make_problem(0.0), 4), tol).tag == PhaseClassification::Tag::unbroken);
  CHECK(classify_pt_phase(solve_spectrum(make_problem(1.0), 4), tol).tag == PhaseClassification::Tag::unbroken);
  const PhaseClassification pair = classify_pt_phase({cplx(1.0, 0.5), cplx(1.0, -0.5)}, 1e-8, 1e-8);
  CHECK(pair.tag == PhaseClassification::Tag::broken);
  REQUIRE(pair.conjugate_pairs.size() == 1);
  CHECK(pair.conjugate_pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
  try {
    classify_pt_phase({cplx(1.0, 0.5), cplx(2.0, 0.0)}, 1e-8, 1e-8);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::inconsistency);
  }
  CHECK_THROWS_AS(classify_pt_phase(std::vector<cplx>{}, 1e-8, 1e-8), Error);
}

TEST_CASE("default contour shift and wedge radius") {
  CHECK(default_contour_shift(0.0, 40) == 0.0);
  CHECK(default_contour_shift(1.0, 1) == 0.0);
  CHECK(default_contour_shift(1.0, 20) > default_contour_shift(1.0, 10));
  CHECK(default_wedge_radius(0.0, 10) > std::sqrt(19.0));
  CHECK_THROWS_AS(default_contour_shift(1.0, 0), Error);
  CHECK(wkb_energy_estimate(0.0, 3) == doctest::Approx(7.0).epsilon(1e-12));
}
