#include "ptqm/matrix_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "ptqm/parallel.hpp"

namespace ptqm {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr double kExceptionalRel = 1e-12;
constexpr double kDefectiveCondition = 1e8;

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double condition_number(const CMatrix& v) {
  Eigen::JacobiSVD<CMatrix> svd(v);
  const RVector& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  return smallest > 0.0 ? sv[0] / smallest : std::numeric_limits<double>::infinity();
}

CMatrix columns(const std::vector<CVector>& vectors) {
  if (vectors.empty()) throw Error(ErrorKind::invalid_argument, "no vectors");
  CMatrix out(vectors.front().size(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (vectors[k].size() != out.rows()) throw Error(ErrorKind::invalid_argument, "vector length mismatch");
    out.col(static_cast<Eigen::Index>(k)) = vectors[k];
  }
  return out;
}

void require_square(const CMatrix& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw Error(ErrorKind::invalid_argument, std::string(what) + " has the wrong shape");
}

// Brings v to conj-symmetric form p conj(v) = v where v is a PT eigenvector,
// then fixes the sign by the first nonzero component.
void fix_phase(CVector& v, const CMatrix& p) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  const cplx lambda = (p * v.conjugate())(k) / v(k);
  v *= std::polar(1.0, -0.5 * std::arg(lambda));
  const double floor = 1e-12 * v.norm();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) <= floor) continue;
    if (v(i).real() < 0.0 || (v(i).real() == 0.0 && v(i).imag() < 0.0)) v = -v;
    break;
  }
}

}  // namespace

const char* to_string(PtPhase phase) {
  switch (phase) {
    case PtPhase::unbroken: return "unbroken";
    case PtPhase::exceptional: return "exceptional";
    case PtPhase::broken: return "broken";
  }
  return "unbroken";
}

void MatrixHamiltonian::validate() const {
  const Eigen::Index n = h.rows();
  if (n < 2 || n % 2 != 0 || h.cols() != n)
    throw Error(ErrorKind::invalid_argument, "h must be square with even dimension");
  require_square(p, n, "parity matrix");
  if (!h.allFinite() || !p.allFinite()) throw Error(ErrorKind::invalid_argument, "non-finite entries");
  const CMatrix id = CMatrix::Identity(n, n);
  if (max_abs(p * p - id) > 1e-12) throw Error(ErrorKind::invalid_argument, "parity must square to 1");
  if (std::abs(p.trace()) > 1e-12) throw Error(ErrorKind::invalid_argument, "parity must be traceless");
  if (max_abs(p - p.adjoint()) > 1e-12) throw Error(ErrorKind::invalid_argument, "parity must be Hermitian");
}

bool MatrixHamiltonian::is_pt_symmetric(double tol) const {
  return max_abs(p * h.adjoint() * p - h) <= tol * std::max(1.0, max_abs(h));
}

MatrixHamiltonian build_two_level(const TwoLevelParams& params) {
  MatrixHamiltonian m;
  m.h.resize(2, 2);
  m.h << std::polar(params.r, params.theta), params.s, params.t, std::polar(params.r, -params.theta);
  m.p.resize(2, 2);
  m.p << 0.0, 1.0, 1.0, 0.0;
  return m;
}

MatrixHamiltonian direct_sum(const std::vector<MatrixHamiltonian>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) {
    b.validate();
    n += b.h.rows();
  }
  MatrixHamiltonian out{CMatrix::Zero(n, n), CMatrix::Zero(n, n)};
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    const Eigen::Index k = b.h.rows();
    out.h.block(at, at, k, k) = b.h;
    out.p.block(at, at, k, k) = b.p;
    at += k;
  }
  return out;
}

double discriminant(const TwoLevelParams& params) {
  const double rs = params.r * std::sin(params.theta);
  return params.s * params.t - rs * rs;
}

PtPhase reality_condition(const TwoLevelParams& params) {
  const double st = params.s * params.t;
  const double rs = params.r * std::sin(params.theta);
  const double d = st - rs * rs;
  if (std::abs(d) <= kExceptionalRel * std::max(std::abs(st), rs * rs)) return PtPhase::exceptional;
  return d > 0.0 ? PtPhase::unbroken : PtPhase::broken;
}

TwoLevelEigensystem two_level_eigensystem(const TwoLevelParams& params) {
  const auto [r, s, t, theta] = params;
  TwoLevelEigensystem out;
  out.phase = reality_condition(params);
  const double centre = r * std::cos(theta);
  if (out.phase == PtPhase::exceptional)
    throw Error(ErrorKind::degenerate, "exceptional point: eigenvectors coalesce", cplx(centre, 0.0));

  const cplx root = std::sqrt(cplx(discriminant(params), 0.0));
  out.eps_plus = centre + root;
  out.eps_minus = centre - root;
  const double st = s * t;
  out.alpha = st == 0.0 ? cplx(std::nan(""), std::nan(""))
                        : std::asin(r * std::sin(theta) / std::sqrt(cplx(st, 0.0)));

  if (out.phase == PtPhase::unbroken) {
    const double a = out.alpha.real();
    const double q = std::pow(s / t, 0.25);
    const double g = s > 0.0 ? 1.0 : -1.0;
    const double k = 1.0 / std::sqrt(2.0 * std::cos(a));
    out.v_plus.resize(2);
    out.v_plus << k * q * std::polar(1.0, 0.5 * a), k * g / q * std::polar(1.0, -0.5 * a);
    out.v_minus.resize(2);
    out.v_minus << kI * k * q * std::polar(1.0, -0.5 * a), -kI * k * g / q * std::polar(1.0, 0.5 * a);
    const int sign = s > 0.0 ? 1 : -1;
    out.pt_norms = std::array<int, 2>{sign, -sign};
    return out;
  }

  // Broken: null vectors of h - eps from whichever row is nonzero.
  const cplx h00 = std::polar(r, theta);
  const cplx h11 = std::polar(r, -theta);
  const auto null_vector = [&](cplx eps, int fallback) {
    CVector v(2);
    if (s != 0.0) v << s, eps - h00;
    else if (t != 0.0) v << eps - h11, t;
    else v << (fallback == 0 ? 1.0 : 0.0), (fallback == 0 ? 0.0 : 1.0);
    return CVector(v / v.norm());
  };
  // With s = t = 0, h is diagonal and eps_plus = h00 exactly when Im h00 > 0.
  const int plus_slot = std::abs(out.eps_plus - h00) <= std::abs(out.eps_plus - h11) ? 0 : 1;
  out.v_plus = null_vector(out.eps_plus, plus_slot);
  out.v_minus = null_vector(out.eps_minus, 1 - plus_slot);
  return out;
}

CMatrix build_c_two_level(const TwoLevelParams& params) {
  const PtPhase phase = reality_condition(params);
  if (phase != PtPhase::unbroken)
    throw Error(ErrorKind::c_undefined, std::string("C is undefined in the ") + to_string(phase) + " regime");
  const double sin_a = params.r * std::sin(params.theta) / std::sqrt(params.s * params.t);
  const double cos_a = std::sqrt((1.0 - sin_a) * (1.0 + sin_a));
  const double g = params.s > 0.0 ? 1.0 : -1.0;
  CMatrix c(2, 2);
  c << kI * g * sin_a, std::sqrt(params.s / params.t), std::sqrt(params.t / params.s), -kI * g * sin_a;
  return c / cos_a;
}

MatrixEigensystem pt_eigensystem(const MatrixHamiltonian& h, double imag_reality) {
  h.validate();
  if (!h.is_pt_symmetric()) throw Error(ErrorKind::invalid_argument, "h does not satisfy p h^dagger p = h");
  const Eigen::Index n = h.h.rows();
  const double scale = std::max(1.0, max_abs(h.h));

  Eigen::ComplexEigenSolver<CMatrix> solver(h.h, true);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::numerical_failure, "eigensolver failed");
  const CVector values = solver.eigenvalues();
  CMatrix vectors = solver.eigenvectors();
  for (Eigen::Index k = 0; k < n; ++k)
    if (std::abs(values[k].imag()) > imag_reality * scale)
      throw Error(ErrorKind::c_undefined, "complex eigenvalue: PT symmetry is broken", values[k]);
  const double cond = condition_number(vectors);
  if (cond > kDefectiveCondition) throw Error(ErrorKind::degenerate, "h is defective");

  const bool pt_invariant = max_abs(h.p * h.h.conjugate() * h.p - h.h) <= 1e-12 * scale;
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return values[a].real() < values[b].real(); });

  // Degenerate clusters: diagonalize the Hermitian form v^dagger p v inside
  // the eigenspace so the returned vectors are p-orthogonal.
  for (Eigen::Index lo = 0; lo < n;) {
    Eigen::Index hi = lo + 1;
    while (hi < n && std::abs(values[order[hi]] - values[order[hi - 1]]) <= 1e-9 * scale) ++hi;
    if (hi - lo > 1) {
      CMatrix block(n, hi - lo);
      for (Eigen::Index k = lo; k < hi; ++k) block.col(k - lo) = vectors.col(order[k]);
      if (pt_invariant) {
        // PT maps the eigenspace to itself: pick a self-conjugate basis from
        // u + PT u and i(u - PT u). On it v^dagger p w = v^T w is real.
        const Eigen::Index m = block.cols();
        CMatrix candidates(n, 2 * m);
        for (Eigen::Index j = 0; j < m; ++j) {
          const CVector mirrored = h.p * block.col(j).conjugate();
          candidates.col(2 * j) = block.col(j) + mirrored;
          candidates.col(2 * j + 1) = kI * (block.col(j) - mirrored);
        }
        Eigen::ColPivHouseholderQR<CMatrix> qr(candidates);
        CMatrix basis(n, m);
        for (Eigen::Index j = 0; j < m; ++j) basis.col(j) = candidates.col(qr.colsPermutation().indices()[j]);
        const Eigen::MatrixXd form = (basis.transpose() * basis).real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(0.5 * (form + form.transpose()));
        block = basis * sym.eigenvectors().cast<cplx>();
      } else {
        const CMatrix form = block.adjoint() * h.p * block;
        Eigen::SelfAdjointEigenSolver<CMatrix> herm(0.5 * (form + form.adjoint()));
        block = block * herm.eigenvectors();
      }
      for (Eigen::Index k = lo; k < hi; ++k) vectors.col(order[k]) = block.col(k - lo);
    }
    lo = hi;
  }

  struct Pair {
    cplx energy;
    CVector v;
    int sign;
  };
  std::vector<Pair> pairs;
  for (Eigen::Index k = 0; k < n; ++k) {
    CVector v = vectors.col(k);
    const double norm = (v.adjoint() * h.p * v).value().real();
    if (std::abs(norm) <= 1e-10 * v.squaredNorm())
      throw Error(ErrorKind::degenerate, "eigenvector has vanishing PT norm", values[k]);
    v /= std::sqrt(std::abs(norm));
    fix_phase(v, h.p);
    pairs.push_back({cplx(values[k].real(), 0.0), v, norm > 0.0 ? 1 : -1});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.sign != b.sign) return a.sign > b.sign;
    return a.energy.real() < b.energy.real();
  });

  MatrixEigensystem out;
  out.condition = cond;
  for (auto& pr : pairs) {
    out.energies.push_back(pr.energy);
    out.vectors.push_back(std::move(pr.v));
    out.pt_norm_signs.push_back(pr.sign);
  }
  return out;
}

CMatrix spectral_c_operator(const MatrixHamiltonian& h, double imag_reality) {
  const MatrixEigensystem system = pt_eigensystem(h, imag_reality);
  const Eigen::Index n = h.h.rows();
  CMatrix c = CMatrix::Zero(n, n);
  for (const CVector& v : system.vectors) c += v * v.adjoint() * h.p;
  return c;
}

cplx matrix_cpt_inner_product(const CVector& u, const CVector& v, const CMatrix& c, const CMatrix& p) {
  const Eigen::Index n = u.size();
  if (v.size() != n) throw Error(ErrorKind::invalid_argument, "vector length mismatch");
  require_square(c, n, "C");
  require_square(p, n, "parity matrix");
  return (u.adjoint() * p * c * v).value();
}

CompletenessResult cpt_completeness(const std::vector<CVector>& vectors, const CMatrix& c,
                                    const CMatrix& p) {
  const CMatrix v = columns(vectors);
  const Eigen::Index n = v.rows();
  require_square(c, n, "C");
  require_square(p, n, "parity matrix");
  const CMatrix sum = v * v.adjoint() * p * c;
  return {max_abs(sum - CMatrix::Identity(n, n)), condition_number(v)};
}

CompletenessResult cpt_completeness(const TwoLevelEigensystem& system, const CMatrix& c,
                                    const CMatrix& p) {
  return cpt_completeness(std::vector<CVector>{system.v_plus, system.v_minus}, c, p);
}

std::vector<CVector> time_evolve(const MatrixHamiltonian& h, const CVector& psi0,
                                 const std::vector<double>& times) {
  const Eigen::Index n = h.h.rows();
  if (h.h.cols() != n || n == 0) throw Error(ErrorKind::invalid_argument, "h must be square");
  if (psi0.size() != n) throw Error(ErrorKind::invalid_argument, "state length mismatch");
  Eigen::ComplexEigenSolver<CMatrix> solver(h.h, true);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::numerical_failure, "eigensolver failed");
  const CMatrix& v = solver.eigenvectors();
  if (condition_number(v) > kDefectiveCondition)
    throw Error(ErrorKind::degenerate, "h is defective; no eigenbasis for the exponential",
                solver.eigenvalues()[0]);
  const CVector coeff = v.partialPivLu().solve(psi0);
  std::vector<CVector> out;
  out.reserve(times.size());
  for (const double t : times) {
    const CVector phases = (-kI * t * solver.eigenvalues()).array().exp().matrix();
    out.push_back(v * phases.cwiseProduct(coeff));
  }
  return out;
}

CParityReport c_parity_commutation(const CMatrix& c, const CMatrix& p) {
  require_square(p, c.rows(), "parity matrix");
  CParityReport out;
  out.split = {c, c.real(), c.imag()};
  if (p.imag().cwiseAbs().maxCoeff() != 0.0)
    throw Error(ErrorKind::invalid_argument, "C_R/C_I relations need a real parity matrix");
  const Eigen::MatrixXd pr = p.real();
  out.real_commutator = (out.split.c_real * pr - pr * out.split.c_real).cwiseAbs().maxCoeff();
  out.imag_anticommutator = (out.split.c_imag * pr + pr * out.split.c_imag).cwiseAbs().maxCoeff();
  return out;
}

std::vector<cplx> characteristic_polynomial(const CMatrix& m) {
  const Eigen::Index n = m.rows();
  require_square(m, n, "matrix");
  // Faddeev-LeVerrier.
  std::vector<cplx> a(n + 1);
  a[n] = 1.0;
  CMatrix mk = CMatrix::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    mk = m * mk + a[n - k + 1] * CMatrix::Identity(n, n);
    a[n - k] = -(m * mk).trace() / static_cast<double>(k);
  }
  return a;
}

PhaseScan exceptional_point_scan(double r, double theta, std::pair<double, double> s_range,
                                 std::pair<double, double> t_range, int s_resolution,
                                 int t_resolution) {
  if (s_resolution < 2 || t_resolution < 2)
    throw Error(ErrorKind::invalid_argument, "resolution must be >= 2 per axis");
  const auto check_range = [](std::pair<double, double> range, const char* name) {
    if (!std::isfinite(range.first) || !std::isfinite(range.second) || !(range.second > range.first))
      throw Error(ErrorKind::invalid_argument, std::string(name) + " range is empty");
  };
  check_range(s_range, "s");
  check_range(t_range, "t");

  const auto node = [](std::pair<double, double> range, int count, int i) {
    if (i == count - 1) return range.second;
    return range.first + (range.second - range.first) * i / (count - 1);
  };

  PhaseScan out;
  out.cells.resize(static_cast<std::size_t>(s_resolution) * t_resolution);
  std::vector<std::vector<double>> crossings(s_resolution);
  parallel_for(static_cast<std::size_t>(s_resolution), [&](std::size_t si) {
    const double s = node(s_range, s_resolution, static_cast<int>(si));
    std::vector<PtPhase> column(t_resolution);
    for (int ti = 0; ti < t_resolution; ++ti) {
      const double t = node(t_range, t_resolution, ti);
      column[ti] = reality_condition({r, s, t, theta});
      out.cells[si * t_resolution + ti] = {s, t, column[ti]};
    }
    const auto f = [&](double t) { return discriminant({r, s, t, theta}); };
    for (int ti = 0; ti + 1 < t_resolution; ++ti) {
      const PtPhase a = column[ti];
      const PtPhase b = column[ti + 1];
      if ((a == PtPhase::unbroken && b == PtPhase::broken) || (a == PtPhase::broken && b == PtPhase::unbroken)) {
        const double lo = node(t_range, t_resolution, ti);
        const double hi = node(t_range, t_resolution, ti + 1);
        crossings[si].push_back(find_root_1d(f, lo, hi, 1e-14 * std::max(1.0, std::abs(hi))));
      }
    }
    for (int ti = 1; ti + 1 < t_resolution; ++ti) {
      if (column[ti] != PtPhase::exceptional) continue;
      const PtPhase a = column[ti - 1];
      const PtPhase b = column[ti + 1];
      if (a != b && a != PtPhase::exceptional && b != PtPhase::exceptional)
        crossings[si].push_back(node(t_range, t_resolution, ti));
    }
    std::sort(crossings[si].begin(), crossings[si].end());
  });
  for (int si = 0; si < s_resolution; ++si)
    for (const double t : crossings[si]) out.boundary.emplace_back(node(s_range, s_resolution, si), t);
  return out;
}

}  // namespace ptqm
