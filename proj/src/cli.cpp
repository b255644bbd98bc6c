#include "ptqm/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ptqm/continuum.hpp"
#include "ptqm/operator_algebra.hpp"

namespace ptqm::cli {

using nlohmann::json;

namespace {

json pair_of(cplx z) { return json::array({z.real(), z.imag()}); }

json matrix_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(pair_of(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

json real_matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(pair_of(v[i]));
  return out;
}

void write_json(std::ostringstream& os, const json& v, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) { os << "{}"; return; }
      os << "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << inner << json(it.key()).dump() << ": ";
        write_json(os, it.value(), indent + 1);
      }
      os << "\n" << pad << "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) { os << "[]"; return; }
      bool flat = true;
      for (const auto& e : v) flat = flat && !e.is_structured();
      if (flat) {
        os << "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) os << ", ";
          write_json(os, v[i], indent + 1);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",\n";
        os << inner;
        write_json(os, v[i], indent + 1);
      }
      os << "\n" << pad << "]";
      return;
    }
    case json::value_t::number_float: {
      const double x = v.get<double>();
      if (std::isfinite(x)) os << format_double(x);
      else os << "null";
      return;
    }
    default:
      os << v.dump();
  }
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out + "\n";
}

const char* backend_name(Backend b) { return b == Backend::spectral ? "spectral" : "shooting"; }

double shift_for(const RunConfig& config) {
  return config.contour_shift ? *config.contour_shift : default_contour_shift(config.nu, config.levels);
}

// Spectral solve on the horizontal line carrying the Hermite basis, so that
// eigenfunction samples and kernels avoid the real-axis conditioning loss.
EigenSolution solve_on_line(const RunConfig& config) {
  if (config.nu >= 2.0)
    throw Error(ErrorKind::unsupported_regime, "nu >= 2 needs --backend shooting");
  SturmLiouvilleProblem problem;
  problem.nu = config.nu;
  problem.basis_size = config.basis_size;
  problem.tolerances = config.tolerances;
  problem.contour_shift = shift_for(config);
  problem.grid = build_shifted_line(config.grid_points, config.grid_extent, *problem.contour_shift);
  return solve_spectrum(problem, config.levels);
}

EigenSolution solve_on_wedge(const RunConfig& config) {
  SturmLiouvilleProblem problem;
  problem.nu = config.nu;
  problem.tolerances = config.tolerances;
  problem.grid = build_wedge_contour(WedgeSpec::for_nu(config.nu), default_wedge_radius(config.nu, config.levels),
                                     config.grid_points, shift_for(config));
  return solve_spectrum_shooting(problem, config.levels);
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
  return buf;
}

std::string dump_json(const json& value) {
  std::ostringstream os;
  write_json(os, value, 0);
  os << "\n";
  return os.str();
}

Format RunConfig::resolved_format() const {
  if (format) return *format;
  return command == Command::sweep ? Format::csv : Format::json;
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::invalid_argument, what); };
  tolerances.validate();
  switch (command) {
    case Command::spectrum:
    case Command::verify:
    case Command::ckernel:
      if (!(nu >= 0.0) || !std::isfinite(nu)) fail("--nu must be a finite number >= 0");
      if (levels < 1) fail("--levels must be >= 1");
      if (!(grid_extent > 0.0) || !std::isfinite(grid_extent)) fail("--grid-extent must be positive");
      if (contour_shift && (!(*contour_shift >= 0.0) || !std::isfinite(*contour_shift)))
        fail("--contour-shift must be >= 0");
      if (backend == Backend::shooting && command == Command::spectrum) {
        if (grid_points < 15) fail("--grid-points must be >= 15 for the shooting backend");
      } else {
        if (grid_points < 2) fail("--grid-points must be >= 2");
        if (2 * levels > basis_size) fail("--basis-size must be at least twice --levels");
        if (nu >= 2.0) fail("the spectral backend needs nu < 2; use --backend shooting");
      }
      break;
    case Command::two_level:
      for (double x : {params.r, params.s, params.t, params.theta})
        if (!std::isfinite(x)) fail("matrix parameters must be finite");
      break;
    case Command::sweep:
      for (double x : {params.r, params.theta, s_min, s_max, t_min, t_max})
        if (!std::isfinite(x)) fail("sweep parameters must be finite");
      if (!(s_max > s_min) || !(t_max > t_min)) fail("sweep range is empty");
      if (s_resolution < 2 || t_resolution < 2) fail("--resolution must be >= 2");
      break;
  }
}

RunResult run_spectrum(const RunConfig& config) {
  config.validate();
  const EigenSolution solution =
      config.backend == Backend::spectral ? solve_on_line(config) : solve_on_wedge(config);

  bool converged = true;
  if (config.backend == Backend::spectral)
    for (std::size_t n = 0; n < solution.levels(); ++n)
      if (solution.pt_norm_signs[n] != 0 && !(eigen_residual(solution, n) < config.tolerances.residual))
        converged = false;

  RunResult result;
  if (config.resolved_format() == Format::csv) {
    result.text = csv_line({"n", "energy_re", "energy_im", "pt_norm_sign"});
    for (std::size_t n = 0; n < solution.levels(); ++n)
      result.text += csv_line({std::to_string(n), format_double(solution.energies[n].real()),
                               format_double(solution.energies[n].imag()),
                               std::to_string(solution.pt_norm_signs[n])});
  } else {
    json levels = json::array();
    for (std::size_t n = 0; n < solution.levels(); ++n)
      levels.push_back({{"n", n},
                        {"energy_re", solution.energies[n].real()},
                        {"energy_im", solution.energies[n].imag()},
                        {"pt_norm_sign", solution.pt_norm_signs[n]}});
    json doc = {{"nu", config.nu},
                {"levels", levels},
                {"backend", backend_name(config.backend)},
                {"converged", converged},
                {"phase", solution.broken ? "broken" : "unbroken"},
                {"contour_shift", config.backend == Backend::spectral ? solution.contour_shift : shift_for(config)}};
    doc["basis_size"] = config.backend == Backend::spectral ? json(config.basis_size) : json(nullptr);
    result.text = dump_json(doc);
  }
  if (solution.broken && config.require_unbroken) result.exit_code = exit_code::phase;
  else if (!converged) result.exit_code = exit_code::numerical;
  return result;
}

RunResult run_verify(const RunConfig& config) {
  config.validate();
  const EigenSolution solution = solve_on_line(config);
  const VerificationReport report =
      run_verification_suite(solution, default_test_functions(solution.grid), config.tolerances);
  RunResult result;
  if (config.resolved_format() == Format::csv) {
    result.text = csv_line({"check", "residual", "tolerance", "pass"});
    for (const auto& [name, check] : report.checks)
      result.text += csv_line({name, format_double(check.residual), format_double(check.tolerance),
                               check.pass ? "true" : "false"});
  } else {
    json doc = json::object();
    for (const auto& [name, check] : report.checks)
      doc[name] = {{"residual", check.residual}, {"tolerance", check.tolerance}, {"pass", check.pass}};
    result.text = dump_json(doc);
  }
  result.exit_code = report.all_pass() ? exit_code::ok : exit_code::verification_failed;
  return result;
}

RunResult run_ckernel(const RunConfig& config) {
  config.validate();
  const EigenSolution solution = solve_on_line(config);
  const KernelOnGrid c = build_c_kernel(solution);
  const Grid& grid = c.grid;
  RunResult result;
  if (config.resolved_format() == Format::csv) {
    result.text = csv_line({"i", "j", "x_re", "x_im", "y_re", "y_im", "c_re", "c_im"});
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      for (Eigen::Index j = 0; j < grid.size(); ++j)
        result.text += csv_line({std::to_string(i), std::to_string(j), format_double(grid.points[i].real()),
                                 format_double(grid.points[i].imag()), format_double(grid.points[j].real()),
                                 format_double(grid.points[j].imag()), format_double(c.values(i, j).real()),
                                 format_double(c.values(i, j).imag())});
  } else {
    json doc = {{"nu", config.nu},
                {"levels", config.levels},
                {"basis_size", config.basis_size},
                {"contour_shift", solution.contour_shift},
                {"points", vector_json(grid.points)},
                {"weights", vector_json(grid.weights)},
                {"values", matrix_json(c.values)}};
    result.text = dump_json(doc);
  }
  return result;
}

RunResult run_two_level(const RunConfig& config) {
  config.validate();
  const TwoLevelParams& p = config.params;
  const PtPhase phase = reality_condition(p);
  json doc = {{"phase", to_string(phase)},
              {"params", {{"r", p.r}, {"s", p.s}, {"t", p.t}, {"theta", p.theta}}}};
  std::vector<std::pair<std::string, cplx>> rows;

  if (phase == PtPhase::exceptional) {
    const cplx eps(p.r * std::cos(p.theta), 0.0);
    doc["eigenvalue"] = pair_of(eps);
    rows.emplace_back("eigenvalue", eps);
  } else {
    const TwoLevelEigensystem sys = two_level_eigensystem(p);
    doc["eps_plus"] = pair_of(sys.eps_plus);
    doc["eps_minus"] = pair_of(sys.eps_minus);
    doc["alpha"] = pair_of(sys.alpha);
    doc["v_plus"] = vector_json(sys.v_plus);
    doc["v_minus"] = vector_json(sys.v_minus);
    rows.emplace_back("eps_plus", sys.eps_plus);
    rows.emplace_back("eps_minus", sys.eps_minus);
    rows.emplace_back("alpha", sys.alpha);
    if (phase == PtPhase::unbroken) {
      const MatrixHamiltonian h = build_two_level(p);
      const CMatrix c = build_c_two_level(p);
      const CMatrix id = CMatrix::Identity(2, 2);
      const CParityReport parity = c_parity_commutation(c, h.p);
      const CompletenessResult complete = cpt_completeness(sys, c, h.p);
      json residuals = {
          {"c_squared", (c * c - id).cwiseAbs().maxCoeff()},
          {"c_commutes_h", (c * h.h - h.h * c).cwiseAbs().maxCoeff()},
          {"c_v_plus", (c * sys.v_plus - sys.pt_norms->at(0) * sys.v_plus).cwiseAbs().maxCoeff()},
          {"c_v_minus", (c * sys.v_minus - sys.pt_norms->at(1) * sys.v_minus).cwiseAbs().maxCoeff()},
          {"cpt_completeness", complete.residual},
          {"c_real_commutator", parity.real_commutator},
          {"c_imag_anticommutator", parity.imag_anticommutator},
          {"c_vs_spectral", (c - spectral_c_operator(h)).cwiseAbs().maxCoeff()}};
      doc["pt_norms"] = *sys.pt_norms;
      doc["c"] = matrix_json(c);
      doc["c_real"] = real_matrix_json(parity.split.c_real);
      doc["c_imag"] = real_matrix_json(parity.split.c_imag);
      doc["condition"] = complete.condition;
      doc["residuals"] = residuals;
      for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j)
          rows.emplace_back("c" + std::to_string(i) + std::to_string(j), c(i, j));
      for (auto it = residuals.begin(); it != residuals.end(); ++it)
        rows.emplace_back(it.key(), cplx(it.value().get<double>(), 0.0));
    }
  }

  RunResult result;
  if (config.resolved_format() == Format::csv) {
    result.text = csv_line({"quantity", "re", "im"});
    result.text += csv_line({"phase_" + std::string(to_string(phase)), "1", "0"});
    for (const auto& [name, z] : rows) result.text += csv_line({name, format_double(z.real()), format_double(z.imag())});
  } else {
    result.text = dump_json(doc);
  }
  if (phase != PtPhase::unbroken && config.require_unbroken) result.exit_code = exit_code::phase;
  return result;
}

RunResult run_sweep(const RunConfig& config) {
  config.validate();
  const PhaseScan scan = exceptional_point_scan(config.params.r, config.params.theta, {config.s_min, config.s_max},
                                                {config.t_min, config.t_max}, config.s_resolution,
                                                config.t_resolution);
  std::string boundary_csv = csv_line({"s", "t"});
  for (const auto& [s, t] : scan.boundary) boundary_csv += csv_line({format_double(s), format_double(t)});

  RunResult result;
  if (config.resolved_format() == Format::csv) {
    result.text = csv_line({"s", "t", "phase"});
    for (const ScanCell& cell : scan.cells)
      result.text += csv_line({format_double(cell.s), format_double(cell.t), to_string(cell.phase)});
  } else {
    json cells = json::array();
    for (const ScanCell& cell : scan.cells) cells.push_back({{"s", cell.s}, {"t", cell.t}, {"phase", to_string(cell.phase)}});
    json boundary = json::array();
    for (const auto& [s, t] : scan.boundary) boundary.push_back(json::array({s, t}));
    result.text = dump_json({{"r", config.params.r}, {"theta", config.params.theta}, {"cells", cells}, {"boundary", boundary}});
  }
  std::string boundary_path = config.boundary_path;
  if (boundary_path.empty() && config.output_path != "-") boundary_path = config.output_path + ".boundary.csv";
  if (!boundary_path.empty()) result.extra.push_back({boundary_path, boundary_csv});
  if (config.require_unbroken)
    for (const ScanCell& cell : scan.cells)
      if (cell.phase != PtPhase::unbroken) result.exit_code = exit_code::phase;
  return result;
}

RunResult run(const RunConfig& config, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::spectrum: return run_spectrum(config);
      case Command::verify: return run_verify(config);
      case Command::ckernel: return run_ckernel(config);
      case Command::two_level: return run_two_level(config);
      case Command::sweep: return run_sweep(config);
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::invalid_argument:
      case ErrorKind::unsupported_regime:
      case ErrorKind::bracket:
        return {exit_code::config, {}, {}};
      case ErrorKind::c_undefined:
        return {config.require_unbroken ? exit_code::phase : exit_code::numerical, {}, {}};
      default:
        return {exit_code::numerical, {}, {}};
    }
  }
  return {exit_code::config, {}, {}};
}

int emit_output(const std::string& text, const std::string& path, std::ostream& out, std::ostream& err) {
  if (path == "-") {
    out << text;
    out.flush();
    if (!out) {
      err << "error: failed writing to standard output\n";
      return exit_code::numerical;
    }
    return exit_code::ok;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (file) file << text;
  if (file) file.close();
  if (!file) {
    err << "error: cannot write " << path << "\n";
    return exit_code::numerical;
  }
  return exit_code::ok;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PT-symmetric Hamiltonians: spectra, C operators, verification"};
  app.require_subcommand(1);

  RunConfig config;
  std::string format = "";
  std::string backend = "spectral";
  std::optional<double> tol_eig, tol_residual, tol_imag, tol_truncation;
  std::optional<int> resolution;

  const auto add_output = [&](CLI::App* sub) {
    sub->add_option("--output,-o", config.output_path, "Output path, - for standard output")
        ->capture_default_str();
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--require-unbroken", config.require_unbroken, "Exit 4 if PT symmetry is broken");
  };
  const auto add_continuum = [&](CLI::App* sub) {
    sub->add_option("--nu", config.nu, "Deformation exponent nu >= 0")->capture_default_str();
    sub->add_option("--levels", config.levels, "Number of levels")->capture_default_str();
    sub->add_option("--basis-size", config.basis_size, "Hermite basis size")->capture_default_str();
    sub->add_option("--grid-points", config.grid_points, "Contour sample count")->capture_default_str();
    sub->add_option("--grid-extent", config.grid_extent, "Half-length of the sampling line")
        ->capture_default_str();
    sub->add_option("--contour-shift", config.contour_shift, "Basis line Im x = -c (default: automatic)");
    sub->add_option("--tol-eig", tol_eig, "Eigenvalue tolerance");
    sub->add_option("--tol-residual", tol_residual, "Identity-check tolerance (also caps --tol-truncation)");
    sub->add_option("--tol-imag", tol_imag, "Largest |Im E| counted as real");
    sub->add_option("--tol-truncation", tol_truncation, "Tolerance for truncation-limited identities");
    add_output(sub);
  };

  CLI::App* spectrum = app.add_subcommand("spectrum", "Eigenvalues and PT norm signs");
  add_continuum(spectrum);
  spectrum->add_option("--backend", backend, "spectral or shooting")
      ->check(CLI::IsMember({"spectral", "shooting"}))
      ->capture_default_str();
  CLI::App* verify = app.add_subcommand("verify", "Operator identity checks");
  add_continuum(verify);
  CLI::App* ckernel = app.add_subcommand("ckernel", "C kernel on the sampling line");
  add_continuum(ckernel);

  CLI::App* two_level = app.add_subcommand("two-level", "2x2 model: eigensystem, C, checks");
  CLI::App* sweep = app.add_subcommand("sweep", "Phase diagram in (s, t)");
  for (CLI::App* sub : {two_level, sweep}) {
    sub->add_option("--r", config.params.r, "r")->required();
    sub->add_option("--theta", config.params.theta, "theta in radians")->required();
    add_output(sub);
  }
  two_level->add_option("--s", config.params.s, "s")->required();
  two_level->add_option("--t", config.params.t, "t")->required();
  sweep->add_option("--s-min", config.s_min)->capture_default_str();
  sweep->add_option("--s-max", config.s_max)->capture_default_str();
  sweep->add_option("--t-min", config.t_min)->capture_default_str();
  sweep->add_option("--t-max", config.t_max)->capture_default_str();
  sweep->add_option("--resolution", resolution, "Nodes per axis");
  sweep->add_option("--s-resolution", config.s_resolution)->capture_default_str();
  sweep->add_option("--t-resolution", config.t_resolution)->capture_default_str();
  sweep->add_option("--boundary", config.boundary_path, "Boundary polyline CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::config;
  }

  if (*spectrum) config.command = Command::spectrum;
  else if (*verify) config.command = Command::verify;
  else if (*ckernel) config.command = Command::ckernel;
  else if (*two_level) config.command = Command::two_level;
  else config.command = Command::sweep;

  config.backend = backend == "shooting" ? Backend::shooting : Backend::spectral;
  if (!format.empty()) config.format = format == "csv" ? Format::csv : Format::json;
  if (resolution) config.s_resolution = config.t_resolution = *resolution;
  if (tol_eig) config.tolerances.eig_abs = *tol_eig;
  if (tol_imag) config.tolerances.imag_reality = *tol_imag;
  if (tol_residual) {
    config.tolerances.residual = *tol_residual;
    config.tolerances.truncation = std::min(config.tolerances.truncation, *tol_residual);
  }
  if (tol_truncation) config.tolerances.truncation = *tol_truncation;

  const RunResult result = run(config, err);
  if (result.text.empty() && result.exit_code != exit_code::ok) return result.exit_code;
  if (const int io = emit_output(result.text, config.output_path, out, err); io != exit_code::ok) return io;
  for (const FileOutput& extra : result.extra)
    if (const int io = emit_output(extra.text, extra.path, out, err); io != exit_code::ok) return io;
  return result.exit_code;
}

}  // namespace ptqm::cli
