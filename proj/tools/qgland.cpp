// qgland: solve, bound and verify on quantum graphs.
#include <qgland/harness.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace qgland;

namespace {

struct Common {
  std::string target;
  std::vector<std::string> params;
  double h = 0.01;
};

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, double> out;
  for (const auto& s : kv) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::BadParameters, "expected key=value, got '" + s + "'");
    auto v = parse_double(s.substr(eq + 1));
    if (!v) fail(ErrorKind::BadParameters, "bad value in '" + s + "'");
    out[s.substr(0, eq)] = *v;
  }
  return out;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("target", c.target, "case-study name or graph-spec file")->required();
  cmd->add_option("params", c.params, "case parameters as key=value");
  cmd->add_option("--h", c.h, "mesh step")->check(CLI::PositiveNumber);
}

Manifest base_manifest(const Problem& p, const std::map<std::string, double>& params, double h) {
  Manifest m;
  m.set("tool_version", std::string(tool_version));
  m.set("problem", p.name);
  m.set("spec_hash", hex64(fnv1a(p.spec_text)));
  for (const auto& [k, v] : params) m.set("param." + k, v);
  m.set("h", h);
  return m;
}

/// Eigenfunction for bound/verify: an explicit index, the constructed
/// tetrahedron state, the ground state, or none when only E is known.
std::optional<Eigenpair> pick_eigenpair(const Problem& p, const std::map<std::string, double>& params, double h,
                                        std::optional<std::size_t> index, bool energy_given) {
  std::optional<Eigenpair> psi;
  if (index) {
    psi = solve_eigs(p.graph, p.potential, h, *index + 1).at(*index);
  } else if (p.name == "tetrahedron") {
    auto cs = build_case_study("tetrahedron", params);
    const auto cells = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / h));
    psi = tetrahedron_eigenfunction(cs, cells);
  } else if (!energy_given) {
    psi = solve_eigs(p.graph, p.potential, h, 1).at(0);
  }
  if (psi) normalize(*psi);
  return psi;
}

int run_solve(const Common& c, std::size_t k, bool richardson, const std::string& out) {
  auto params = parse_params(c.params);
  auto p = load_problem(c.target, params);
  std::vector<Eigenpair> pairs;
  std::vector<double> extrap;
  if (richardson) {
    auto sp = solve_extrapolated(p.graph, p.potential, c.h, k);
    pairs = sp.finest;
    extrap = sp.values;
  } else {
    pairs = solve_eigs(p.graph, p.potential, c.h, k);
  }
  const fs::path dir(out);
  auto m = base_manifest(p, params, c.h);
  m.set("k", static_cast<double>(k));
  m.set("richardson", richardson ? "1" : "0");
  m.set("energy_shift", p.energy_shift);
  write_atomic(dir / "spec.txt", p.spec_text);
  write_atomic(dir / "eigenvalues.csv", eigenvalues_csv(pairs, extrap));
  std::string outputs = "spec.txt eigenvalues.csv";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto name = "psi_" + std::to_string(i) + ".csv";
    write_atomic(dir / name, eigenfunction_csv(p.graph, pairs[i]));
    outputs += " " + name;
  }
  m.set("outputs", outputs);
  write_atomic(dir / "manifest.txt", m.str());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double E = (extrap.empty() ? pairs[i].E : extrap[i]) - p.energy_shift;
    std::cout << "E[" << i << "] = " << fmt(E) << "\n";
  }
  return 0;
}

int run_bound(const Common& c, const std::string& method, std::optional<std::size_t> index, std::optional<double> E_opt,
              int samples, double tau, const std::string& out) {
  auto params = parse_params(c.params);
  auto p = load_problem(c.target, params);
  if (!E_opt && params.count("E")) E_opt = params.at("E");
  auto psi = pick_eigenpair(p, params, c.h, index, E_opt.has_value());
  double E = psi ? psi->E : *E_opt + p.energy_shift;
  if (E_opt && !psi) E = *E_opt + p.energy_shift;
  BoundOptions opt;
  opt.tau = tau;
  opt.thresholds.tau = tau;
  const Eigenpair* pp = psi ? &*psi : nullptr;
  std::vector<EnvelopeRow> rows;
  if (method == "auto") {
    rows = auto_envelope(p.graph, p.potential, E, pp, samples, opt);
  } else {
    rows = sample_envelope(p.graph, build_envelope(p.graph, p.potential, E, pp, method, opt), samples);
  }
  const auto csv = envelope_csv(p.graph, rows);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_atomic(out, csv);
    auto m = base_manifest(p, params, c.h);
    m.set("method", method);
    m.set("E", E - p.energy_shift);
    m.set("energy_shift", p.energy_shift);
    m.set("samples", static_cast<double>(samples));
    m.set("tau", tau);
    m.set("outputs", fs::path(out).filename().string());
    write_atomic(fs::path(out).string() + ".manifest.txt", m.str());
  }
  return 0;
}

int run_verify(const Common& c, const std::string& eigs, std::size_t index, const std::vector<std::string>& envs) {
  auto params = parse_params(c.params);
  auto p = load_problem(c.target, params);
  Eigenpair psi;
  if (!eigs.empty()) {
    const fs::path dir(eigs);
    double E = 0.0;
    for (const auto& row : detail::csv_rows(read_file(dir / "eigenvalues.csv"), 2, nullptr))
      if (row[0] == std::to_string(index)) E = detail::number(0, row[1]);
    psi = read_eigenfunction(p.graph, read_file(dir / ("psi_" + std::to_string(index) + ".csv")), E);
  } else {
    const bool explicit_index = index > 0 || p.name != "tetrahedron";
    psi = *pick_eigenpair(p, params, c.h, explicit_index ? std::optional<std::size_t>(index) : std::nullopt, false);
  }
  bool all = true;
  for (const auto& f : envs) {
    auto rows = read_envelope(p.graph, read_file(f));
    auto r = check_rows(psi, rows);
    all = all && r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << f << " method=" << r.method << " samples=" << r.grid.size()
              << " worst=" << fmt(r.worst) << " at " << p.graph.edge(r.worst_at.edge).name << ":"
              << fmt(r.worst_at.s) << " violations=" << r.violations.size() << "\n";
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenfunction envelopes on quantum graphs"};
  app.set_help_flag("--help", "print this help");
  app.require_subcommand(1);
  const char* env_cfg = std::getenv("QGLAND_CONFIG");
  app.set_config("--config", env_cfg ? env_cfg : "", "key=value defaults (also QGLAND_CONFIG)");

  Common sc;
  std::size_t k = 4;
  bool richardson = false;
  std::string out_dir = "qgland_out";
  auto* solve = app.add_subcommand("solve", "lowest eigenpairs");
  add_common(solve, sc);
  solve->add_option("--k", k, "number of eigenpairs")->check(CLI::PositiveNumber);
  solve->add_flag("--richardson", richardson, "report h -> h/2 extrapolated eigenvalues");
  solve->add_option("--out", out_dir, "archive directory");

  Common bc;
  std::string method = "auto", bound_out;
  std::optional<std::size_t> index;
  std::optional<double> energy;
  int samples = 512;
  double tau = -1.0;
  auto* bound = app.add_subcommand("bound", "sampled envelope CSV");
  add_common(bound, bc);
  bound->add_option("--method", method, "bound family")->check(CLI::IsMember(bound_methods()));
  bound->add_option("--index", index, "eigenpair index");
  bound->add_option("--E", energy, "energy when no eigenfunction is used");
  bound->add_option("--samples", samples, "cells per edge")->check(CLI::PositiveNumber);
  bound->add_option("--tau", tau, "transition threshold");
  bound->add_option("--out", bound_out, "output CSV (stdout if omitted)");

  Common vc;
  std::string eigs;
  std::size_t vindex = 0;
  std::vector<std::string> envs;
  auto* verify = app.add_subcommand("verify", "domination report");
  add_common(verify, vc);
  verify->add_option("--eigs", eigs, "archive directory written by solve");
  verify->add_option("--index", vindex, "eigenpair index");
  verify->add_option("--envelope", envs, "envelope CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*solve) return run_solve(sc, k, richardson, out_dir);
    if (*bound) return run_bound(bc, method, index, energy, samples, tau, bound_out);
    if (*verify) return run_verify(vc, eigs, vindex, envs);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(err.kind());
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 2;
}
