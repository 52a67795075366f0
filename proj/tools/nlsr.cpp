// Command-line front end: ground states, m-curves, spectra, evolution and
// dynamical classification, each run leaving a manifest next to its outputs.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "nlsr/classify.hpp"
#include "nlsr/config.hpp"
#include "nlsr/csv.hpp"
#include "nlsr/evolve.hpp"
#include "nlsr/groundstate.hpp"
#include "nlsr/initdata.hpp"
#include "nlsr/manifest.hpp"
#include "nlsr/modes.hpp"
#include "nlsr/report.hpp"
#include "nlsr/snapshot.hpp"
#include "nlsr/spectrum.hpp"

namespace fs = std::filesystem;
using namespace nlsr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUndecided = 4;

/// Options shared by every subcommand. Unset flags leave the config file (or defaults) in charge.
struct Common {
  std::string config_path;
  std::optional<int> d;
  std::optional<double> p, omega, rmax, dt, t_max;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app, bool with_time = false) {
    app->add_option("--config", config_path, "key = value config file or a previous run manifest");
    app->add_option("--d", d, "spatial dimension");
    app->add_option("--p", p, "subcritical exponent");
    app->add_option("--omega", omega, "frequency");
    app->add_option("--n", n, "grid nodes");
    app->add_option("--rmax", rmax, "outer radius");
    app->add_option("--seed", seed, "random seed");
    if (with_time) {
      app->add_option("--dt", dt, "base time step");
      app->add_option("--t-max", t_max, "final time");
    }
  }

  RunConfig resolve(std::vector<std::pair<std::string, std::string>> extra = {}) const {
    std::string base;
    if (!config_path.empty()) base = config_text_of(read_file(config_path));
    auto& o = extra;
    auto fmt = detail::format_double;
    if (d) o.emplace_back("d", std::to_string(*d));
    if (p) o.emplace_back("p", fmt(*p));
    if (omega) o.emplace_back("omega", fmt(*omega));
    if (n) o.emplace_back("n", std::to_string(*n));
    if (rmax) o.emplace_back("r_max", fmt(*rmax));
    if (dt) o.emplace_back("dt", fmt(*dt));
    if (t_max) o.emplace_back("t_max", fmt(*t_max));
    if (seed) o.emplace_back("seed", std::to_string(*seed));
    return parse_config(override_config_text(base, o));
  }
};

GridPtr grid_of(const RunConfig& c) { return make_grid(c.d, c.n, c.r_max); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path manifest_path(const fs::path& out) {
  auto m = out;
  m += ".manifest.json";
  return m;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

ClassifyConfig classify_config(const RunConfig& c) {
  ClassifyConfig cc;
  cc.params = c.model();
  cc.dt = c.classify_dt;
  cc.order = c.classify_order;
  cc.horizon = c.horizon;
  cc.horizon_max = c.horizon_max;
  cc.sample_interval = c.sample_interval;
  cc.absorb_width = c.absorb_width;
  cc.absorb_strength = c.absorb_strength;
  cc.resolve_cells = c.resolve_cells;
  cc.delta_star_ratio = c.delta_star_ratio;
  cc.decay_factor = c.decay_factor;
  cc.eps_rel = c.eps_rel;
  cc.strict = c.strict;
  cc.seed = c.seed;
  return cc;
}

ThresholdTable threshold_table(const RunConfig& c) {
  return ThresholdTable(build_mcurve(default_curve_omegas(c.omega), c.model(), nullptr), c.omega, c.eps_rel);
}

// ---------------------------------------------------------------- subcommands

int cmd_groundstate(const Common& common, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = common.resolve();
  const auto gs = solve_stationary(c.model(), grid_of(c), StationaryProblem::Combined);
  ensure_parent(out);
  write_snapshot(gs.profile, out);

  RunManifest m;
  m.command = "groundstate";
  m.config = c;
  m.derived = groundstate_json(gs);
  m.add_output(out);
  m.counters = {{"wall_seconds", seconds_since(t0)}, {"newton_iterations", gs.newton_iterations}};
  m.write(manifest_path(out));
  std::cout << "m_omega = " << gs.action << "  M = " << gs.mass_value << "  phi0 = " << gs.central_value
            << "  residual = " << gs.residual_H1 << '\n';
  return kExitOk;
}

int cmd_mcurve(const Common& common, std::optional<double> wmin, std::optional<double> wmax,
               std::optional<int> samples, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, std::string>> extra;
  if (wmin) extra.emplace_back("omega_min", detail::format_double(*wmin));
  if (wmax) extra.emplace_back("omega_max", detail::format_double(*wmax));
  if (samples) extra.emplace_back("samples", std::to_string(*samples));
  const RunConfig c = common.resolve(extra);

  std::vector<double> omegas(c.samples);
  const double ratio = std::log(c.omega_max / c.omega_min) / (c.samples - 1);
  for (int i = 0; i < c.samples; ++i) omegas[i] = c.omega_min * std::exp(ratio * i);
  omegas.back() = c.omega_max;
  const auto curve = build_mcurve(omegas, c.model(), nullptr);

  ensure_parent(out);
  write_file_atomic(out, csv::mcurve(curve.samples()));
  RunManifest m;
  m.command = "mcurve";
  m.config = c;
  m.derived = {{"monotone", curve.is_monotone()}, {"grid_rule", "r_max = max(40, 12/sqrt(omega)), h = 40/8192"}};
  m.add_output(out);
  m.counters = {{"wall_seconds", seconds_since(t0)}, {"solves", c.samples}};
  m.write(manifest_path(out));
  std::cout << "wrote " << c.samples << " samples to " << out << '\n';
  return kExitOk;
}

int cmd_spectrum(const Common& common, const std::string& phi_path, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = common.resolve();
  const RadialField stored = read_snapshot(phi_path);
  if (stored.grid().dimension() != c.d) throw Error(ErrorKind::GridMismatch, "snapshot dimension differs from d");

  // The stored profile fixes the grid; the solver recomputes Phi and dPhi/domega on it.
  const auto gs = solve_phi(c.model(), stored.grid_ptr());
  const double mismatch = norm_H1(stored + (-1.0) * gs.profile) / norm_H1(gs.profile);
  if (mismatch > 1e-6) {
    throw Error(ErrorKind::Inconsistent, "stored profile is not the ground state at omega = " +
                                             detail::format_double(c.omega) + " (relative H1 difference " +
                                             detail::format_double(mismatch) + ")");
  }
  const LinearizedOperators ops(gs);
  const auto sd = solve_mu(ops, gs);

  const fs::path outp(out);
  ensure_parent(outp);
  fs::path f1p = outp, f2p = outp;
  f1p.replace_extension(".f1.nlsr");
  f2p.replace_extension(".f2.nlsr");
  write_snapshot(sd.f1, f1p);
  write_snapshot(sd.f2, f2p);
  Json rec = spectrum_json(sd, c.omega);
  rec["f1_file"] = f1p.filename().string();
  rec["f2_file"] = f2p.filename().string();
  write_file_atomic(outp, rec.dump(2) + "\n");

  RunManifest m;
  m.command = "spectrum";
  m.config = c;
  m.derived = {{"phi_mismatch_H1", mismatch}};
  m.add_input(phi_path);
  m.add_output(outp);
  m.add_output(f1p);
  m.add_output(f2p);
  m.counters = {{"wall_seconds", seconds_since(t0)}, {"iterations", sd.iterations}};
  m.write(manifest_path(outp));
  std::cout << "nu = " << sd.nu << "  mu = " << sd.mu << '\n';
  return kExitOk;
}

int cmd_evolve(const Common& common, std::vector<std::pair<std::string, std::string>> extra, const std::string& out,
               const std::string& final_out, bool with_frame) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = common.resolve(std::move(extra));
  if (c.init.size() != 1) throw Error(ErrorKind::Parse, "evolve needs exactly one init spec");
  const auto spec = parse_init_spec(c.init.front());
  const RadialField psi0 = make_initial(spec, grid_of(c), c.model());

  EvolveConfig ec;
  ec.dt = c.dt;
  ec.t_max = c.t_max;
  ec.stride = c.stride;
  ec.order = c.order;
  ec.max_phase = c.max_phase;
  ec.dt_floor = c.dt_floor;
  ec.grad_ratio_max = c.grad_ratio_max;
  ec.resolve_cells = c.resolve_cells;

  std::optional<GroundState> gs;
  std::optional<SpectralData> sd;
  std::optional<OrbitFrame> frame;
  DistanceConfig dcfg;
  Json derived;
  if (with_frame) {
    gs = solve_phi(c.model(), psi0.grid_ptr());
    sd = solve_mu(LinearizedOperators(*gs), *gs);
    frame.emplace(*gs, *sd);
    dcfg.delta_E = calibrate_delta_E(*frame, c.seed).delta_E;
    derived["delta_E"] = dcfg.delta_E;
    derived["mu"] = sd->mu;
  }
  const auto rec = run(psi0, ec, c.model(), frame ? &*frame : nullptr, dcfg);

  const fs::path outp(out);
  ensure_parent(outp);
  write_file_atomic(outp, csv::trajectory(rec.rows));
  RunManifest m;
  m.command = "evolve";
  m.config = c;
  derived["status"] = to_string(rec.status);
  derived["reason"] = rec.reason;
  derived["mass_drift"] = json_number(rec.mass_drift);
  derived["hamiltonian_drift"] = json_number(rec.hamiltonian_drift);
  derived["min_dt"] = rec.min_dt;
  m.derived = derived;
  if (spec.kind == InitSpec::Kind::File) m.add_input(spec.path);
  m.add_output(outp);
  if (!final_out.empty()) {
    ensure_parent(final_out);
    write_snapshot(rec.final_state, final_out);
    m.add_output(final_out);
  }
  m.counters = {{"wall_seconds", seconds_since(t0)}, {"steps", rec.steps}};
  m.write(manifest_path(outp));
  std::cout << "status = " << to_string(rec.status) << "  rows = " << rec.rows.size() << '\n';
  return kExitOk;
}

bool decided(const Classification& cl) { return cl.admissible && cl.scenario.has_value(); }

Json classification_derived(const Classification& cl, const ThresholdTable& table) {
  return {{"delta_E", json_number(cl.delta_E)},
          {"delta_star", json_number(cl.delta_star)},
          {"epsilon_omega", json_number(cl.epsilon_omega)},
          {"omega_star", table.omega_star()},
          {"alpha", json_number(cl.alpha)}};
}

int cmd_classify(const Common& common, std::vector<std::pair<std::string, std::string>> extra, const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = common.resolve(std::move(extra));
  if (c.init.size() != 1) throw Error(ErrorKind::Parse, "classify needs exactly one init spec");
  const auto spec = parse_init_spec(c.init.front());
  const RadialField psi0 = make_initial(spec, grid_of(c), c.model());
  const auto table = threshold_table(c);
  const auto cl = classify_run(psi0, classify_config(c), &table);

  const fs::path outp(out);
  ensure_parent(outp);
  write_file_atomic(outp, classification_json(cl, spec.text).dump(2) + "\n");
  RunManifest m;
  m.command = "classify";
  m.config = c;
  m.derived = classification_derived(cl, table);
  if (spec.kind == InitSpec::Kind::File) m.add_input(spec.path);
  m.add_output(outp);
  m.counters = {{"wall_seconds", seconds_since(t0)}};
  m.write(manifest_path(outp));

  std::cout << "forward = " << to_string(cl.forward) << "  backward = " << to_string(cl.backward)
            << "  scenario = " << scenario_name(cl.scenario) << '\n';
  if (!cl.admissible) std::cout << "refused: " << cl.refusal << '\n';
  return (c.strict && !decided(cl)) ? kExitUndecided : kExitOk;
}

int cmd_sweep(const Common& common, std::vector<std::pair<std::string, std::string>> extra,
              const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = common.resolve(std::move(extra));
  if (c.init.empty()) throw Error(ErrorKind::Parse, "sweep config needs at least one 'init = ...' line");
  std::vector<InitSpec> specs;
  for (const auto& s : c.init) specs.push_back(parse_init_spec(s));

  const auto grid = grid_of(c);
  const auto table = threshold_table(c);
  const auto cc = classify_config(c);
  fs::create_directories(out_dir);

  RunManifest m;
  m.command = "sweep";
  m.config = c;
  std::vector<csv::SweepRow> rows;
  bool all_decided = true;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const RadialField psi0 = make_initial(specs[i], grid, c.model());
    auto cl = classify_run(psi0, cc, &table);
    char name[32];
    std::snprintf(name, sizeof name, "cell_%04zu.json", i);
    const fs::path cell = fs::path(out_dir) / name;
    write_file_atomic(cell, classification_json(cl, specs[i].text).dump(2) + "\n");
    m.add_output(cell);
    if (specs[i].kind == InitSpec::Kind::File) m.add_input(specs[i].path);
    all_decided = all_decided && decided(cl);
    std::cout << specs[i].text << ": " << scenario_name(cl.scenario) << '\n';
    rows.push_back({specs[i].text, std::move(cl)});
  }
  const fs::path index = fs::path(out_dir) / "index.csv";
  write_file_atomic(index, csv::sweep_index(rows));
  m.add_output(index);
  m.derived = {{"omega_star", table.omega_star()}, {"cells", rows.size()}};
  m.counters = {{"wall_seconds", seconds_since(t0)}};
  m.write(fs::path(out_dir) / "manifest.json");
  return (c.strict && !all_decided) ? kExitUndecided : kExitOk;
}

/// Fast invariant checks on the resolved configuration.
int cmd_selftest(const Common& common) {
  const RunConfig c = common.resolve();
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    failures += ok ? 0 : 1;
  };

  {
    auto g = make_grid(c.d, 64, 5.0);
    std::mt19937_64 rng(c.seed);
    const auto f = random_smooth_field(g, rng, 1.0);
    const auto back = decode_snapshot(encode_snapshot(f));
    bool same = true;
    for (std::size_t i = 0; i < f.size(); ++i) same = same && f[i] == back[i];
    report("snapshot round-trip", same, "64 nodes");
  }
  {
    const bool ok = parse_config(to_config_text(c)).n == c.n;
    RunManifest m;
    m.config = c;
    const auto s = m.serialize();
    report("config and manifest round-trip", ok && RunManifest::parse(s).serialize() == s, "");
  }
  {
    int hits = 0;
    for (auto f : {Label::Trap, Label::Scatter, Label::Blowup}) {
      for (auto b : {Label::Trap, Label::Scatter, Label::Blowup}) hits += scenario_index(f, b).has_value() ? 1 : 0;
    }
    report("scenario table", hits == 9, std::to_string(hits) + " of 9 label pairs mapped");
  }
  const auto grid = grid_of(c);
  const auto gs = solve_phi(c.model(), grid);
  {
    const double rel = std::abs(K_functional(gs.profile, c.model())) / std::pow(grad_norm(gs.profile), 2);
    report("ground state", gs.residual_H1 < 1e-6 && rel < 1e-5,
           "residual " + detail::format_double(gs.residual_H1) + ", |K|/|grad|^2 " + detail::format_double(rel));
  }
  {
    EvolveConfig ec;
    ec.t_max = 0.1;
    const auto rec = run(gs.profile, ec, c.model());
    const double dm = std::abs(rec.rows.back().mass - rec.rows.front().mass) / rec.rows.front().mass;
    report("mass conservation", dm < 1e-10, "relative drift " + detail::format_double(dm));
  }
  return failures == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Standing waves and threshold dynamics for a combined-power NLS"};
  app.require_subcommand(1);
  Common common;
  std::string out, phi_path, final_out, init;
  std::optional<double> wmin, wmax;
  std::optional<int> samples;
  bool strict = false, no_frame = false;

  auto* gs = app.add_subcommand("groundstate", "solve for the ground state and store it");
  common.attach(gs);
  gs->add_option("--out", out, "output .nlsr")->required();

  auto* mc = app.add_subcommand("mcurve", "tabulate m_omega and M(Phi_omega)");
  common.attach(mc);
  mc->add_option("--omega-min", wmin);
  mc->add_option("--omega-max", wmax);
  mc->add_option("--samples", samples);
  mc->add_option("--out", out, "output CSV")->required();

  auto* sp = app.add_subcommand("spectrum", "unstable eigenpair of the linearization");
  common.attach(sp);
  sp->add_option("--phi", phi_path, "stored ground state")->required();
  sp->add_option("--out", out, "output JSON")->required();

  auto* ev = app.add_subcommand("evolve", "time evolution with diagnostics");
  common.attach(ev, true);
  ev->add_option("--init", init, "initial data spec");
  ev->add_option("--final", final_out, "store the final state");
  ev->add_flag("--no-frame", no_frame, "skip the orbit frame (no d_omega or mode columns)");
  ev->add_option("--out", out, "trajectory CSV")->required();

  auto* cl = app.add_subcommand("classify", "forward/backward classification");
  common.attach(cl);
  cl->add_option("--init", init, "initial data spec");
  cl->add_flag("--strict", strict, "exit 4 when refused or undecided");
  cl->add_option("--out", out, "output JSON")->required();

  auto* sw = app.add_subcommand("sweep", "classify every init spec of a config");
  common.attach(sw);
  sw->add_flag("--strict", strict, "exit 4 when any cell is refused or undecided");
  sw->add_option("--out", out, "output directory")->required();

  auto* st = app.add_subcommand("selftest", "run fast invariant checks");
  common.attach(st);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  std::vector<std::pair<std::string, std::string>> extra;
  if (!init.empty()) extra.emplace_back("init", init);
  if (strict) extra.emplace_back("strict", "true");

  try {
    if (gs->parsed()) return cmd_groundstate(common, out);
    if (mc->parsed()) return cmd_mcurve(common, wmin, wmax, samples, out);
    if (sp->parsed()) return cmd_spectrum(common, phi_path, out);
    if (ev->parsed()) return cmd_evolve(common, extra, out, final_out, !no_frame);
    if (cl->parsed()) return cmd_classify(common, extra, out);
    if (sw->parsed()) return cmd_sweep(common, extra, out);
    if (st->parsed()) return cmd_selftest(common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_config_error() || e.kind() == ErrorKind::GridMismatch ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}
