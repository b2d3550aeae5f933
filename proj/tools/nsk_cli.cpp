// Scenario-driven front end: stationary, evolve, verify, mms.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nsk/config.hpp"
#include "nsk/io.hpp"
#include "nsk/mms.hpp"
#include "nsk/scenarios.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nsk;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kAudit = 4 };

/// Failure raised after setup that still maps to the config exit code.
struct ConfigStageError : Error {
  using Error::Error;
};

const std::vector<std::string> kAllAudits{"2.8", "2.40", "2.80", "2.90", "3.3", "3.51", "kernel", "regularization"};

struct Run {
  ScenarioConfig cfg;
  fs::path out;
  bool quiet = false;
  std::string command;
  json timings = json::object();
  std::vector<std::string> outputs;
  std::string status = "running";

  void say(const std::string& s) const {
    if (!quiet) std::cout << s << '\n';
  }

  template <class F>
  auto phase(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Stamp {
      json& t;
      const std::string& n;
      std::chrono::steady_clock::time_point t0;
      ~Stamp() { t[n] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
    } stamp{timings, name, t0};
    return f();
  }

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }

  void write_manifest() const {
    json m;
    m["version"] = NSK_VERSION;
    m["config_hash"] = sha256_hex(to_json(cfg).dump());
    m["config"] = to_json(cfg);
    m["command"] = command;
    m["seed"] = cfg.seed;
    m["timings_s"] = timings;
    m["outputs"] = outputs;
    m["status"] = status;
    write_json(out / "manifest.json", m);
  }
};

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", x);
  return b;
}

void write_state(Run& r, const StationaryState& s, const std::string& prefix) {
  write_snapshot(r.file(prefix + "sigma.nsk"), s.sigma, "sigma");
  for (int i = 0; i < 3; ++i) write_snapshot(r.file(prefix + "v" + std::to_string(i + 1) + ".nsk"), s.v[i], "v" + std::to_string(i + 1));
  write_snapshot(r.file(prefix + "theta.nsk"), s.theta, "theta");
}

void write_perturbation(Run& r, const PerturbationState& x, const std::string& suffix) {
  write_snapshot(r.file("sigma_" + suffix + ".nsk"), x.sigma, "sigma");
  for (int i = 0; i < 3; ++i) write_snapshot(r.file("w" + std::to_string(i + 1) + "_" + suffix + ".nsk"), x.w[i], "w" + std::to_string(i + 1));
  write_snapshot(r.file("theta_" + suffix + ".nsk"), x.theta, "theta");
}

void write_forcing(Run& r, const ForcingData& fd) {
  write_snapshot(r.file("forcing_G.nsk"), fd.G, "G");
  for (int i = 0; i < 3; ++i) write_snapshot(r.file("forcing_F" + std::to_string(i + 1) + ".nsk"), fd.F[i], "F" + std::to_string(i + 1));
  write_snapshot(r.file("forcing_H.nsk"), fd.H, "H");
}

struct Setup {
  GridPtr grid;
  Model model;
};

Setup setup(const Run& r) {
  try {
    return {make_grid(r.cfg), make_model(r.cfg)};
  } catch (const Error& e) {
    throw ConfigStageError(ErrorCode::ConfigError, e.what());
  }
}

ForcingData build_scenario_forcing(Run& r, const GridPtr& g) {
  return r.phase("forcing", [&] {
    try {
      return build_forcing(g, forcing_spec(r.cfg));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BoxTooSmall || e.code() == ErrorCode::InvalidArgument) throw ConfigStageError(ErrorCode::ConfigError, e.what());
      throw;
    }
  });
}

FixedPointResult solve_stationary(Run& r, const ForcingData& fd, const Model& m) {
  auto res = r.phase("stationary", [&] { return run_fixed_point(fd, m, fixed_point_options(r.cfg)); });
  r.say("stationary: converged in " + std::to_string(res.report.iterations) + " iterations, K = " + fmt(res.report.smallness.K) +
        (res.report.within_budget ? "" : " (above budget)"));
  return res;
}

// ---------------------------------------------------------------- subcommands

int cmd_stationary(Run& r) {
  const auto [g, m] = setup(r);
  const ForcingData fd = build_scenario_forcing(r, g);
  const auto res = solve_stationary(r, fd, m);
  r.phase("write", [&] {
    write_state(r, res.state, "");
    write_forcing(r, fd);
    json j = to_json(res.report);
    j["norms"] = to_json(norm_report(res.state));
    write_json(r.file("convergence.json"), j);
    std::ostringstream csv;
    write_convergence_csv(csv, res.report);
    write_text(r.file("convergence.csv"), csv.str());
  });
  return kOk;
}

int cmd_evolve(Run& r) {
  const auto [g, m] = setup(r);
  const ForcingData fd = build_scenario_forcing(r, g);
  const auto res = solve_stationary(r, fd, m);
  const SteadyState s = r.phase("steady", [&] { return steady_state(res.state, fd, m); });
  const auto& ec = r.cfg.evolution;
  const PerturbationState init = random_perturbation(g, CounterRng(r.cfg.seed, kStreamInit).split(0), ec.init_norm, ec.init_width);
  StabilityOptions opt = stability_options(r.cfg);
  opt.on_snapshot = [&](const PerturbationState& x, int n) {
    char b[16];
    std::snprintf(b, sizeof b, "%06d", n);
    write_perturbation(r, x, b);
  };
  if (opt.snapshot_every > 0) write_perturbation(r, init, "000000");
  const EnergyLedger L = r.phase("evolve", [&] { return run_stability(init, s, fd, m, opt); });
  r.phase("write", [&] {
    std::ostringstream csv;
    write_ledger_csv(csv, L);
    write_text(r.file("ledger.csv"), csv.str());
    const DecayAudit d = audit_decay(L);
    json j;
    j["decay"] = to_json(d);
    j["fitted_C"] = L.fitted_C;
    j["monotone"] = L.monotone;
    j["worst_increase"] = L.worst_increase;
    j["equivalence_ok"] = L.equivalence_ok;
    j["linf_ratio"] = L.rows.front().linf > 0.0 ? L.rows.back().linf / L.rows.front().linf : 0.0;
    j["steps"] = L.rows.size() - 1;
    write_json(r.file("evolution.json"), j);
  });
  r.say("evolve: " + std::to_string(L.rows.size() - 1) + " steps, N(t_end)/N(0) = " +
        fmt(L.rows.front().N > 0.0 ? L.rows.back().N / L.rows.front().N : 0.0) + ", monotone " + (L.monotone ? "yes" : "no"));
  return kOk;
}

std::vector<std::string> parse_audits(const std::string& list) {
  if (list.empty() || list == "all") return kAllAudits;
  std::vector<std::string> ids;
  std::stringstream ss(list);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (id.empty()) continue;
    if (std::find(kAllAudits.begin(), kAllAudits.end(), id) == kAllAudits.end())
      throw ConfigStageError(ErrorCode::ConfigError, "unknown audit id '" + id + "'");
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  if (ids.empty()) throw ConfigStageError(ErrorCode::ConfigError, "empty audit list");
  return ids;
}

/// Decay runs: init k is perturbation k at the configured norm, then four halvings of init 0.
struct DecayRuns {
  std::vector<EnergyLedger> inits, halvings;
};

DecayRuns decay_runs(Run& r, bool sweep) {
  const auto [g, m] = setup(r);
  const ForcingData fd = build_scenario_forcing(r, g);
  const auto res = solve_stationary(r, fd, m);
  const SteadyState s = steady_state(res.state, fd, m);
  const auto& ec = r.cfg.evolution;
  const StabilityOptions opt = stability_options(r.cfg);
  DecayRuns d;
  return r.phase("evolve", [&] {
    const PerturbationState x0 = random_perturbation(g, CounterRng(r.cfg.seed, kStreamInit).split(0), ec.init_norm, ec.init_width);
    d.inits.push_back(run_stability(x0, s, fd, m, opt));
    if (sweep) {
      d.halvings.push_back(d.inits.front());
      double c = 1.0;
      for (int k = 1; k <= 4; ++k) {
        c *= 0.5;
        PerturbationState x = x0;
        x.sigma *= c;
        x.w *= c;
        x.theta *= c;
        d.halvings.push_back(run_stability(x, s, fd, m, opt));
      }
    }
    return d;
  });
}

int cmd_verify(Run& r, const std::string& audit_list) {
  const auto ids = parse_audits(audit_list);
  auto want = [&](const char* id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); };
  const auto& vc = r.cfg.verify;
  const EnsembleSpec e = ensemble_spec(r.cfg);
  const Model m = setup(r).model;
  json report = json::object();
  bool all = true;
  auto record = [&](const std::string& key, const json& j, bool pass) {
    report[key] = j;
    all = all && pass;
    r.say("audit " + key + ": " + (pass ? "PASS" : "FAIL"));
  };

  if (want("2.8")) {
    const auto s = r.phase("audit_2.8", [&] { return audit_linear_sweep(e, m, vc.eps); });
    record("2.8", to_json(s), s.pass);
  }
  if (want("2.40") || want("2.80") || want("2.90")) {
    const auto it = r.phase("audit_iteration", [&] { return audit_iteration_estimates(e, m); });
    if (want("2.40")) record("2.40", to_json(it.local), it.local.pass);
    if (want("2.80")) record("2.80", to_json(it.global), it.global.pass);
    if (want("2.90")) record("2.90", to_json(it.linf), it.linf.pass);
  }
  if (want("kernel")) {
    const auto k = r.phase("audit_kernel", [&] { return audit_kernel_decay(vc.kernel_mu, r.cfg.seed); });
    record("kernel", to_json(k), k.pass);
  }
  if (want("regularization")) {
    const auto reg = r.phase("audit_regularization", [&] {
      return audit_regularization_limit(small_forcing(e, vc.regularization_budget), m, vc.regularization_eps);
    });
    record("regularization", to_json(reg), reg.pass);
  }
  if (want("3.3") || want("3.51")) {
    const DecayRuns d = decay_runs(r, want("3.3"));
    const DecayAudit a = audit_decay(d.inits.front());
    if (want("3.3")) {
      const DecaySweep sw = audit_decay_sweep(d.halvings);
      json j = to_json(a);
      j["sweep"] = to_json(sw);
      record("3.3", j, a.estimate.pass && sw.pass);
    }
    if (want("3.51")) {
      json j = {{"monotone", a.monotone}, {"worst_increase", a.worst_increase}, {"equivalence_ok", a.equivalence_ok}};
      record("3.51", j, a.monotone && a.equivalence_ok);
    }
  }
  r.phase("write", [&] { write_json(r.file("verify.json"), report); });
  return all ? kOk : kAudit;
}

int cmd_mms(Run& r) {
  const auto [g, m] = setup(r);
  const StationaryState exact = random_stationary_state(g, m, CounterRng(r.cfg.seed, kStreamMms), r.cfg.mms.amplitude, r.cfg.mms.width);
  const MmsStationary mms = r.phase("forcing", [&] { return mms_stationary(exact, m); });
  const double ref = lambda_norm(exact);
  FixedPointOptions o = fixed_point_options(r.cfg);
  if (ref > 0.0) o.tol = r.cfg.stationary.tol * ref;
  const auto res = r.phase("stationary", [&] { return run_fixed_point(mms.fd, m, o); });
  auto rel = [](double a, double b) { return b > 0.0 ? a / b : a; };
  const auto& x = res.state;
  json err;
  err["lambda"] = rel(lambda_distance(x, exact), ref);
  err["sigma_linf"] = rel((x.sigma - exact.sigma).max_abs(), exact.sigma.max_abs());
  err["v_linf"] = rel((x.v - exact.v).max_abs(), exact.v.max_abs());
  err["theta_linf"] = rel((x.theta - exact.theta).max_abs(), exact.theta.max_abs());
  const double tol = 1e-6;
  const bool pass = err["lambda"].get<double>() < tol;
  r.phase("write", [&] {
    json j;
    j["relative_error"] = err;
    j["tolerance"] = tol;
    j["pass"] = pass;
    j["manufactured_residual"] = mms.system_residual;
    j["convergence"] = to_json(res.report);
    write_json(r.file("mms.json"), j);
    std::ostringstream csv;
    write_convergence_csv(csv, res.report);
    write_text(r.file("convergence.csv"), csv.str());
  });
  if (!r.quiet) {
    std::cout << "quantity      relative error\n";
    for (const char* k : {"lambda", "sigma_linf", "v_linf", "theta_linf"}) {
      char b[64];
      std::snprintf(b, sizeof b, "%-13s %.3e\n", k, err[k].get<double>());
      std::cout << b;
    }
    std::cout << "iterations    " << res.report.iterations << "\n";
  }
  return pass ? kOk : kAudit;
}

int report_error(const std::string& kind, std::string message, int code) {
  // library messages start with their own error name
  if (message.rfind(kind + ": ", 0) == 0) message.erase(0, kind.size() + 2);
  json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary solutions and stability runs for the heat-conducting Korteweg system"};
  app.set_version_flag("--version", std::string(NSK_VERSION));
  app.require_subcommand(1);
  std::string config_path, out_dir, audits = "all";
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "scenario TOML file (defaults apply when omitted)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed (overrides the config)");
  app.add_flag("--quiet", quiet, "print nothing on success");
  auto* sub_st = app.add_subcommand("stationary", "solve the stationary problem; write fields and convergence report");
  auto* sub_ev = app.add_subcommand("evolve", "perturb the stationary state and record the energy ledger");
  auto* sub_ve = app.add_subcommand("verify", "run inequality and structure audits");
  auto* sub_mm = app.add_subcommand("mms", "manufactured-solution recovery with an error table");
  sub_ve->add_option("--audits", audits, "comma list of 2.8,2.40,2.80,2.90,3.3,3.51,kernel,regularization or 'all'");
  for (auto* s : {sub_st, sub_ev, sub_ve, sub_mm}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), kConfig);
  }

  Run r;
  r.quiet = quiet;
  for (int i = 0; i < argc; ++i) r.command += (i ? " " : "") + std::string(argv[i]);
  try {
    r.cfg = config_path.empty() ? parse_config(toml::table{}) : load_config(config_path);
    if (*seed_opt) r.cfg.seed = seed;
    if (!out_dir.empty()) r.cfg.output = out_dir;
    validate(r.cfg);
    r.out = r.cfg.output;
    fs::create_directories(r.out);
  } catch (const Error& e) {
    return report_error(std::string(error_name(e.code())), e.what(), kConfig);
  } catch (const std::exception& e) {
    return report_error("ConfigError", e.what(), kConfig);
  }

  int code = kOk;
  try {
    if (*sub_st) code = cmd_stationary(r);
    if (*sub_ev) code = cmd_evolve(r);
    if (*sub_ve) code = cmd_verify(r, audits);
    if (*sub_mm) code = cmd_mms(r);
    r.status = code == kOk ? "ok" : "audit_failure";
  } catch (const ConfigStageError& e) {
    code = report_error("ConfigError", e.what(), kConfig);
    r.status = "config_error";
  } catch (const Error& e) {
    code = report_error(std::string(error_name(e.code())), e.what(), e.code() == ErrorCode::ConfigError ? kConfig : kSolver);
    r.status = code == kConfig ? "config_error" : "solver_failure";
  } catch (const std::exception& e) {
    code = report_error("InternalError", e.what(), kSolver);
    r.status = "solver_failure";
  }
  try {
    r.write_manifest();
  } catch (const std::exception& e) {
    return report_error("IoError", e.what(), code == kOk ? kSolver : code);
  }
  return code;
}
