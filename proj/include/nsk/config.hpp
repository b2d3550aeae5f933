#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "nsk/forcing.hpp"
#include "nsk/model.hpp"
#include "nsk/verification.hpp"

namespace nsk {

// ---------------------------------------------------------------- scenario

struct GridConfig {
  int n = 32;
  double length = 40.0;
  int dims = 3;
};

struct EosConfig {
  std::string kind = "ideal";  // "ideal" or "stiffened"
  double R = 1.0;
  double K = 0.0;
  double rho_ref = 1.0;
};

struct ForcingConfig {
  double amplitude = 4e-8;
  double decay_scale = 5.0;
  double decay_exponent = 4.0;
  bool g_active = true, f_active = true, h_active = true;
};

struct StationaryConfig {
  double tol = 1e-10;
  int max_outer = 100;
  double budget_threshold = 1e-2;
};

struct EvolutionConfig {
  double dt = 0.05;
  double t_end = 5.0;
  double init_norm = 1e-3;   // ||init||_{4,3,3}
  double init_width = 2.0;   // envelope width of the random initial bumps
  double delta = 1e-3;       // admissible initial norm
  int snapshot_every = 0;    // steps between field snapshots, 0 for none
  bool thermal_exchange = true;
  bool steady_defect = true;
  double cfl = 0.5;
};

struct VerifyConfig {
  int samples = 64;
  int n = 32;
  double length = 8.0 * std::numbers::pi;
  double width = 2.0;
  double decay_exponent = 64.0;
  double amplitude = 1e-4;
  double advection = 1e-2;
  double trial = 1e-5;
  std::vector<double> eps{0.5, 0.1, 0.02};
  std::vector<double> regularization_eps{1e-1, 1e-2, 1e-3, 1e-4};
  double regularization_budget = 1e-2;
  double kernel_mu = 1.0;
};

struct MmsConfig {
  double amplitude = 1e-3;
  double width = 5.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::string output = "out";
  GridConfig grid;
  PhysParams physics;
  EosConfig eos;
  ForcingConfig forcing;
  StationaryConfig stationary;
  EvolutionConfig evolution;
  VerifyConfig verify;
  MmsConfig mms;
};

// ---------------------------------------------------------------- parsing

namespace detail {

/// Reads keys out of one table and remembers them, so leftovers can be rejected.
class TableReader {
 public:
  TableReader(const toml::table& t, std::string path) : t_(t), path_(std::move(path)) {}

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const toml::node* n = t_.get(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = n->value_exact<bool>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = n->value_exact<std::string>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (n->is_number()) {
        out = *n->value<double>();
        return;
      }
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (auto v = n->value_exact<std::int64_t>(); v && *v >= 0) {
        out = std::uint64_t(*v);
        return;
      }
    } else if constexpr (std::is_integral_v<T>) {
      if (auto v = n->value_exact<std::int64_t>(); v && *v >= std::numeric_limits<T>::min() && *v <= std::numeric_limits<T>::max()) {
        out = T(*v);
        return;
      }
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (const auto* a = n->as_array()) {
        std::vector<double> v;
        for (const auto& e : *a) {
          if (!e.is_number()) fail(ErrorCode::ConfigError, where(key) + " must be an array of numbers");
          v.push_back(*e.value<double>());
        }
        out = std::move(v);
        return;
      }
    }
    fail(ErrorCode::ConfigError, where(key) + " has the wrong type");
  }

  const toml::table* section(const char* key) {
    seen_.insert(key);
    const toml::node* n = t_.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) fail(ErrorCode::ConfigError, where(key) + " must be a table");
    return n->as_table();
  }

  void reject_unknown() const {
    for (const auto& [k, v] : t_)
      if (!seen_.count(std::string(k.str()))) fail(ErrorCode::ConfigError, "unknown key " + where(std::string(k.str())));
  }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const toml::table& t_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& what) { require(ok, ErrorCode::ConfigError, what); }

template <class F>
void read_section(TableReader& root, const char* name, F&& body) {
  static const toml::table empty;
  const toml::table* t = root.section(name);
  TableReader r(t ? *t : empty, name);
  body(r);
  r.reject_unknown();
}

}  // namespace detail

/// Range checks; run before any grid or field is allocated.
inline void validate(const ScenarioConfig& c) {
  using detail::check;
  check(c.grid.n >= 8, "grid.n must be at least 8");
  check(c.grid.n % 2 == 0, "grid.n must be even");
  check(c.grid.n <= 512, "grid.n must be at most 512");
  check(c.grid.length > 0.0, "grid.length must be positive");
  check(c.grid.dims >= 1 && c.grid.dims <= 3, "grid.dims must be 1, 2 or 3");
  const auto& p = c.physics;
  check(p.mu > 0.0 && 2.0 * p.mu + p.mu_prime > 0.0, "physics needs mu > 0 and 2 mu + mu_prime > 0");
  check(p.kappa > 0.0 && p.alpha_tilde > 0.0 && p.c_v > 0.0, "physics needs kappa, alpha_tilde, c_v > 0");
  check(p.rho_bar > 0.0 && p.theta_bar > 0.0, "physics needs rho_bar, theta_bar > 0");
  check(c.eos.kind == "ideal" || c.eos.kind == "stiffened", "eos.kind must be \"ideal\" or \"stiffened\"");
  check(c.eos.R > 0.0 && c.eos.rho_ref > 0.0 && c.eos.K >= 0.0, "eos needs R > 0, rho_ref > 0, K >= 0");
  check(c.forcing.amplitude >= 0.0, "forcing.amplitude must be nonnegative");
  check(c.forcing.decay_scale > 0.0 && c.forcing.decay_exponent > 0.0, "forcing decay parameters must be positive");
  check(c.stationary.tol > 0.0 && c.stationary.max_outer >= 1 && c.stationary.budget_threshold > 0.0,
        "stationary needs tol > 0, max_outer >= 1, budget_threshold > 0");
  const auto& e = c.evolution;
  check(e.dt > 0.0 && e.t_end >= 0.0, "evolution needs dt > 0 and t_end >= 0");
  check(e.init_norm >= 0.0 && e.init_norm <= e.delta, "evolution.init_norm must lie in [0, delta]");
  check(e.init_width > 0.0 && e.delta > 0.0 && e.cfl > 0.0, "evolution needs init_width, delta, cfl > 0");
  check(e.snapshot_every >= 0, "evolution.snapshot_every must be nonnegative");
  const auto& v = c.verify;
  check(v.samples >= 1 && v.n >= 8 && v.n % 2 == 0 && v.n <= 512, "verify needs samples >= 1 and an even n in [8, 512]");
  check(v.length > 0.0 && v.width > 0.0 && v.decay_exponent > 0.0, "verify needs positive length, width, decay_exponent");
  check(v.amplitude > 0.0 && v.advection >= 0.0 && v.trial > 0.0, "verify needs amplitude > 0, advection >= 0, trial > 0");
  check(!v.eps.empty(), "verify.eps must not be empty");
  for (double x : v.eps) check(x > 0.0 && x < 1.0, "verify.eps entries must lie in (0, 1)");
  check(!v.regularization_eps.empty(), "verify.regularization_eps must not be empty");
  for (double x : v.regularization_eps) check(x > 0.0, "verify.regularization_eps entries must be positive");
  check(v.regularization_budget > 0.0 && v.kernel_mu > 0.0, "verify needs regularization_budget > 0 and kernel_mu > 0");
  check(c.mms.amplitude >= 0.0 && c.mms.width > 0.0, "mms needs amplitude >= 0 and width > 0");
  check(!c.output.empty(), "output must not be empty");
}

inline ScenarioConfig parse_config(const toml::table& root) {
  ScenarioConfig c;
  detail::TableReader r(root, "");
  r.get("seed", c.seed);
  r.get("output", c.output);
  detail::read_section(r, "grid", [&](auto& s) {
    s.get("n", c.grid.n);
    s.get("length", c.grid.length);
    s.get("dims", c.grid.dims);
  });
  detail::read_section(r, "physics", [&](auto& s) {
    s.get("mu", c.physics.mu);
    s.get("mu_prime", c.physics.mu_prime);
    s.get("kappa", c.physics.kappa);
    s.get("alpha_tilde", c.physics.alpha_tilde);
    s.get("c_v", c.physics.c_v);
    s.get("rho_bar", c.physics.rho_bar);
    s.get("theta_bar", c.physics.theta_bar);
  });
  detail::read_section(r, "eos", [&](auto& s) {
    s.get("kind", c.eos.kind);
    s.get("R", c.eos.R);
    s.get("K", c.eos.K);
    s.get("rho_ref", c.eos.rho_ref);
  });
  detail::read_section(r, "forcing", [&](auto& s) {
    s.get("amplitude", c.forcing.amplitude);
    s.get("decay_scale", c.forcing.decay_scale);
    s.get("decay_exponent", c.forcing.decay_exponent);
    s.get("g_active", c.forcing.g_active);
    s.get("f_active", c.forcing.f_active);
    s.get("h_active", c.forcing.h_active);
  });
  detail::read_section(r, "stationary", [&](auto& s) {
    s.get("tol", c.stationary.tol);
    s.get("max_outer", c.stationary.max_outer);
    s.get("budget_threshold", c.stationary.budget_threshold);
  });
  detail::read_section(r, "evolution", [&](auto& s) {
    s.get("dt", c.evolution.dt);
    s.get("t_end", c.evolution.t_end);
    s.get("init_norm", c.evolution.init_norm);
    s.get("init_width", c.evolution.init_width);
    s.get("delta", c.evolution.delta);
    s.get("snapshot_every", c.evolution.snapshot_every);
    s.get("thermal_exchange", c.evolution.thermal_exchange);
    s.get("steady_defect", c.evolution.steady_defect);
    s.get("cfl", c.evolution.cfl);
  });
  detail::read_section(r, "verify", [&](auto& s) {
    s.get("samples", c.verify.samples);
    s.get("n", c.verify.n);
    s.get("length", c.verify.length);
    s.get("width", c.verify.width);
    s.get("decay_exponent", c.verify.decay_exponent);
    s.get("amplitude", c.verify.amplitude);
    s.get("advection", c.verify.advection);
    s.get("trial", c.verify.trial);
    s.get("eps", c.verify.eps);
    s.get("regularization_eps", c.verify.regularization_eps);
    s.get("regularization_budget", c.verify.regularization_budget);
    s.get("kernel_mu", c.verify.kernel_mu);
  });
  detail::read_section(r, "mms", [&](auto& s) {
    s.get("amplitude", c.mms.amplitude);
    s.get("width", c.mms.width);
  });
  r.reject_unknown();
  validate(c);
  return c;
}

inline ScenarioConfig parse_config_string(std::string_view text, std::string_view source = "config") {
  try {
    return parse_config(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " at " << e.source().begin;
    fail(ErrorCode::ConfigError, os.str());
  }
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(toml::parse_file(path.string()));
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " at " << e.source().begin;
    fail(ErrorCode::ConfigError, path.string() + ": " + os.str());
  }
}

// ---------------------------------------------------------------- canonical form

/// Every field, keys sorted; the config hash is taken over its compact dump.
inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["grid"] = {{"n", c.grid.n}, {"length", c.grid.length}, {"dims", c.grid.dims}};
  const auto& p = c.physics;
  j["physics"] = {{"mu", p.mu},       {"mu_prime", p.mu_prime}, {"kappa", p.kappa},        {"alpha_tilde", p.alpha_tilde},
                  {"c_v", p.c_v},     {"rho_bar", p.rho_bar},   {"theta_bar", p.theta_bar}};
  j["eos"] = {{"kind", c.eos.kind}, {"R", c.eos.R}, {"K", c.eos.K}, {"rho_ref", c.eos.rho_ref}};
  const auto& f = c.forcing;
  j["forcing"] = {{"amplitude", f.amplitude}, {"decay_scale", f.decay_scale}, {"decay_exponent", f.decay_exponent},
                  {"g_active", f.g_active},   {"f_active", f.f_active},       {"h_active", f.h_active}};
  j["stationary"] = {{"tol", c.stationary.tol}, {"max_outer", c.stationary.max_outer}, {"budget_threshold", c.stationary.budget_threshold}};
  const auto& e = c.evolution;
  j["evolution"] = {{"dt", e.dt},
                    {"t_end", e.t_end},
                    {"init_norm", e.init_norm},
                    {"init_width", e.init_width},
                    {"delta", e.delta},
                    {"snapshot_every", e.snapshot_every},
                    {"thermal_exchange", e.thermal_exchange},
                    {"steady_defect", e.steady_defect},
                    {"cfl", e.cfl}};
  const auto& v = c.verify;
  j["verify"] = {{"samples", v.samples},
                 {"n", v.n},
                 {"length", v.length},
                 {"width", v.width},
                 {"decay_exponent", v.decay_exponent},
                 {"amplitude", v.amplitude},
                 {"advection", v.advection},
                 {"trial", v.trial},
                 {"eps", v.eps},
                 {"regularization_eps", v.regularization_eps},
                 {"regularization_budget", v.regularization_budget},
                 {"kernel_mu", v.kernel_mu}};
  j["mms"] = {{"amplitude", c.mms.amplitude}, {"width", c.mms.width}};
  return j;
}

// ---------------------------------------------------------------- objects built from a config

inline GridPtr make_grid(const ScenarioConfig& c) { return SpectralGrid::cube(c.grid.n, c.grid.length, c.grid.dims); }

inline Model make_model(const ScenarioConfig& c) {
  std::shared_ptr<const EquationOfState> eos;
  if (c.eos.kind == "stiffened")
    eos = std::make_shared<StiffenedGas>(c.eos.R, c.eos.K, c.eos.rho_ref);
  else
    eos = std::make_shared<IdealGas>(c.eos.R);
  return Model(c.physics, eos);
}

/// The forcing seed is the scenario seed itself.
inline ForcingSpec forcing_spec(const ScenarioConfig& c) {
  ForcingSpec s;
  s.amplitude = c.forcing.amplitude;
  s.decay_scale = c.forcing.decay_scale;
  s.decay_exponent = c.forcing.decay_exponent;
  s.seed = c.seed;
  s.g_active = c.forcing.g_active;
  s.f_active = c.forcing.f_active;
  s.h_active = c.forcing.h_active;
  return s;
}

inline FixedPointOptions fixed_point_options(const ScenarioConfig& c) {
  FixedPointOptions o;
  o.tol = c.stationary.tol;
  o.max_outer = c.stationary.max_outer;
  o.budget_threshold = c.stationary.budget_threshold;
  return o;
}

inline StabilityOptions stability_options(const ScenarioConfig& c) {
  StabilityOptions o;
  o.dt = c.evolution.dt;
  o.t_end = c.evolution.t_end;
  o.delta = c.evolution.delta;
  o.snapshot_every = c.evolution.snapshot_every;
  o.imex.thermal_exchange = c.evolution.thermal_exchange;
  o.imex.steady_defect = c.evolution.steady_defect;
  o.imex.cfl = c.evolution.cfl;
  return o;
}

inline EnsembleSpec ensemble_spec(const ScenarioConfig& c) {
  EnsembleSpec e;
  e.n = c.verify.n;
  e.length = c.verify.length;
  e.samples = c.verify.samples;
  e.seed = c.seed;
  e.width = c.verify.width;
  e.decay_exponent = c.verify.decay_exponent;
  e.amplitude = c.verify.amplitude;
  e.advection = c.verify.advection;
  e.trial = c.verify.trial;
  return e;
}

}  // namespace nsk
