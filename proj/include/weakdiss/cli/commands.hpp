#pragma once

// Subcommands `weak-value`, `scenario <name>`, `invert` and `shifts`.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "weakdiss/cli/config.hpp"
#include "weakdiss/cli/emit.hpp"
#include "weakdiss/meter.hpp"
#include "weakdiss/scenarios.hpp"
#include "weakdiss/weak_value.hpp"

namespace weakdiss::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigInvalid = 2,
  kAllGaps = 3,
  kAssertionFailed = 4,
  kSingular = 5,
};

struct Options {
  std::string config;
  std::string out;
  std::string format;
  unsigned jobs = 0;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::string scenario;
  std::string channel = "markov";
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"sodium-anomalous", "sodium-constant", "estimate-gamma", "classify",
                                              "estimate-lambda"};
  return names;
}

namespace detail {

inline std::filesystem::path out_dir(const Options& o, const OutputSpec& spec) {
  return o.out.empty() ? std::filesystem::path(spec.directory) : std::filesystem::path(o.out);
}

inline std::string out_format(const Options& o, const OutputSpec& spec) {
  const std::string f = o.format.empty() ? spec.format : o.format;
  if (f != "csv" && f != "json") throw ConfigError("config error: --format must be csv or json");
  return f;
}

inline void write_trace(const std::filesystem::path& dir, const std::string& stem, const std::string& format,
                        const WeakValueTrace& tr, const std::vector<double>& abscissa) {
  if (format == "csv") {
    write_atomic(dir / (stem + ".csv"), trace_csv(tr, abscissa));
  } else {
    write_atomic(dir / (stem + ".json"), dump_json(trace_json(tr, abscissa)));
  }
}

inline EstimationParams load_estimation(const Options& o) {
  EstimationParams p;
  p.noise = {o.noise, o.seed};
  if (o.config.empty()) return p;
  const std::string text = read_text_file(o.config);
  const json doc = parse_json_text(text);
  const Reader root(doc, "", text);
  root.allow({"version", "estimation", "output"});
  check_version(root);
  if (root.has("estimation")) {
    const Reader e = root.child("estimation");
    e.allow({"gamma", "gamma0", "lambda", "epsilon", "max_rate_tau", "count"});
    if (e.has("gamma")) p.gamma = e.positive("gamma");
    if (e.has("gamma0")) p.gamma0 = e.positive("gamma0");
    if (e.has("lambda")) p.lambda = e.positive("lambda");
    if (e.has("epsilon")) p.epsilon = e.number("epsilon");
    if (e.has("max_rate_tau")) p.max_rate_tau = e.positive("max_rate_tau");
    if (e.has("count")) {
      const long c = e.integer("count");
      if (c < 5 || c > 100000) e.fail("count", "must be in [5, 100000]");
      p.count = static_cast<std::size_t>(c);
    }
  }
  return p;
}

inline json scenario_json(const ScenarioResult& r) {
  json j;
  j["name"] = r.name;
  j["passed"] = r.passed();
  json verdict = json::object();
  for (const auto& [k, v] : r.numbers) verdict[k] = v;
  for (const auto& [k, v] : r.labels) verdict[k] = v;
  j["verdict"] = verdict;
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  if (r.trace) {
    j["trace"] = {{"points", r.trace->size()},
                  {"gaps", r.trace->gap_count()},
                  {"setup_hash", hex64(r.trace->setup_hash)},
                  {"channel", r.trace->channel_description}};
  }
  return j;
}

}  // namespace detail

inline int cmd_weak_value(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_run_config(o.config);
  cfg.setup.validate();
  const auto x = cfg.sweep.grid();
  std::vector<double> taus;
  for (double v : x) taus.push_back(v / cfg.reference_rate);
  const auto tr = trace_over_tau(cfg.setup, cfg.dissipator, taus, o.jobs);
  if (tr.size() > 0 && tr.gap_count() == tr.size()) {
    out << "post-selection probability vanishes on the whole grid\n";
    return kAllGaps;
  }
  const auto dir = detail::out_dir(o, cfg.output);
  const auto fmt = detail::out_format(o, cfg.output);
  detail::write_trace(dir, cfg.output.stem, fmt, tr, x);
  out << "wrote " << (dir / (cfg.output.stem + "." + fmt)).string() << " (" << tr.size() << " points, "
      << tr.gap_count() << " gaps)\n";
  return kOk;
}

inline ScenarioResult run_scenario(const Options& o, double& reference_rate) {
  const std::string& name = o.scenario;
  reference_rate = 1.0;
  if (name == "sodium-anomalous") return sodium_anomalous(201, o.jobs);
  if (name == "sodium-constant") return sodium_constant(401, o.jobs);

  const EstimationParams p = detail::load_estimation(o);
  if (name == "estimate-gamma") {
    reference_rate = p.gamma;
    return scenario_estimate_gamma(p);
  }
  if (name == "classify") {
    if (o.channel == "markov" || o.channel == "amplitude_damping") {
      reference_rate = p.gamma;
      return scenario_classify(ChannelModel::markov, p);
    }
    if (o.channel == "nonmarkov_jc") {
      reference_rate = p.gamma0;
      return scenario_classify(ChannelModel::nonmarkov_jc, p);
    }
    throw ConfigError("config error: --channel must be markov, amplitude_damping or nonmarkov_jc");
  }
  if (name == "estimate-lambda") {
    reference_rate = p.gamma0;
    return scenario_estimate_lambda(p);
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

inline int cmd_scenario(const Options& o, std::ostream& out) {
  double rate = 1.0;
  const ScenarioResult r = run_scenario(o, rate);
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(".") : std::filesystem::path(o.out);
  write_atomic(dir / (r.name + ".json"), dump_json(detail::scenario_json(r)));
  if (r.trace) {
    std::vector<double> x;
    for (double t : r.trace->tau_grid) x.push_back(rate * t);
    detail::write_trace(dir, r.name, o.format.empty() ? "csv" : detail::out_format(o, {}), *r.trace, x);
  }
  for (const auto& c : r.checks) out << (c.passed ? "PASS " : "FAIL ") << r.name << " " << c.name << " " << c.detail << "\n";
  for (const auto& [k, v] : r.labels) out << k << " = " << v << "\n";
  return r.passed() ? kOk : kAssertionFailed;
}

inline int cmd_invert(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_run_config(o.config, false);
  if (!cfg.meter || !cfg.meter->Q_f || !cfg.meter->P_f) {
    throw ConfigError("config error at /meter/measured: invert needs measured Q_f and P_f");
  }
  const MeterSpec& m = *cfg.meter;
  const auto avg = commutator_averages(m.space, m.state, m.t, m.tau);
  const Complex wv = invert_weak_value(*m.Q_f, *m.P_f, avg, m.g, m.t);
  out << format_double(wv.real()) << " " << format_double(wv.imag()) << "\n";

  json j;
  j["re_wv"] = wv.real();
  j["im_wv"] = wv.imag();
  j["inputs"] = {{"Q_f", *m.Q_f}, {"P_f", *m.P_f}, {"g", m.g}, {"t", m.t}, {"tau", m.tau}, {"omega_f", m.space.omega_f}};
  write_atomic(detail::out_dir(o, cfg.output) / (cfg.output.stem + ".json"), dump_json(j));
  return kOk;
}

inline int cmd_shifts(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_run_config(o.config);
  cfg.setup.validate();
  if (!cfg.meter) throw ConfigError("config error at /meter: shifts needs a meter section");
  const MeterSpec& m = *cfg.meter;

  ShiftReport rep;
  std::string coupling;
  if (m.coupling == MeterCoupling::rabi) {
    coupling = "rabi";
    const Complex wv = weak_value_dissipative(cfg.setup, cfg.dissipator, m.tau).value;
    rep = rabi_shifts(m.state, wv, m.g, m.t, m.tau, m.space.omega_f, m.space.hbar);
  } else {
    coupling = "jc";
    if (cfg.setup.dim() != 2) throw ConfigError("config error at /meter/coupling: jc needs a two-level system");
    WeakMeasurementSetup plus = cfg.setup, minus = cfg.setup;
    plus.A_SI = sigma_plus();
    minus.A_SI = sigma_minus();
    const Complex wp = weak_value_dissipative(plus, cfg.dissipator, m.tau).value;
    const Complex wm = weak_value_dissipative(minus, cfg.dissipator, m.tau).value;
    rep = jc_shifts(wp, wm, m.state, m.g, m.t, m.tau, m.space.omega_f, m.Delta, m.space.hbar);
  }
  const auto avg = commutator_averages(m.space, m.state, m.t, m.tau);

  json j;
  j["coupling"] = coupling;
  j["Q_shift"] = rep.Q_shift;
  j["P_shift"] = rep.P_shift;
  j["g"] = rep.g;
  j["t"] = rep.t;
  j["tau"] = rep.tau;
  j["omega_f"] = rep.omega_f;
  j["Delta"] = rep.Delta;
  json wv = json::array();
  for (const auto& w : rep.weak_value_inputs) wv.push_back({w.real(), w.imag()});
  j["weak_value_inputs"] = wv;
  j["averages"] = {{"N0", avg.N0}, {"Q0", avg.Q0}, {"P0", avg.P0}};

  const auto dir = detail::out_dir(o, cfg.output);
  const auto fmt = detail::out_format(o, cfg.output);
  if (fmt == "csv") {
    write_atomic(dir / (cfg.output.stem + ".csv"),
                 "Q_shift,P_shift\n" + format_double(rep.Q_shift) + "," + format_double(rep.P_shift) + "\n");
  } else {
    write_atomic(dir / (cfg.output.stem + ".json"), dump_json(j));
  }
  out << "Q_shift " << format_double(rep.Q_shift) << "\nP_shift " << format_double(rep.P_shift) << "\n";
  return kOk;
}

/// Parses arguments, dispatches and maps errors onto exit codes.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Weak values and meter readouts under Lindblad dissipation"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--jobs", o.jobs, "Worker threads (0 = available cores)");
    sub->add_option("--seed", o.seed, "Seed for noise injection");
  };

  auto* wv = app.add_subcommand("weak-value", "Weak value over a rate*tau grid");
  wv->add_option("--config", o.config, "Run configuration (JSON)")->required();
  add_common(wv);

  auto* sc = app.add_subcommand("scenario", "Packaged experiment");
  sc->add_option("name", o.scenario, "Scenario name")->required();
  sc->add_option("--config", o.config, "Estimation parameters (JSON)");
  sc->add_option("--channel", o.channel, "classify: markov | nonmarkov_jc");
  sc->add_option("--noise", o.noise, "Gaussian noise sigma added to synthetic weak values");
  add_common(sc);

  auto* inv = app.add_subcommand("invert", "Weak value from measured quadrature averages");
  inv->add_option("--config", o.config, "Meter configuration (JSON)")->required();
  add_common(inv);

  auto* sh = app.add_subcommand("shifts", "Meter quadrature shifts");
  sh->add_option("--config", o.config, "Run configuration with a meter section (JSON)")->required();
  add_common(sh);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigInvalid;
  }

  try {
    if (*wv) return cmd_weak_value(o, out);
    if (*sc) return cmd_scenario(o, out);
    if (*inv) return cmd_invert(o, out);
    if (*sh) return cmd_shifts(o, out);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kConfigInvalid;
  } catch (const SingularInversion& e) {
    err << e.what() << "\n";
    return kSingular;
  } catch (const NotDensity& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigInvalid;
  } catch (const DimensionMismatch& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace weakdiss::cli
