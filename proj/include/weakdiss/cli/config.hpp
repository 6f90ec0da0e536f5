#pragma once

// Run configuration: a JSON document with a `version` field. Unknown fields are
// rejected; diagnostics carry the JSON path and the source line.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "weakdiss/lindblad.hpp"
#include "weakdiss/meter.hpp"
#include "weakdiss/operators.hpp"
#include "weakdiss/scenarios.hpp"
#include "weakdiss/weak_value.hpp"

namespace weakdiss::cli {

using nlohmann::json;

inline constexpr int kConfigVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  double start = 0.0;  // rate * tau
  double stop = 10.0;
  std::size_t count = 101;
  bool log_spacing = false;

  [[nodiscard]] std::vector<double> grid() const {
    return log_spacing ? log_grid(start, stop, count) : linear_grid(start, stop, count);
  }
};

enum class MeterCoupling { rabi, jaynes_cummings };

struct MeterSpec {
  MeterCoupling coupling = MeterCoupling::rabi;
  FockSpace space;
  MeterState state;
  double g = 1e-3;
  double t = 1.0;
  double tau = 0.0;  // physical time
  double Delta = 0.0;
  double omega_a = 0.0;
  std::optional<double> Q_f;
  std::optional<double> P_f;
};

struct OutputSpec {
  std::string directory = ".";
  std::string stem = "trace";
  std::string format = "csv";
};

struct RunConfig {
  int version = kConfigVersion;
  WeakMeasurementSetup setup;
  std::string observable_name;
  Dissipator dissipator;
  double reference_rate = 1.0;
  std::string channel_name;
  SweepSpec sweep;
  std::optional<MeterSpec> meter;
  OutputSpec output;
};

namespace detail {

/// 1-based line of the first occurrence of a quoted key, or 0.
inline std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  Reader(const json& node, std::string path, const std::string& text) : node_(node), path_(std::move(path)), text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::string where = key.empty() ? path_ : path_ + "/" + key;
    std::string out = "config error at " + (where.empty() ? std::string("/") : where);
    const std::size_t line = key.empty() ? 0 : line_of_key(text_, key);
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    throw ConfigError(out + ": " + msg);
  }

  void allow(std::initializer_list<const char*> keys) const {
    if (!node_.is_object()) fail("", "expected an object");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : node_.items()) {
      if (!ok.count(k)) fail(k, "unknown field '" + k + "'");
    }
  }

  [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

  [[nodiscard]] Reader child(const std::string& key) const {
    if (!has(key)) fail(key, "missing required field");
    return Reader(node_.at(key), path_ + "/" + key, text_);
  }

  [[nodiscard]] const json& raw(const std::string& key) const {
    if (!has(key)) fail(key, "missing required field");
    return node_.at(key);
  }

  [[nodiscard]] const json& node() const { return node_; }
  [[nodiscard]] const std::string& path() const { return path_; }
  [[nodiscard]] const std::string& text() const { return text_; }

  [[nodiscard]] double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "expected a finite number");
    return d;
  }
  [[nodiscard]] double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  [[nodiscard]] double positive(const std::string& key) const {
    const double d = number(key);
    if (!(d > 0.0)) fail(key, "must be > 0");
    return d;
  }
  [[nodiscard]] double nonnegative(const std::string& key) const {
    const double d = number(key);
    if (!(d >= 0.0)) fail(key, "must be >= 0");
    return d;
  }
  [[nodiscard]] long integer(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<long>();
  }
  [[nodiscard]] std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  [[nodiscard]] std::string string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  /// A complex number written as a number or as [re, im].
  [[nodiscard]] Complex complex_value(const json& v, const std::string& key) const {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      return {v[0].get<double>(), v[1].get<double>()};
    }
    fail(key, "expected a number or a [re, im] pair");
  }

  [[nodiscard]] Ket ket(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a nonempty array of amplitudes");
    Ket k(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) k(static_cast<Eigen::Index>(i)) = complex_value(v[i], key);
    return k;
  }

  [[nodiscard]] Operator matrix(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a square matrix (array of rows)");
    const auto n = static_cast<Eigen::Index>(v.size());
    Operator m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const json& row = v[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) fail(key, "matrix must be square");
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = complex_value(row[static_cast<std::size_t>(c)], key);
    }
    return m;
  }

  [[nodiscard]] Eigen::Vector3d vec3(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 3) fail(key, "expected three numbers");
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) fail(key, "expected three numbers");
      out(i) = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
  }

 private:
  const json& node_;
  std::string path_;
  const std::string& text_;
};


inline Operator parse_state(const Reader& r) {
  r.allow({"amplitudes", "bloch", "named", "epsilon"});
  const int given = static_cast<int>(r.has("amplitudes")) + static_cast<int>(r.has("bloch")) + static_cast<int>(r.has("named"));
  if (given != 1) r.fail("", "give exactly one of 'amplitudes', 'bloch' or 'named'");
  if (r.has("amplitudes")) {
    Ket k = r.ket("amplitudes");
    if (!(k.norm() > 0.0)) r.fail("amplitudes", "zero vector");
    return ket_to_density(normalized(k));
  }
  if (r.has("bloch")) {
    try {
      return bloch_to_density(BlochVector::from(r.vec3("bloch")));
    } catch (const Error& e) {
      r.fail("bloch", e.what());
    }
  }
  const std::string name = r.string("named");
  Ket k;
  if (name == "sodium_initial") {
    k = sodium_initial_state();
  } else if (name == "sodium_anomalous_final") {
    k = sodium_final_state(SodiumPair::anomalous);
  } else if (name == "sodium_constant_final") {
    k = sodium_final_state(SodiumPair::constant);
  } else if (name == "epsilon_initial" || name == "epsilon_final") {
    try {
      const auto st = epsilon_states(r.number("epsilon"));
      k = name == "epsilon_initial" ? st.psi_i : st.psi_fI0;
    } catch (const Error& e) {
      r.fail("epsilon", e.what());
    }
  } else if (name == "excited" || name == "ground") {
    k = Ket::Zero(2);
    k(name == "excited" ? 0 : 1) = 1.0;
  } else {
    r.fail("named", "unknown state '" + name + "'");
  }
  return ket_to_density(normalized(k));
}

inline Operator parse_observable(const Reader& r, Eigen::Index dim, std::string& name) {
  r.allow({"named", "matrix", "pauli", "omega_a", "t"});
  if (r.has("matrix")) {
    name = "matrix";
    return r.matrix("matrix");
  }
  if (r.has("pauli")) {
    const Reader p = r.child("pauli");
    p.allow({"a", "m"});
    name = "pauli";
    const Complex a = p.has("a") ? p.complex_value(p.raw("a"), "a") : Complex(0.0);
    const json& mv = p.raw("m");
    if (!mv.is_array() || mv.size() != 3) p.fail("m", "expected three (possibly complex) components");
    Eigen::Vector3cd m;
    for (int i = 0; i < 3; ++i) m(i) = p.complex_value(mv[static_cast<std::size_t>(i)], "m");
    return pauli_combination(a, m);
  }
  name = r.string("named");
  if (name == "jy6") return jy_six_level();
  if (name == "identity") return identity(dim);
  if (name == "sigma_x") return pauli(Axis::x);
  if (name == "sigma_y") return pauli(Axis::y);
  if (name == "sigma_z") return pauli(Axis::z);
  if (name == "sigma_plus") return sigma_plus();
  if (name == "sigma_minus") return sigma_minus();
  if (name == "rabi_sigma_x") return measured_operator_rabi(r.number("omega_a"), r.number("t")).op;
  r.fail("named", "unknown observable '" + name + "'");
}

inline RateModel parse_rate(const Reader& r) {
  if (r.has("rate")) return ConstantRate{r.nonnegative("rate")};
  if (r.has("nonmarkov_jc")) {
    const Reader nm = r.child("nonmarkov_jc");
    nm.allow({"gamma0", "lambda"});
    return NonMarkovJC{nm.positive("gamma0"), nm.positive("lambda")};
  }
  r.fail("", "channel needs 'rate' or 'nonmarkov_jc'");
}

inline Dissipator parse_channel(const Reader& r, Eigen::Index dim, double& reference_rate, std::string& name) {
  r.allow({"named", "gamma", "rate", "gamma0", "lambda", "jumps", "reference_rate"});
  if (r.has("jumps")) {
    name = "custom";
    const json& arr = r.raw("jumps");
    if (!arr.is_array()) r.fail("jumps", "expected an array");
    std::vector<DissipationChannel> chans;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Reader j(arr[i], r.path() + "/jumps/" + std::to_string(i), r.text());
      j.allow({"matrix", "rate", "nonmarkov_jc", "label"});
      Operator m = j.matrix("matrix");
      if (m.rows() != dim) j.fail("matrix", "jump dimension differs from system dimension " + std::to_string(dim));
      chans.push_back({std::move(m), parse_rate(j), j.string_or("label", "L" + std::to_string(i))});
    }
    Dissipator d(std::move(chans), dim);
    reference_rate = r.has("reference_rate") ? r.positive("reference_rate") : d.max_rate();
    if (!(reference_rate > 0.0)) reference_rate = 1.0;
    return d;
  }
  name = r.string("named");
  if (name == "amplitude_damping") {
    if (dim != 2) r.fail("named", "amplitude_damping needs a two-level system");
    reference_rate = r.positive("gamma");
    return amplitude_damping(reference_rate);
  }
  if (name == "sodium") {
    if (dim != six_level::dim) r.fail("named", "sodium needs the six-level system");
    reference_rate = r.positive("rate");
    return sodium_dissipator(reference_rate);
  }
  if (name == "nonmarkov_jc") {
    if (dim != 2) r.fail("named", "nonmarkov_jc needs a two-level system");
    reference_rate = r.positive("gamma0");
    return nonmarkov_jc_dissipator(reference_rate, r.positive("lambda"));
  }
  r.fail("named", "unknown channel '" + name + "'");
}

inline SweepSpec parse_sweep(const Reader& r) {
  r.allow({"start", "stop", "count", "spacing"});
  SweepSpec s;
  s.start = r.nonnegative("start");
  s.stop = r.nonnegative("stop");
  const long count = r.integer("count");
  if (count < 1 || count > 1000000) r.fail("count", "must be in [1, 1000000]");
  s.count = static_cast<std::size_t>(count);
  if (s.stop < s.start) r.fail("stop", "must be >= start");
  const std::string spacing = r.string_or("spacing", "linear");
  if (spacing == "log") {
    if (!(s.start > 0.0)) r.fail("start", "log spacing needs start > 0");
    s.log_spacing = true;
  } else if (spacing != "linear") {
    r.fail("spacing", "expected 'linear' or 'log'");
  }
  return s;
}

inline MeterSpec parse_meter(const Reader& r) {
  r.allow({"coupling", "omega_f", "n_max", "hbar", "state", "g", "t", "tau", "Delta", "omega_a", "measured"});
  MeterSpec m;
  const std::string coupling = r.string_or("coupling", "rabi");
  if (coupling == "jc") {
    m.coupling = MeterCoupling::jaynes_cummings;
  } else if (coupling != "rabi") {
    r.fail("coupling", "expected 'rabi' or 'jc'");
  }
  m.space.omega_f = r.has("omega_f") ? r.positive("omega_f") : 1.0;
  m.space.hbar = r.has("hbar") ? r.positive("hbar") : 1.0;
  if (r.has("n_max")) {
    const long n = r.integer("n_max");
    if (n < 2 || n > 200) r.fail("n_max", "must be in [2, 200]");
    m.space.n_max = static_cast<int>(n);
  }
  if (r.has("state")) {
    const Reader s = r.child("state");
    s.allow({"kind", "n", "n_eq", "temperature"});
    const std::string kind = s.string("kind");
    if (kind == "vacuum") {
      m.state = MeterState::vacuum();
    } else if (kind == "number") {
      const long n = s.integer("n");
      if (n < 0 || n > m.space.n_max) s.fail("n", "must be in [0, n_max]");
      m.state = MeterState::number(static_cast<int>(n));
    } else if (kind == "thermal") {
      if (s.has("n_eq")) {
        m.state = MeterState::thermal(s.nonnegative("n_eq"));
      } else {
        m.state = MeterState::thermal(thermal_occupation(m.space.omega_f, s.positive("temperature"), m.space.hbar));
      }
    } else {
      s.fail("kind", "expected 'vacuum', 'number' or 'thermal'");
    }
  }
  m.g = r.number_or("g", m.g);
  m.t = r.has("t") ? r.nonnegative("t") : m.t;
  m.tau = r.has("tau") ? r.nonnegative("tau") : m.tau;
  m.Delta = r.number_or("Delta", 0.0);
  m.omega_a = r.number_or("omega_a", 0.0);
  if (r.has("measured")) {
    const Reader q = r.child("measured");
    q.allow({"Q_f", "P_f"});
    m.Q_f = q.number("Q_f");
    m.P_f = q.number("P_f");
  }
  return m;
}

inline OutputSpec parse_output(const Reader& r) {
  r.allow({"directory", "stem", "format"});
  OutputSpec o;
  o.directory = r.string_or("directory", o.directory);
  o.stem = r.string_or("stem", o.stem);
  o.format = r.string_or("format", o.format);
  if (o.format != "csv" && o.format != "json") r.fail("format", "expected 'csv' or 'json'");
  if (o.stem.empty() || o.stem.find('/') != std::string::npos) r.fail("stem", "must be a plain file name");
  return o;
}

}  // namespace detail

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n');
    throw ConfigError("config error (line " + std::to_string(line) + "): invalid JSON: " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void check_version(const detail::Reader& r) {
  if (!r.has("version")) r.fail("version", "missing required field");
  if (r.integer("version") != kConfigVersion) {
    r.fail("version", "unsupported version; expected " + std::to_string(kConfigVersion));
  }
}

/// `need_system = false` accepts meter-only documents (inversion of measured shifts).
inline RunConfig parse_run_config(const std::string& text, bool need_system = true) {
  const json doc = parse_json_text(text);
  const detail::Reader root(doc, "", text);
  root.allow({"version", "system", "observable", "channel", "sweep", "meter", "output"});
  check_version(root);

  RunConfig cfg;
  if (root.has("output")) cfg.output = detail::parse_output(root.child("output"));
  if (root.has("meter")) {
    cfg.meter = detail::parse_meter(root.child("meter"));
    cfg.setup.g = cfg.meter->g;
    cfg.setup.t = cfg.meter->t;
  }
  if (!need_system && !root.has("system")) return cfg;

  const auto sys = root.child("system");
  sys.allow({"dimension", "pre", "post"});
  const long dim = sys.integer("dimension");
  if (dim < 1 || dim > 16) sys.fail("dimension", "must be in [1, 16]");
  const auto pre = detail::parse_state(sys.child("pre"));
  const auto post = detail::parse_state(sys.child("post"));
  if (pre.rows() != dim) sys.fail("pre", "state dimension differs from 'dimension'");
  if (post.rows() != dim) sys.fail("post", "state dimension differs from 'dimension'");
  cfg.setup.sigma_i = pre;
  cfg.setup.sigma_fI = post;

  const auto obs = root.child("observable");
  cfg.setup.A_SI = detail::parse_observable(obs, dim, cfg.observable_name);
  if (cfg.setup.A_SI.rows() != dim) obs.fail("", "observable dimension differs from 'dimension'");

  try {
    cfg.dissipator = detail::parse_channel(root.child("channel"), dim, cfg.reference_rate, cfg.channel_name);
  } catch (const Error& e) {
    root.fail("channel", e.what());
  }
  if (root.has("sweep")) cfg.sweep = detail::parse_sweep(root.child("sweep"));
  return cfg;
}

inline RunConfig load_run_config(const std::string& path, bool need_system = true) {
  return parse_run_config(read_text_file(path), need_system);
}

}  // namespace weakdiss::cli
