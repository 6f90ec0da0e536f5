#pragma once

// Packaged experiments: the six-level anomalous and constant traces, rate
// estimation from amplified weak values and the Markovianity discriminator.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "weakdiss/errors.hpp"
#include "weakdiss/lindblad.hpp"
#include "weakdiss/operators.hpp"
#include "weakdiss/weak_value.hpp"

namespace weakdiss {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioResult {
  std::string name;
  std::optional<WeakValueTrace> trace;
  std::vector<std::pair<std::string, double>> numbers;
  std::vector<std::pair<std::string, std::string>> labels;
  std::vector<Check> checks;

  [[nodiscard]] bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
  [[nodiscard]] double number(const std::string& key) const {
    for (const auto& [k, v] : numbers)
      if (k == key) return v;
    throw std::out_of_range("no number '" + key + "'");
  }
};

struct Sample {
  double tau = 0.0;
  Complex wv;
};

inline std::vector<double> linear_grid(double start, double stop, std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k) {
    g[k] = count == 1 ? start : start + (stop - start) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return g;
}

inline std::vector<double> log_grid(double start, double stop, std::size_t count) {
  if (!(start > 0.0) || !(stop > 0.0)) throw InvalidChannel("log grid needs positive bounds");
  std::vector<double> g = linear_grid(std::log(start), std::log(stop), count);
  for (auto& v : g) v = std::exp(v);
  return g;
}

// ---------------------------------------------------------------------------
// Six-level system
// ---------------------------------------------------------------------------

enum class SodiumPair { anomalous, constant };

inline constexpr double kSodiumAlpha = 0.0498;

inline Ket sodium_initial_state() {
  using namespace six_level;
  Ket psi = Ket::Zero(dim);
  psi(e_m3h) = 0.5;
  psi(e_m1h) = 0.5 * kI;
  psi(e_p1h) = 0.5;
  psi(e_p3h) = 0.5;
  return psi;
}

/// Post-selected kets with amplitudes as printed (3 significant figures).
inline Ket sodium_final_state(SodiumPair pair) {
  using namespace six_level;
  Ket psi = Ket::Zero(dim);
  if (pair == SodiumPair::anomalous) {
    const double a = kSodiumAlpha;
    psi(e_m3h) = a;
    psi(e_m1h) = -0.995;
    psi(e_p3h) = -a * Complex(1.0, 1.0);
    psi(g_m1h) = a;
    psi(g_p1h) = Complex(-0.00734, 0.00114);
  } else {
    psi(g_m1h) = 0.989;
    psi(g_p1h) = Complex(-0.146, 0.0226);
  }
  return psi;
}

inline WeakMeasurementSetup sodium_setup(SodiumPair pair) {
  return make_pure_setup(sodium_initial_state(), sodium_final_state(pair), jy_six_level());
}

inline std::vector<Ket> sodium_ground_basis() {
  Ket g1 = Ket::Zero(six_level::dim), g2 = Ket::Zero(six_level::dim);
  g1(six_level::g_m1h) = 1.0;
  g2(six_level::g_p1h) = 1.0;
  return {g1, g2};
}

inline constexpr Complex kSodiumAnomalousAt0{0.0954, 0.0};
inline constexpr Complex kSodiumAnomalousAtInf{-0.346, 0.151};

inline ScenarioResult sodium_anomalous(std::size_t count = 201, unsigned jobs = 0) {
  const double big_gamma = 1.0;
  const auto setup = sodium_setup(SodiumPair::anomalous);
  const auto d = sodium_dissipator(big_gamma);

  ScenarioResult r;
  r.name = "sodium-anomalous";
  r.trace = trace_over_tau(setup, d, linear_grid(0.0, 10.0, count), jobs);
  const Complex w0 = r.trace->values.front();
  const auto limit = weak_value_limit_infinite(setup, d);
  const Complex winf = limit.value;

  r.numbers = {{"re_wv_tau0", w0.real()},         {"im_wv_tau0", w0.imag()},
               {"re_wv_tau_inf", winf.real()},    {"im_wv_tau_inf", winf.imag()},
               {"re_wv_tau10", r.trace->values.back().real()}, {"im_wv_tau10", r.trace->values.back().imag()},
               {"postselect_prob_tau0", r.trace->postselection_probs.front()},
               {"postselect_prob_tau_inf", limit.postselection_prob}};

  auto within = [](double v, double ref, double tol) { return std::abs(v - ref) <= tol; };
  r.checks.push_back({"re_wv_tau0", within(w0.real(), kSodiumAnomalousAt0.real(), 5e-4), std::to_string(w0.real())});
  r.checks.push_back({"im_wv_tau0", within(w0.imag(), 0.0, 5e-4), std::to_string(w0.imag())});
  r.checks.push_back({"re_wv_tau_inf", within(winf.real(), kSodiumAnomalousAtInf.real(), 2e-3), std::to_string(winf.real())});
  r.checks.push_back({"im_wv_tau_inf", within(winf.imag(), kSodiumAnomalousAtInf.imag(), 2e-3), std::to_string(winf.imag())});
  return r;
}

inline ScenarioResult sodium_constant(std::size_t count = 401, unsigned jobs = 0) {
  const double big_gamma = 1.0;
  const auto setup = sodium_setup(SodiumPair::constant);
  const auto d = sodium_dissipator(big_gamma);

  ScenarioResult r;
  r.name = "sodium-constant";
  r.trace = trace_over_tau(setup, d, linear_grid(0.0, 40.0, count), jobs);
  const auto& tr = *r.trace;

  double re_min = INFINITY, re_max = -INFINITY, im_min = INFINITY, im_max = -INFINITY;
  std::size_t used = 0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.gaps[k] || tr.tau_grid[k] <= 0.0) continue;
    ++used;
    re_min = std::min(re_min, tr.values[k].real());
    re_max = std::max(re_max, tr.values[k].real());
    im_min = std::min(im_min, tr.values[k].imag());
    im_max = std::max(im_max, tr.values[k].imag());
  }
  if (used == 0) throw PostselectionVanishes("no valid points in the constant trace");
  const Complex limit = weak_value_limit_infinite(setup, d).value;
  const Complex mid{0.5 * (re_min + re_max), 0.5 * (im_min + im_max)};
  const double dev = std::max({std::abs(re_min - limit.real()), std::abs(re_max - limit.real()),
                               std::abs(im_min - limit.imag()), std::abs(im_max - limit.imag())});
  const bool gap_at_zero = !tr.tau_grid.empty() && tr.tau_grid.front() == 0.0 && tr.gaps.front();

  r.numbers = {{"re_wv", mid.real()},         {"im_wv", mid.imag()},
               {"spread_re", re_max - re_min}, {"spread_im", im_max - im_min},
               {"re_wv_tau_inf", limit.real()}, {"im_wv_tau_inf", limit.imag()},
               {"max_deviation_from_limit", dev}};
  r.checks.push_back({"spread_re", re_max - re_min < 1e-6, std::to_string(re_max - re_min)});
  r.checks.push_back({"spread_im", im_max - im_min < 1e-6, std::to_string(im_max - im_min)});
  r.checks.push_back({"im_nonzero", std::abs(mid.imag()) > 1e-3, std::to_string(mid.imag())});
  r.checks.push_back({"equals_limit", dev < 1e-8, std::to_string(dev)});
  r.checks.push_back({"tau0_gap", gap_at_zero, gap_at_zero ? "gap" : "no gap"});
  return r;
}

// ---------------------------------------------------------------------------
// Least-squares fits
// ---------------------------------------------------------------------------

struct FitResult {
  Eigen::VectorXd coef;
  double residual_norm = 0.0;
  double relative_residual = 0.0;  // |y - fit| / |y|
};

/// Ordinary least squares y ~ sum_k coef_k * basis_k(x).
template <typename Basis>
FitResult least_squares(const std::vector<double>& x, const std::vector<double>& y, int terms, Basis basis) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < terms) throw DegenerateFit("need at least " + std::to_string(terms) + " samples");
  Eigen::MatrixXd a(n, terms);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < terms; ++k) a(i, k) = basis(k, x[static_cast<std::size_t>(i)]);
    b(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < terms) throw DegenerateFit("design matrix is rank deficient");
  FitResult f;
  f.coef = qr.solve(b);
  f.residual_norm = (a * f.coef - b).norm();
  const double yn = b.norm();
  f.relative_residual = yn > 0.0 ? f.residual_norm / yn : INFINITY;
  return f;
}

namespace detail {

/// Re(wv) with the tau = 0 sample subtracted and removed, when present.
inline std::pair<std::vector<double>, std::vector<double>> baseline_removed(const std::vector<Sample>& samples) {
  double base = 0.0;
  for (const auto& s : samples) {
    if (s.tau == 0.0) base = s.wv.real();
  }
  std::vector<double> x, y;
  for (const auto& s : samples) {
    if (s.tau == 0.0) continue;
    if (!std::isfinite(s.tau) || !std::isfinite(s.wv.real())) throw DegenerateFit("non-finite sample");
    x.push_back(s.tau);
    y.push_back(s.wv.real() - base);
  }
  return {std::move(x), std::move(y)};
}

}  // namespace detail

struct GammaEstimate {
  double gamma = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double relative_residual = 0.0;
};

/// gamma = epsilon * d Re(wv) / d tau, from a line with intercept.
inline GammaEstimate estimate_gamma(const std::vector<Sample>& samples, double epsilon) {
  if (samples.size() < 2) throw DegenerateFit("need at least 2 samples");
  std::vector<double> x, y;
  for (const auto& s : samples) {
    x.push_back(s.tau);
    y.push_back(s.wv.real());
  }
  const auto f = least_squares(x, y, 2, [](int k, double t) { return k == 0 ? 1.0 : t; });
  GammaEstimate e;
  e.intercept = f.coef(0);
  e.slope = f.coef(1);
  e.gamma = e.slope * epsilon;
  e.relative_residual = f.relative_residual;
  return e;
}

struct EpsilonSample {
  double epsilon = 0.0;
  Complex wv;
};

/// Fixed-tau sweep over epsilon: Re(wv) = c / epsilon + beta * epsilon, gamma = c / tau.
inline GammaEstimate estimate_gamma_epsilon_sweep(const std::vector<EpsilonSample>& samples, double tau) {
  if (!(tau > 0.0)) throw DegenerateFit("epsilon sweep needs tau > 0");
  std::vector<double> x, y;
  for (const auto& s : samples) {
    x.push_back(s.epsilon);
    y.push_back(s.wv.real());
  }
  const auto f = least_squares(x, y, 2, [](int k, double e) { return k == 0 ? 1.0 / e : e; });
  GammaEstimate est;
  est.slope = f.coef(0);
  est.intercept = f.coef(1);
  est.gamma = f.coef(0) / tau;
  est.relative_residual = f.relative_residual;
  return est;
}

enum class Markovianity { markovian, strongly_non_markovian, inconclusive };

inline std::string to_string(Markovianity m) {
  switch (m) {
    case Markovianity::markovian: return "Markovian";
    case Markovianity::strongly_non_markovian: return "strongly-non-Markovian";
    case Markovianity::inconclusive: break;
  }
  return "inconclusive";
}

struct MarkovianityVerdict {
  Markovianity label = Markovianity::inconclusive;
  double c1 = 0.0;
  double c2 = 0.0;
  double relative_residual_linear = 0.0;
  double relative_residual_quadratic = 0.0;
};

inline constexpr double kResidualRatio = 0.1;

inline MarkovianityVerdict classify_markovianity(const std::vector<Sample>& samples, double ratio = kResidualRatio) {
  const auto [x, y] = detail::baseline_removed(samples);
  if (x.size() < 4) throw DegenerateFit("need at least 4 samples with tau > 0");
  MarkovianityVerdict v;
  const double ynorm = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())).norm();
  if (!(ynorm > 0.0)) return v;

  const auto lin = least_squares(x, y, 1, [](int, double t) { return t; });
  const auto quad = least_squares(x, y, 1, [](int, double t) { return t * t; });
  v.c1 = lin.coef(0);
  v.c2 = quad.coef(0);
  v.relative_residual_linear = lin.relative_residual;
  v.relative_residual_quadratic = quad.relative_residual;
  if (lin.relative_residual < ratio * quad.relative_residual) {
    v.label = Markovianity::markovian;
  } else if (quad.relative_residual < ratio * lin.relative_residual) {
    v.label = Markovianity::strongly_non_markovian;
  }
  return v;
}

struct LambdaEstimate {
  double lambda = 0.0;
  double c2 = 0.0;
  double relative_residual = 0.0;
  bool regime_ok = false;
};

inline constexpr double kQuadraticRegimeTol = 1e-2;

/// lambda = 2 epsilon c2 / gamma0 from Re(wv) - Re(wv(0)) = c2 tau^2.
inline LambdaEstimate estimate_lambda(const std::vector<Sample>& samples, double epsilon, double gamma0) {
  if (!(gamma0 > 0.0)) throw DegenerateFit("gamma0 must be positive");
  const auto [x, y] = detail::baseline_removed(samples);
  if (x.empty()) throw DegenerateFit("need samples with tau > 0");
  const auto f = least_squares(x, y, 1, [](int, double t) { return t * t; });
  LambdaEstimate e;
  e.c2 = f.coef(0);
  e.lambda = 2.0 * epsilon * e.c2 / gamma0;
  e.relative_residual = f.relative_residual;
  e.regime_ok = f.relative_residual <= kQuadraticRegimeTol;
  return e;
}

// ---------------------------------------------------------------------------
// Synthetic data from the exact trace quotient
// ---------------------------------------------------------------------------

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline Complex epsilon_weak_value(double epsilon, double big_gamma) {
  const auto st = epsilon_states(epsilon);
  const Operator sx = pauli(Axis::x);
  const Complex num = (st.sigma_fI0 * two_level_attenuate(sx * st.sigma_i, big_gamma)).trace();
  const Complex den = (st.sigma_fI0 * two_level_attenuate(st.sigma_i, big_gamma)).trace();
  if (std::abs(den) < kPostselectionTol) throw PostselectionVanishes("epsilon states are orthogonal");
  return num / den;
}

inline void add_noise(std::vector<Sample>& s, const NoiseSpec& noise) {
  if (!(noise.sigma > 0.0)) return;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> nd(0.0, noise.sigma);
  for (auto& v : s) {
    const double re = nd(rng);
    const double im = nd(rng);
    v.wv += Complex(re, im);
  }
}

}  // namespace detail

/// sigma_x weak value with epsilon states after amplitude damping at rate gamma.
inline Complex markov_exact_wv(double gamma, double tau, double epsilon) {
  return detail::epsilon_weak_value(epsilon, std::exp(-0.5 * gamma * tau));
}

/// Same, through the non-Markovian cavity channel.
inline Complex nonmarkov_exact_wv(double gamma0, double lambda, double tau, double epsilon) {
  return detail::epsilon_weak_value(epsilon, nonmarkov_big_gamma(tau, gamma0, lambda));
}

inline std::vector<Sample> markov_samples(double gamma, double epsilon, const std::vector<double>& taus,
                                          const NoiseSpec& noise = {}) {
  std::vector<Sample> s;
  for (double t : taus) s.push_back({t, markov_exact_wv(gamma, t, epsilon)});
  detail::add_noise(s, noise);
  return s;
}

inline std::vector<Sample> nonmarkov_samples(double gamma0, double lambda, double epsilon,
                                             const std::vector<double>& taus, const NoiseSpec& noise = {}) {
  std::vector<Sample> s;
  for (double t : taus) s.push_back({t, nonmarkov_exact_wv(gamma0, lambda, t, epsilon)});
  detail::add_noise(s, noise);
  return s;
}

// ---------------------------------------------------------------------------
// Packaged estimation scenarios
// ---------------------------------------------------------------------------

struct EstimationParams {
  double gamma = 0.1;
  double gamma0 = 0.1;
  double lambda = 1.0;
  double epsilon = 0.01;
  double max_rate_tau = 1e-2;  // largest rate * tau sampled
  std::size_t count = 10;
  NoiseSpec noise;
};

inline std::vector<Sample> to_samples(const std::vector<double>& taus, const std::vector<Complex>& wv) {
  std::vector<Sample> s;
  for (std::size_t k = 0; k < taus.size(); ++k) s.push_back({taus[k], wv[k]});
  return s;
}

inline ScenarioResult scenario_estimate_gamma(const EstimationParams& p) {
  ScenarioResult r;
  r.name = "estimate-gamma";
  const auto taus = linear_grid(0.0, p.max_rate_tau / p.gamma, p.count);
  const auto samples = markov_samples(p.gamma, p.epsilon, taus, p.noise);
  const auto est = estimate_gamma(samples, p.epsilon);

  // fixed-tau sweep over epsilon
  const double tau_fixed = taus.back();
  std::vector<EpsilonSample> sweep;
  for (double e : {0.005, 0.0075, 0.01, 0.015, 0.02}) sweep.push_back({e, markov_exact_wv(p.gamma, tau_fixed, e)});
  const auto est_sweep = estimate_gamma_epsilon_sweep(sweep, tau_fixed);

  WeakValueTrace tr;
  for (const auto& s : samples) {
    tr.tau_grid.push_back(s.tau);
    tr.values.push_back(s.wv);
    const auto st = epsilon_states(p.epsilon);
    tr.postselection_probs.push_back(
        (st.sigma_fI0 * two_level_damping_apply(st.sigma_i, p.gamma, s.tau)).trace().real());
    tr.gaps.push_back(0);
  }
  tr.channel_description = "amplitude_damping(gamma=" + std::to_string(p.gamma) + ")";
  r.trace = std::move(tr);

  const double rel = std::abs(est.gamma - p.gamma) / p.gamma;
  const double rel_sweep = std::abs(est_sweep.gamma - p.gamma) / p.gamma;
  r.numbers = {{"gamma_true", p.gamma},          {"epsilon", p.epsilon},
               {"gamma_hat", est.gamma},         {"relative_error", rel},
               {"fit_relative_residual", est.relative_residual},
               {"gamma_hat_epsilon_sweep", est_sweep.gamma}, {"relative_error_epsilon_sweep", rel_sweep}};
  if (p.noise.sigma == 0.0) {
    r.checks.push_back({"gamma_within_1pct", rel < 1e-2, std::to_string(rel)});
    r.checks.push_back({"epsilon_sweep_within_1pct", rel_sweep < 1e-2, std::to_string(rel_sweep)});
  }
  return r;
}

enum class ChannelModel { markov, nonmarkov_jc };

inline ScenarioResult scenario_classify(ChannelModel model, const EstimationParams& p) {
  ScenarioResult r;
  r.name = "classify";
  std::vector<Sample> samples;
  if (model == ChannelModel::markov) {
    samples = markov_samples(p.gamma, p.epsilon, linear_grid(0.0, p.max_rate_tau / p.gamma, p.count), p.noise);
  } else {
    const double rate = std::max(p.lambda, p.gamma0);
    samples = nonmarkov_samples(p.gamma0, p.lambda, p.epsilon, linear_grid(0.0, p.max_rate_tau / rate, p.count), p.noise);
  }
  const auto v = classify_markovianity(samples);
  std::vector<double> taus;
  std::vector<Complex> wv;
  for (const auto& s : samples) {
    taus.push_back(s.tau);
    wv.push_back(s.wv);
  }
  WeakValueTrace tr;
  tr.tau_grid = taus;
  tr.values = wv;
  tr.postselection_probs.assign(taus.size(), NAN);
  tr.gaps.assign(taus.size(), 0);
  tr.channel_description = model == ChannelModel::markov ? "amplitude_damping" : "nonmarkov_jc";
  r.trace = std::move(tr);

  const Markovianity expected =
      model == ChannelModel::markov ? Markovianity::markovian : Markovianity::strongly_non_markovian;
  r.labels = {{"channel", model == ChannelModel::markov ? "amplitude_damping" : "nonmarkov_jc"},
              {"verdict", to_string(v.label)}};
  r.numbers = {{"c1", v.c1},
               {"c2", v.c2},
               {"relative_residual_linear", v.relative_residual_linear},
               {"relative_residual_quadratic", v.relative_residual_quadratic}};
  if (p.noise.sigma == 0.0) r.checks.push_back({"verdict", v.label == expected, to_string(v.label)});
  return r;
}

inline ScenarioResult scenario_estimate_lambda(const EstimationParams& p) {
  ScenarioResult r;
  r.name = "estimate-lambda";
  const double rate = std::max(p.lambda, p.gamma0);
  const auto samples =
      nonmarkov_samples(p.gamma0, p.lambda, p.epsilon, linear_grid(0.0, p.max_rate_tau / rate, p.count), p.noise);
  const auto est = estimate_lambda(samples, p.epsilon, p.gamma0);
  WeakValueTrace tr;
  for (const auto& s : samples) {
    tr.tau_grid.push_back(s.tau);
    tr.values.push_back(s.wv);
  }
  tr.postselection_probs.assign(samples.size(), NAN);
  tr.gaps.assign(samples.size(), 0);
  tr.channel_description = "nonmarkov_jc";
  r.trace = std::move(tr);
  const double rel = std::abs(est.lambda - p.lambda) / p.lambda;
  r.numbers = {{"lambda_true", p.lambda}, {"lambda_hat", est.lambda}, {"relative_error", rel},
               {"fit_relative_residual", est.relative_residual}};
  r.labels = {{"regime", est.regime_ok ? "quadratic" : "outside-quadratic-regime"}};
  r.checks.push_back({"quadratic_regime", est.regime_ok, std::to_string(est.relative_residual)});
  if (p.noise.sigma == 0.0) r.checks.push_back({"lambda_within_2pct", rel < 2e-2, std::to_string(rel)});
  return r;
}

}  // namespace weakdiss
