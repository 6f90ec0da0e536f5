// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "support.hpp"
#include "weakdiss/cli/commands.hpp"
#include "weakdiss/weakdiss.hpp"

using namespace weakdiss;
using weakdiss::testing::max_abs;
using weakdiss::testing::Rng;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

nlohmann::json run_scenario_cli(const std::string& name, double& seconds, int& code) {
  const fs::path dir = fs::temp_directory_path() / ("weakdiss_acceptance_" + name);
  fs::remove_all(dir);
  const std::string out = dir.string();
  const char* argv[] = {"weakdiss", "scenario", name.c_str(), "--out", out.c_str()};
  std::ostringstream sink_out, sink_err;
  const auto t0 = std::chrono::steady_clock::now();
  code = cli::run_cli(5, argv, sink_out, sink_err);
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ifstream in(dir / (name + ".json"));
  nlohmann::json j = in ? nlohmann::json::parse(in) : nlohmann::json::object();
  fs::remove_all(dir);
  return j;
}

Outcome criterion1() {
  double secs = 0.0;
  int code = -1;
  const auto j = run_scenario_cli("sodium-anomalous", secs, code);
  if (!j.contains("verdict")) return {false, "no scenario output, exit " + std::to_string(code)};
  const auto& v = j["verdict"];
  const double re0 = v["re_wv_tau0"], im0 = v["im_wv_tau0"], reinf = v["re_wv_tau_inf"], iminf = v["im_wv_tau_inf"];
  const bool ok = code == 0 && std::abs(re0 - 0.0954) <= 5e-4 && std::abs(im0) <= 5e-4 &&
                  std::abs(reinf + 0.346) <= 2e-3 && std::abs(iminf - 0.151) <= 2e-3 && secs < 5.0;
  return {ok, "Aw(0)=" + fmt(re0) + "+" + fmt(im0) + "i Aw(inf)=" + fmt(reinf) + "+" + fmt(iminf) +
                  "i runtime=" + fmt(secs) + "s"};
}

Outcome criterion2() {
  double secs = 0.0;
  int code = -1;
  const auto j = run_scenario_cli("sodium-constant", secs, code);
  if (!j.contains("verdict")) return {false, "no scenario output, exit " + std::to_string(code)};
  const auto& v = j["verdict"];
  const double sre = v["spread_re"], sim = v["spread_im"], im = v["im_wv"];
  const bool ok = code == 0 && sre < 1e-6 && sim < 1e-6 && std::abs(im) > 1e-3;
  return {ok, "spread(Re)=" + fmt(sre) + " spread(Im)=" + fmt(sim) + " Im=" + fmt(im)};
}

Outcome criterion3() {
  Rng rng(1003);
  const Dissipator d = amplitude_damping(1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    Operator a = rng.hermitian(2);
    a /= Eigen::SelfAdjointEigenSolver<Operator>(a).eigenvalues().cwiseAbs().maxCoeff();
    const auto s = make_pure_setup(rng.ket(2), rng.ket(2), a);
    const Complex mean = (s.A_SI * s.sigma_i).trace();
    worst = std::max(worst, std::abs(weak_value_dissipative(s, d, 30.0).value - mean));
  }
  return {worst < 1e-6, "max |Aw(30) - <A>_i| = " + fmt(worst) + " over 50 setups (unit-norm observables)"};
}

Outcome criterion4() {
  Rng rng(1004);
  const double gamma = 1.0;
  const Dissipator d = amplitude_damping(gamma);
  double worst = 0.0;
  for (double gt : {0.1, 1.0, 10.0}) {
    for (int k = 0; k < 100; ++k) {
      const Operator c = rng.op(2);
      const Operator numeric = unvec(d.transfer_matrix(gt / gamma) * vec(c), 2);
      worst = std::max(worst, max_abs(numeric - two_level_damping_apply(c, gamma, gt / gamma)));
    }
  }
  return {worst < 1e-10, "max element error " + fmt(worst) + " over 300 cases"};
}

Outcome criterion5() {
  Rng rng(1005);
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    const BlochVector i = rng.bloch(k % 2 == 0), f = rng.bloch(k % 3 != 0);
    const double gamma = rng.uniform(0.1, 2.0), tau = rng.uniform(0.0, 10.0) / gamma;
    Complex a(rng.normal(), rng.normal()), b(rng.normal(), rng.normal());
    Eigen::Vector3cd m;
    const int kind = k % 4;
    if (kind == 0) {
      m = sigma_pm_vector(PmSign::plus);
      a = 0.0;
      b = 1.0;
    } else if (kind == 1) {
      m = sigma_pm_vector(PmSign::minus);
      a = 0.0;
      b = 1.0;
    } else {
      for (int c = 0; c < 3; ++c) m(c) = Complex(rng.normal(), kind == 3 ? rng.normal() : 0.0);
    }
    WeakMeasurementSetup s{bloch_to_density(i), bloch_to_density(f), pauli_combination(a, b * m)};
    const Complex trace = weak_value_dissipative(s, amplitude_damping(gamma), tau).value;
    const Complex bloch = weak_value_2level_analytic(i, f, a, b, m, gamma, tau);
    worst = std::max(worst, std::abs(bloch - trace) / std::max(std::abs(trace), 1e-300));
    if (kind < 2) {
      const Complex closed = weak_value_sigma_pm(i, f, gamma, tau, kind == 0 ? PmSign::plus : PmSign::minus);
      worst = std::max(worst, std::abs(closed - trace) / std::max(std::abs(trace), 1e-300));
    }
  }
  return {worst < 1e-9, "max relative error " + fmt(worst) + " over 500 draws"};
}

Outcome criterion6() {
  const double gamma = 0.1, eps = 0.01;
  double worst = 0.0;
  for (double gt : linear_grid(1e-3, 1e-2, 10)) {
    const Complex exact = markov_exact_wv(gamma, gt / gamma, eps);
    worst = std::max(worst, std::abs(exact - markov_short_time_wv(gamma, gt / gamma, eps)) / std::abs(exact));
  }
  EstimationParams p;
  p.gamma = gamma;
  p.epsilon = eps;
  const auto r = scenario_estimate_gamma(p);
  const double rel = r.number("relative_error");
  return {worst < 1e-2 && rel < 1e-2 && r.passed(),
          "max |exact-approx|/|exact|=" + fmt(worst) + " gamma_hat rel. error=" + fmt(rel)};
}

Outcome criterion7() {
  const double g0 = 0.1, lambda = 1.0, eps = 0.01;
  const Complex e0 = nonmarkov_exact_wv(g0, lambda, 0.0, eps);
  const Complex a0 = nonmarkov_short_time_wv(g0, lambda, 0.0, eps);
  std::vector<double> lx, ly;
  for (double lt : log_grid(1e-3, 5e-2, 12)) {
    const double tau = lt / lambda;
    const Complex dev = (nonmarkov_exact_wv(g0, lambda, tau, eps) - e0) - (nonmarkov_short_time_wv(g0, lambda, tau, eps) - a0);
    lx.push_back(std::log(tau));
    ly.push_back(std::log(std::abs(dev)));
  }
  const auto fit = least_squares(lx, ly, 2, [](int k, double x) { return k == 0 ? 1.0 : x; });
  const double slope = fit.coef(1);

  int correct = 0;
  for (double rate : {0.1, 0.3, 1.0}) {
    for (double e : {0.005, 0.015, 0.05}) {
      const auto m = markov_samples(rate, e, linear_grid(0.0, 1e-2 / rate, 10));
      correct += classify_markovianity(m).label == Markovianity::markovian;
      const auto n = nonmarkov_samples(rate, 10.0 * rate, e, linear_grid(0.0, 1e-2 / (10.0 * rate), 10));
      correct += classify_markovianity(n).label == Markovianity::strongly_non_markovian;
    }
  }
  return {std::abs(slope - 3.0) <= 0.3 && correct == 18,
          "log-log exponent " + fmt(slope) + ", classified " + std::to_string(correct) + "/18"};
}

Outcome criterion8() {
  const double g0 = 1.0;
  std::vector<Operator> basis;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      Operator e = Operator::Zero(2, 2);
      e(r, c) = 1.0;
      basis.push_back(e);
    }
  }
  double worst = 0.0;
  for (double lambda : {10.0 * g0, 0.5 * g0}) {
    const Dissipator d = nonmarkov_jc_dissipator(g0, lambda);
    const auto taus = linear_grid(0.0, 5.0 / g0, 101);
    const auto ev = d.evolve_many(basis, taus);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      for (std::size_t b = 0; b < basis.size(); ++b) {
        worst = std::max(worst, max_abs(ev[k][b] - nonmarkov_damping_apply(basis[b], g0, lambda, taus[k])));
      }
    }
  }
  return {worst < 1e-7, "max element error " + fmt(worst) + " (lambda = 10 g0 and 0.5 g0)"};
}

double shift_error(double gt, Coupling coupling) {
  const FockSpace space{12, 1.0};
  const double t = 1.0, tau = 0.4;
  const auto d = amplitude_damping(0.8);
  Ket pi(2), pf(2);
  pi << 0.6, 0.8;
  pf << Complex(0.3, 0.2), 0.9;
  const auto s = make_pure_setup(pi, pf, pauli(Axis::x), gt / t, t);
  const auto mu = MeterState::number(1);
  const auto sim = simulate_joint(s, d, tau, space, mu, coupling);
  ShiftReport rep;
  if (coupling == Coupling::rabi) {
    rep = rabi_shifts(mu, weak_value_dissipative(s, d, tau).value, s.g, t, tau, space.omega_f);
  } else {
    WeakMeasurementSetup plus = s, minus = s;
    plus.A_SI = sigma_plus();
    minus.A_SI = sigma_minus();
    rep = jc_shifts(weak_value_dissipative(plus, d, tau).value, weak_value_dissipative(minus, d, tau).value, mu, s.g,
                    t, tau, space.omega_f, 0.0);
  }
  return std::hypot(sim.Q - rep.Q_shift, sim.P - rep.P_shift) / std::hypot(rep.Q_shift, rep.P_shift);
}

Outcome criterion9() {
  const double rabi = shift_error(1e-2, Coupling::rabi) / shift_error(1e-3, Coupling::rabi);
  const double jc = shift_error(1e-2, Coupling::jaynes_cummings) / shift_error(1e-3, Coupling::jaynes_cummings);
  const bool ok = std::abs(rabi - 100.0) <= 20.0 && std::abs(jc - 100.0) <= 20.0;
  return {ok, "relative deviation ratio gt 1e-2 / 1e-3: Rabi " + fmt(rabi) + ", JC " + fmt(jc)};
}

Outcome criterion10() {
  const FockSpace space{30, 1.4};
  double worst = 0.0;
  for (int n : {0, 1, 5}) {
    for (double phase : {0.4, 2.3}) {
      const Complex wv = std::polar(1.3, phase);
      const double g = 1e-3, t = 0.5, tau = 0.8;
      const auto rep = rabi_shifts_number_state(n, wv, g, t, tau, space.omega_f);
      const auto avg = commutator_averages(space, MeterState::number(n), t, tau);
      worst = std::max(worst, std::abs(invert_weak_value(avg.Q0 + rep.Q_shift, avg.P0 + rep.P_shift, avg, g, t) - wv));
    }
  }
  return {worst < 1e-10, "max |recovered - Aw| = " + fmt(worst) + " over n in {0,1,5} x 2 phases"};
}

Outcome criterion11() {
  Rng rng(1011);
  const std::vector<Dissipator> ds{amplitude_damping(0.7), sodium_dissipator(1.0),
                                   Dissipator({{rng.op(3), ConstantRate{0.5}, "A"}, {rng.op(3), ConstantRate{0.9}, "B"}}, 3)};
  double trace_err = 0, dagger_err = 0, semigroup_err = 0, linear_err = 0, identity_err = 0;
  for (int k = 0; k < 120; ++k) {
    const Dissipator& d = ds[static_cast<std::size_t>(k) % ds.size()];
    const auto n = d.dim();
    const Operator c = rng.op(n);
    const double t1 = rng.uniform(0.0, 3.0), t2 = rng.uniform(0.0, 3.0);
    const Operator out = d.evolve(c, t1);
    trace_err = std::max(trace_err, std::abs(out.trace() - c.trace()));
    dagger_err = std::max(dagger_err, max_abs(d.evolve(c.adjoint(), t1) - out.adjoint()));
    semigroup_err = std::max(semigroup_err, max_abs(d.evolve(out, t2) - d.evolve(c, t1 + t2)));

    const Ket pi = rng.ket(n), pf = rng.ket(n);
    const Operator a = rng.op(n), b = rng.op(n);
    const Complex alpha(rng.normal(), rng.normal()), beta(rng.normal(), rng.normal());
    auto wv = [&](const Operator& o) { return weak_value_dissipative(make_pure_setup(pi, pf, o), d, t1).value; };
    const Complex lhs = wv(alpha * a + beta * b);
    linear_err = std::max(linear_err, std::abs(lhs - alpha * wv(a) - beta * wv(b)) / std::max(1.0, std::abs(lhs)));
    identity_err = std::max(identity_err, std::abs(wv(identity(n)) - 1.0));
  }
  const bool ok = trace_err < 1e-10 && dagger_err < 1e-10 && semigroup_err < 1e-9 && linear_err < 1e-10 &&
                  identity_err < 1e-12;
  return {ok, "120 draws: trace " + fmt(trace_err) + ", dagger " + fmt(dagger_err) + ", semigroup " +
                  fmt(semigroup_err) + ", linearity " + fmt(linear_err) + ", identity " + fmt(identity_err)};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8,
                                                       criterion9, criterion10, criterion11};
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s criterion %zu: %s\n", o.passed ? "PASS" : "FAIL", k + 1, o.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
