#pragma once

// Cavity-mode meter: quadrature shifts from weak values, commutator averages,
// inversion of measured shifts and a joint-state reference simulation.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakdiss/errors.hpp"
#include "weakdiss/lindblad.hpp"
#include "weakdiss/operators.hpp"
#include "weakdiss/weak_value.hpp"

namespace weakdiss {

enum class MeterKind { vacuum, number, thermal, custom };

struct MeterState {
  MeterKind kind = MeterKind::vacuum;
  int n = 0;           // number state level
  double n_eq = 0.0;   // thermal mean occupation
  Operator custom;     // density on a FockSpace

  static MeterState vacuum() { return {}; }
  static MeterState number(int level) {
    if (level < 0) throw NotDensity("number state level must be >= 0");
    MeterState m;
    m.kind = MeterKind::number;
    m.n = level;
    return m;
  }
  static MeterState thermal(double mean_occupation) {
    if (!(mean_occupation >= 0.0)) throw NotDensity("thermal occupation must be >= 0");
    MeterState m;
    m.kind = MeterKind::thermal;
    m.n_eq = mean_occupation;
    return m;
  }
  static MeterState custom_state(Operator rho) {
    if (!is_density(rho, 1e-10)) throw NotDensity("custom meter state is not a density matrix");
    MeterState m;
    m.kind = MeterKind::custom;
    m.custom = std::move(rho);
    return m;
  }

  /// Mean level entering the (2n + 1) factors.
  [[nodiscard]] double level() const {
    switch (kind) {
      case MeterKind::vacuum: return 0.0;
      case MeterKind::number: return n;
      case MeterKind::thermal: return n_eq;
      case MeterKind::custom: break;
    }
    throw NotDensity("custom meter states have no single level");
  }

  [[nodiscard]] bool diagonal_in_fock() const { return kind != MeterKind::custom; }

  [[nodiscard]] Operator density(const FockSpace& space) const {
    const auto d = space.dim();
    Operator rho = Operator::Zero(d, d);
    switch (kind) {
      case MeterKind::vacuum:
        rho(0, 0) = 1.0;
        break;
      case MeterKind::number:
        if (n > space.n_max) throw DimensionMismatch("number state above truncation");
        rho(n, n) = 1.0;
        break;
      case MeterKind::thermal: {
        const double q = n_eq / (n_eq + 1.0);
        double norm = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
          rho(k, k) = std::pow(q, static_cast<double>(k));
          norm += rho(k, k).real();
        }
        rho /= norm;
        break;
      }
      case MeterKind::custom:
        if (custom.rows() != d) throw DimensionMismatch("custom meter state has the wrong dimension");
        rho = custom;
        break;
    }
    return rho;
  }
};

/// Mean occupation 1 / (e^{hbar w / kT} - 1); coth(hbar w / 2kT) = 2 n_eq + 1.
inline double thermal_occupation(double omega_f, double temperature, double hbar = 1.0, double k_b = 1.0) {
  if (!(temperature > 0.0)) return 0.0;
  return 1.0 / std::expm1(hbar * omega_f / (k_b * temperature));
}

struct MeterMoments {
  Complex a;        // <a>
  Complex a2;       // <a^2>
  Complex sym;      // <a^+ a + a a^+>
};

inline MeterMoments meter_moments(const FockSpace& space, const MeterState& mu0) {
  if (mu0.diagonal_in_fock()) return {0.0, 0.0, 2.0 * mu0.level() + 1.0};
  const Operator rho = mu0.density(space);
  const auto [a, ad] = ladder(space);
  return {(rho * a).trace(), (rho * a * a).trace(), (rho * (ad * a + a * ad)).trace()};
}

struct ShiftReport {
  double Q_shift = 0.0;
  double P_shift = 0.0;
  double g = 0.0;
  double t = 0.0;
  double tau = 0.0;
  double omega_f = 0.0;
  double Delta = 0.0;
  std::vector<Complex> weak_value_inputs;
};

/// Averages over the initial meter state of commutators / anticommutators of
/// Q_I(t + tau), P_I(t + tau) with N_I(t/2), plus N0, Q0, P0.
struct CommutatorAverages {
  Complex CQ;   // <[Q_I, N_I]>
  Complex CP;   // <[P_I, N_I]>
  Complex ACQ;  // <{Q_I, N_I}>
  Complex ACP;  // <{P_I, N_I}>
  double N0 = 0.0;
  double Q0 = 0.0;
  double P0 = 0.0;
};

inline CommutatorAverages commutator_averages(const FockSpace& space, const MeterState& mu0, double t, double tau) {
  const double w = space.omega_f;
  const double q = std::sqrt(space.hbar / (2.0 * w));
  const double p = std::sqrt(space.hbar * w / 2.0);
  const double phi = w * (0.5 * t + tau);
  const double sigma = w * (1.5 * t + tau);
  const double theta = w * (t + tau);
  const auto mm = meter_moments(space, mu0);
  const Complex ad2 = std::conj(mm.a2);
  const Complex ad = std::conj(mm.a);
  const Complex e_s = std::exp(kI * sigma);

  CommutatorAverages c;
  c.CQ = -2.0 * kI * q * std::sin(phi);
  c.CP = -2.0 * kI * p * std::cos(phi);
  c.ACQ = 2.0 * q * (std::cos(phi) * mm.sym + ad2 * e_s + mm.a2 * std::conj(e_s));
  c.ACP = -2.0 * p * std::sin(phi) * mm.sym + 2.0 * kI * p * (ad2 * e_s - mm.a2 * std::conj(e_s));
  const Complex e_half = std::exp(kI * 0.5 * w * t);
  const Complex e_th = std::exp(kI * theta);
  c.N0 = (ad * e_half + mm.a * std::conj(e_half)).real();
  c.Q0 = (q * (ad * e_th + mm.a * std::conj(e_th))).real();
  c.P0 = (kI * p * (ad * e_th - mm.a * std::conj(e_th))).real();
  return c;
}

/// <L>_f = Re[(L0 - i gt Re(w) C + gt Im(w) AC) / (1 + 2 gt Im(w) N0)].
inline double shift_from_averages(double l0, Complex comm, Complex anti, double n0, Complex wv, double g, double t) {
  const double gt = g * t;
  const Complex num = l0 - kI * gt * wv.real() * comm + gt * wv.imag() * anti;
  return (num / (1.0 + 2.0 * gt * wv.imag() * n0)).real();
}

inline double shift_general(const Operator& l_i, const Operator& n_i, const Operator& mu0, Complex wv, double g,
                            double t) {
  if (l_i.rows() != mu0.rows() || n_i.rows() != mu0.rows()) throw DimensionMismatch("meter operators differ in size");
  const double l0 = (mu0 * l_i).trace().real();
  const double n0 = (mu0 * n_i).trace().real();
  const Complex comm = (mu0 * (l_i * n_i - n_i * l_i)).trace();
  const Complex anti = (mu0 * (l_i * n_i + n_i * l_i)).trace();
  return shift_from_averages(l0, comm, anti, n0, wv, g, t);
}

inline double shift_general(const Operator& l_i, const Operator& n_i, const MeterState& mu0, const FockSpace& space,
                            Complex wv, double g, double t) {
  return shift_general(l_i, n_i, mu0.density(space), wv, g, t);
}

/// Interaction-picture meter operators N_I(t/2), Q_I(t + tau), P_I(t + tau).
struct MeterOperators {
  Operator N;
  Operator Q;
  Operator P;
};

inline MeterOperators interaction_picture_operators(const FockSpace& space, double t, double tau) {
  const auto [a, ad] = ladder(space);
  const double w = space.omega_f;
  const Complex eh = std::exp(kI * 0.5 * w * t);
  const Complex et = std::exp(kI * w * (t + tau));
  const double q = std::sqrt(space.hbar / (2.0 * w));
  const double p = std::sqrt(space.hbar * w / 2.0);
  return {eh * ad + std::conj(eh) * a, q * (et * ad + std::conj(et) * a), kI * p * (et * ad - std::conj(et) * a)};
}

namespace detail {

inline ShiftReport rabi_shifts_level(double level, Complex wv, double g, double t, double tau, double omega_f,
                                     double hbar) {
  const double gt = g * t;
  const double q = std::sqrt(hbar / (2.0 * omega_f));
  const double p = std::sqrt(hbar * omega_f / 2.0);
  const double phi = omega_f * (0.5 * t + tau);
  const double k = 2.0 * level + 1.0;
  ShiftReport r;
  r.Q_shift = -2.0 * gt * q * (std::sin(phi) * wv.real() - k * std::cos(phi) * wv.imag());
  r.P_shift = -2.0 * gt * p * (std::cos(phi) * wv.real() + k * std::sin(phi) * wv.imag());
  r.g = g;
  r.t = t;
  r.tau = tau;
  r.omega_f = omega_f;
  r.weak_value_inputs = {wv};
  return r;
}

}  // namespace detail

inline ShiftReport rabi_shifts_number_state(int n, Complex wv, double g, double t, double tau, double omega_f,
                                            double hbar = 1.0) {
  if (n < 0) throw NotDensity("number state level must be >= 0");
  return detail::rabi_shifts_level(n, wv, g, t, tau, omega_f, hbar);
}

inline ShiftReport rabi_shifts_thermal(double n_eq, Complex wv, double g, double t, double tau, double omega_f,
                                       double hbar = 1.0) {
  if (!(n_eq >= 0.0)) throw NotDensity("thermal occupation must be >= 0");
  return detail::rabi_shifts_level(n_eq, wv, g, t, tau, omega_f, hbar);
}

inline ShiftReport rabi_shifts(const MeterState& mu0, Complex wv, double g, double t, double tau, double omega_f,
                               double hbar = 1.0) {
  return detail::rabi_shifts_level(mu0.level(), wv, g, t, tau, omega_f, hbar);
}

inline ShiftReport rabi_shifts_vacuum_polar(double wv_modulus, double wv_phase, double g, double t, double tau,
                                            double omega_f, double hbar = 1.0) {
  const double gt = g * t;
  const double rot = omega_f * (0.5 * t + tau);
  ShiftReport r;
  r.Q_shift = 2.0 * gt * std::sqrt(hbar / (2.0 * omega_f)) * wv_modulus * std::sin(wv_phase - rot);
  r.P_shift = -2.0 * gt * std::sqrt(hbar * omega_f / 2.0) * wv_modulus * std::cos(wv_phase - rot);
  r.g = g;
  r.t = t;
  r.tau = tau;
  r.omega_f = omega_f;
  r.weak_value_inputs = {std::polar(wv_modulus, wv_phase)};
  return r;
}

/// Rotating-wave shifts from the sigma_+ and sigma_- weak values.
inline ShiftReport jc_shifts(Complex wv_plus, Complex wv_minus, const MeterState& mu0, double g, double t, double tau,
                             double omega_f, double Delta, double hbar = 1.0) {
  if (!mu0.diagonal_in_fock()) throw NotDensity("jc_shifts requires a vacuum, number or thermal meter");
  const double n = mu0.level();
  const double gt = g * t;
  const Complex e = std::exp(kI * (0.5 * Delta * t + omega_f * (t + tau)));
  ShiftReport r;
  r.Q_shift = 2.0 * gt * std::sqrt(hbar / (2.0 * omega_f)) * (e * wv_plus * n + std::conj(e) * wv_minus * (n + 1.0)).imag();
  r.P_shift = 2.0 * gt * std::sqrt(hbar * omega_f / 2.0) * (e * wv_plus * n - std::conj(e) * wv_minus * (n + 1.0)).real();
  r.g = g;
  r.t = t;
  r.tau = tau;
  r.omega_f = omega_f;
  r.Delta = Delta;
  r.weak_value_inputs = {wv_plus, wv_minus};
  return r;
}

inline bool jc_expansion_valid(double Delta, double t) { return std::abs(Delta * t) <= 0.05; }

/// Weak value from measured final quadrature averages.
inline Complex invert_weak_value(double q_f, double p_f, const CommutatorAverages& c, double g, double t) {
  const double gt = g * t;
  const Complex den = c.ACQ * c.CP - c.ACP * c.CQ + 2.0 * c.N0 * (c.CQ * p_f - c.CP * q_f);
  if (!(std::abs(den) >= 1e-12) || !(std::abs(gt) > 0.0)) throw SingularInversion("inversion denominator vanishes");
  const Complex re = (kI / gt) * (c.ACQ * (p_f - c.P0) - c.ACP * (q_f - c.Q0) + 2.0 * c.N0 * (c.P0 * q_f - p_f * c.Q0)) / den;
  const Complex im = -(1.0 / gt) * (c.CQ * (p_f - c.P0) - c.CP * (q_f - c.Q0)) / den;
  return {re.real(), im.real()};
}

// ---------------------------------------------------------------------------
// Joint system (x) meter reference simulation
// ---------------------------------------------------------------------------

enum class Coupling { rabi, jaynes_cummings };

struct JointSimulation {
  double Q = 0.0;
  double P = 0.0;
  double postselection_prob = 0.0;
};

/// Exact interaction unitary, dissipation of the system factor, post-selection
/// and quadrature readout on the normalized meter state.
inline JointSimulation simulate_joint(const WeakMeasurementSetup& s, const Dissipator& d, double tau,
                                      const FockSpace& space, const MeterState& mu0, Coupling coupling,
                                      double Delta = 0.0) {
  const auto ds = s.dim();
  const auto dm = space.dim();
  const auto [a, ad] = ladder(space);
  const auto ops = interaction_picture_operators(space, s.t, tau);
  const double gt = s.g * s.t;

  Operator k;
  if (coupling == Coupling::rabi) {
    k = gt * kron(s.A_SI, ops.N);
  } else {
    if (ds != 2) throw DimensionMismatch("Jaynes-Cummings coupling needs a two-level system");
    const Complex e = std::exp(kI * 0.5 * Delta * s.t);
    k = gt * (e * kron(sigma_plus(), a) + std::conj(e) * kron(sigma_minus(), ad));
  }
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (k + k.adjoint()));
  const Eigen::VectorXcd phases = (-kI * es.eigenvalues().cast<Complex>()).array().exp();
  const Operator u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  const Operator rho = u * kron(s.sigma_i, mu0.density(space)) * u.adjoint();

  Operator weights(ds, ds);
  for (Eigen::Index j = 0; j < ds; ++j) {
    for (Eigen::Index l = 0; l < ds; ++l) {
      Operator e = Operator::Zero(ds, ds);
      e(j, l) = 1.0;
      weights(j, l) = (s.sigma_fI * d.evolve(e, tau)).trace();
    }
  }
  Operator mu = Operator::Zero(dm, dm);
  for (Eigen::Index j = 0; j < ds; ++j) {
    for (Eigen::Index l = 0; l < ds; ++l) mu += weights(j, l) * rho.block(j * dm, l * dm, dm, dm);
  }
  JointSimulation out;
  const Complex tr = mu.trace();
  out.postselection_prob = tr.real();
  if (std::abs(tr) < kPostselectionTol) throw PostselectionVanishes("joint post-selection vanishes");
  mu /= tr;
  out.Q = (mu * ops.Q).trace().real();
  out.P = (mu * ops.P).trace().real();
  return out;
}

}  // namespace weakdiss
