#pragma once

// Weak values followed by Lindblad dissipation: the general trace quotient,
// asymptotic limits, two-level Bloch forms and short-time expansions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "weakdiss/errors.hpp"
#include "weakdiss/lindblad.hpp"
#include "weakdiss/operators.hpp"

namespace weakdiss {

inline constexpr double kPostselectionTol = 1e-14;

struct WeakMeasurementSetup {
  Operator sigma_i;   // pre-selected density
  Operator sigma_fI;  // post-selected density, constant in the interaction picture
  Operator A_SI;      // measured observable at effective time t/2
  double g = 0.0;
  double t = 0.0;

  void validate(double tol = 1e-10) const {
    if (!is_density(sigma_i, tol)) throw NotDensity("sigma_i is not a density matrix");
    if (!is_density(sigma_fI, tol)) throw NotDensity("sigma_fI is not a density matrix");
    if (sigma_fI.rows() != sigma_i.rows() || A_SI.rows() != sigma_i.rows() || A_SI.cols() != sigma_i.rows()) {
      throw DimensionMismatch("setup operators have inconsistent dimensions");
    }
  }

  [[nodiscard]] Eigen::Index dim() const { return sigma_i.rows(); }

  /// FNV-1a over the raw entries; stable for a given build.
  [[nodiscard]] std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t k = 0; k < n; ++k) {
        h ^= b[k];
        h *= 1099511628211ULL;
      }
    };
    for (const Operator* m : {&sigma_i, &sigma_fI, &A_SI}) {
      const Eigen::Index r = m->rows();
      feed(&r, sizeof r);
      feed(m->data(), sizeof(Complex) * static_cast<std::size_t>(m->size()));
    }
    feed(&g, sizeof g);
    feed(&t, sizeof t);
    return h;
  }
};

inline WeakMeasurementSetup make_pure_setup(const Ket& psi_i, const Ket& psi_fI, const Operator& a,
                                            double g = 0.0, double t = 0.0) {
  return {ket_to_density(normalized(psi_i)), ket_to_density(normalized(psi_fI)), a, g, t};
}

struct WeakValue {
  Complex value;
  double postselection_prob = 0.0;
  Complex numerator;
  Complex denominator;
};

namespace detail {

inline WeakValue quotient(const Operator& sigma_fI, const Operator& evolved_a_sigma, const Operator& evolved_sigma) {
  WeakValue w;
  w.numerator = (sigma_fI * evolved_a_sigma).trace();
  w.denominator = (sigma_fI * evolved_sigma).trace();
  w.postselection_prob = w.denominator.real();
  if (!(std::abs(w.denominator) >= kPostselectionTol)) {
    throw PostselectionVanishes("post-selection probability " + std::to_string(std::abs(w.denominator)));
  }
  w.value = w.numerator / w.denominator;
  return w;
}

inline void check_dims(const WeakMeasurementSetup& s, const Dissipator& d) {
  if (s.sigma_i.rows() != d.dim() || s.sigma_fI.rows() != d.dim() || s.A_SI.rows() != d.dim() ||
      s.A_SI.cols() != d.dim() || s.sigma_i.cols() != d.dim() || s.sigma_fI.cols() != d.dim()) {
    throw DimensionMismatch("setup and dissipator dimensions differ");
  }
}

}  // namespace detail

/// Tr[sigma_fI e^{D tau}(A sigma_i)] / Tr[sigma_fI e^{D tau}(sigma_i)].
inline WeakValue weak_value_dissipative(const WeakMeasurementSetup& s, const Dissipator& d, double tau) {
  detail::check_dims(s, d);
  const auto evolved = d.evolve_many({s.A_SI * s.sigma_i, s.sigma_i}, {tau}).front();
  return detail::quotient(s.sigma_fI, evolved[0], evolved[1]);
}

inline WeakValue weak_value_limit_infinite(const WeakMeasurementSetup& s, const Dissipator& d) {
  detail::check_dims(s, d);
  const auto space = d.asymptotic_space();
  const auto n = d.dim();
  const Operator num = unvec(space.projector * vec(s.A_SI * s.sigma_i), n);
  const Operator den = unvec(space.projector * vec(s.sigma_i), n);
  return detail::quotient(s.sigma_fI, num, den);
}

struct DegenerateLimit {
  Complex value;
  Operator a;  // a_jk of the asymptotic numerator operator
  Operator b;  // b_jk of the asymptotic denominator operator
};

/// tau -> infinity limit written through ground-manifold coefficients a_jk, b_jk.
inline DegenerateLimit weak_value_limit_degenerate(const Ket& psi_i, const Ket& psi_fI, const Operator& a_op,
                                                   const Dissipator& d, const std::vector<Ket>& ground) {
  const Ket pi = normalized(psi_i);
  const Ket pf = normalized(psi_fI);
  const auto space = d.asymptotic_space();
  const auto n = d.dim();
  const Operator num = unvec(space.projector * vec(a_op * pi * pi.adjoint()), n);
  const Operator den = unvec(space.projector * vec(pi * pi.adjoint()), n);

  const auto m = static_cast<Eigen::Index>(ground.size());
  DegenerateLimit out{Complex{}, Operator(m, m), Operator(m, m)};
  Eigen::VectorXcd overlap(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    overlap(j) = pf.dot(ground[static_cast<std::size_t>(j)]);  // <psi_f|g_j>
    for (Eigen::Index k = 0; k < m; ++k) {
      const Ket& gj = ground[static_cast<std::size_t>(j)];
      const Ket& gk = ground[static_cast<std::size_t>(k)];
      out.a(j, k) = gj.dot(num * gk);
      out.b(j, k) = gj.dot(den * gk);
    }
  }
  Complex top{}, bottom{};
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const Complex w = overlap(j) * std::conj(overlap(k));
      top += out.a(j, k) * w;
      bottom += out.b(j, k) * w;
    }
  }
  if (std::abs(bottom) < kPostselectionTol) throw PostselectionVanishes("asymptotic denominator vanishes");
  out.value = top / bottom;
  return out;
}

struct WeakValueDecomposition {
  double mean = 0.0;         // <A>_i
  double uncertainty = 0.0;  // Delta_i A
  Complex coherence_quotient;
  Complex value;
};

/// A_w = <A>_i + Delta_i A * Tr[sigma_f e^{D tau}(|psi_perp><psi_i|)] / Tr[sigma_f e^{D tau}(sigma_i)].
inline WeakValueDecomposition weak_value_decomposition(const Ket& psi_i, const Ket& psi_fI, const Operator& a_op,
                                                       const Dissipator& d, double tau) {
  if (!is_hermitian(a_op, 1e-10)) throw DimensionMismatch("observable must be Hermitian");
  const Ket pi = normalized(psi_i);
  const Operator sf = ket_to_density(normalized(psi_fI));
  WeakValueDecomposition out;
  out.mean = pi.dot(a_op * pi).real();
  const double second = pi.dot(a_op * a_op * pi).real();
  out.uncertainty = std::sqrt(std::max(0.0, second - out.mean * out.mean));

  const Operator rho_i = pi * pi.adjoint();
  Operator coherence = Operator::Zero(rho_i.rows(), rho_i.cols());
  if (out.uncertainty > 0.0) {
    const Ket perp = (a_op * pi - out.mean * pi) / out.uncertainty;
    coherence = perp * pi.adjoint();
  }
  const auto ev = d.evolve_many({coherence, rho_i}, {tau}).front();
  const Complex den = (sf * ev[1]).trace();
  if (std::abs(den) < kPostselectionTol) throw PostselectionVanishes("denominator vanishes");
  out.coherence_quotient = (sf * ev[0]).trace() / den;
  out.value = out.mean + out.uncertainty * out.coherence_quotient;
  return out;
}

// ---------------------------------------------------------------------------
// Two-level Bloch forms
// ---------------------------------------------------------------------------

/// (f_x G, f_y G, f_z G^2) with G = e^{-gamma tau / 2}.
inline Eigen::Vector3d attenuated_postselection(const BlochVector& f, double big_gamma) {
  return {f.x * big_gamma, f.y * big_gamma, f.z * big_gamma * big_gamma};
}

/// Weak value of a + b m.sigma from Bloch vectors with coherence factor G.
inline Complex weak_value_bloch(const BlochVector& i_vec, const BlochVector& fI_vec, Complex a, Complex b,
                                const Eigen::Vector3cd& m, double big_gamma) {
  const Eigen::Vector3cd iv = i_vec.vec().cast<Complex>();
  const Eigen::Vector3d fg = attenuated_postselection(fI_vec, big_gamma);
  const Eigen::Vector3cd fgc = fg.cast<Complex>();
  const double shift = fg.z() - fI_vec.z;

  const Complex den = 1.0 + fg.dot(i_vec.vec()) + shift;
  if (std::abs(den) < kPostselectionTol) throw DenominatorVanishes("Bloch weak-value denominator vanishes");
  // plain products; no conjugation of the complex m
  const Complex fm = (fgc.array() * m.array()).sum();
  const Complex im = (iv.array() * m.array()).sum();
  // written out: Eigen's cross conjugates complex operands
  const Eigen::Vector3cd mxi(m(1) * iv(2) - m(2) * iv(1), m(2) * iv(0) - m(0) * iv(2), m(0) * iv(1) - m(1) * iv(0));
  const Complex triple = (fgc.array() * mxi.array()).sum();
  const Complex num = fm + im * (1.0 + shift) + kI * triple;
  return a + b * num / den;
}

inline Complex weak_value_2level_analytic(const BlochVector& i_vec, const BlochVector& fI_vec, Complex a, Complex b,
                                          const Eigen::Vector3cd& m, double gamma, double tau) {
  if (i_vec.norm() > 1.0 + kStructuralTol || fI_vec.norm() > 1.0 + kStructuralTol) {
    throw NormTooLarge("Bloch state vectors must have norm <= 1");
  }
  if (tau < 0.0) throw NegativeTau("tau = " + std::to_string(tau));
  return weak_value_bloch(i_vec, fI_vec, a, b, m, std::exp(-0.5 * gamma * tau));
}

enum class PmSign { plus, minus };

/// m vector of sigma_+ or sigma_-: (1, +-i, 0) / 2.
inline Eigen::Vector3cd sigma_pm_vector(PmSign sign) {
  return {0.5, sign == PmSign::plus ? 0.5 * kI : -0.5 * kI, 0.0};
}

/// Closed forms of the sigma_+ and sigma_- weak values under amplitude damping.
inline Complex weak_value_sigma_pm(const BlochVector& i, const BlochVector& f, double gamma, double tau, PmSign sign) {
  if (tau < 0.0) throw NegativeTau("tau = " + std::to_string(tau));
  const Eigen::Vector3d fg = attenuated_postselection(f, std::exp(-0.5 * gamma * tau));
  const double den = 1.0 + fg.dot(i.vec()) + fg.z() - f.z;
  if (std::abs(den) < kPostselectionTol) throw DenominatorVanishes("sigma_pm denominator vanishes");
  if (sign == PmSign::minus) {
    const double re = i.x * (1.0 - f.z) + fg.x() * (1.0 + i.z);
    const double im = i.y * (1.0 - f.z) + fg.y() * (1.0 + i.z);
    return Complex(re, -im) / (2.0 * den);
  }
  const double re = i.x * (1.0 - f.z + 2.0 * fg.z()) + fg.x() * (1.0 - i.z);
  const double im = i.y * (1.0 - f.z + 2.0 * fg.z()) + fg.y() * (1.0 - i.z);
  return Complex(re, im) / (2.0 * den);
}

struct RotatedObservable {
  Operator op;
  BlochVector n_I;
};

/// cos(w t/2) sigma_x - sin(w t/2) sigma_y.
inline RotatedObservable measured_operator_rabi(double omega_a, double t) {
  const double c = std::cos(0.5 * omega_a * t);
  const double s = std::sin(0.5 * omega_a * t);
  return {c * pauli(Axis::x) - s * pauli(Axis::y), {c, -s, 0.0}};
}

/// Clockwise rotation about z by omega_a (t + tau).
inline BlochVector postselection_rotation(const BlochVector& f, double omega_a, double t_plus_tau) {
  const double th = omega_a * t_plus_tau;
  const double c = std::cos(th), s = std::sin(th);
  return {f.x * c + f.y * s, f.y * c - f.x * s, f.z};
}

/// Schroedinger-picture post-selection that keeps the interaction-picture vector fixed.
inline BlochVector postselection_rotation_inverse(const BlochVector& fI, double omega_a, double t_plus_tau) {
  const double th = omega_a * t_plus_tau;
  const double c = std::cos(th), s = std::sin(th);
  return {fI.x * c - fI.y * s, fI.y * c + fI.x * s, fI.z};
}

// ---------------------------------------------------------------------------
// Short-time expansions with near-orthogonal states
// ---------------------------------------------------------------------------

struct EpsilonStates {
  Ket psi_i;
  Ket psi_fI0;
  Operator sigma_i;
  Operator sigma_fI0;
};

/// psi_i = -sign(eps)|g> + |eps|/2 |e>, psi_f = (eps|g> + (1 - i)|e>)/sqrt 2, both normalized.
inline EpsilonStates epsilon_states(double epsilon) {
  if (!(std::abs(epsilon) > 0.0) || !(std::abs(epsilon) <= 0.2)) {
    throw EpsilonOutOfRange("require 0 < |epsilon| <= 0.2, got " + std::to_string(epsilon));
  }
  Ket pi(2), pf(2);
  pi << std::abs(epsilon) / 2.0, (epsilon > 0.0 ? -1.0 : 1.0);
  pf << Complex(1.0, -1.0) / std::sqrt(2.0), epsilon / std::sqrt(2.0);
  pi = normalized(pi);
  pf = normalized(pf);
  return {pi, pf, ket_to_density(pi), ket_to_density(pf)};
}

inline Complex markov_short_time_wv(double gamma, double tau, double epsilon) {
  const double x = gamma * tau;
  return {x / epsilon, (2.0 - x) / epsilon};
}

inline Complex nonmarkov_short_time_wv(double gamma0, double lambda, double tau, double epsilon) {
  const double x = lambda * tau * tau * gamma0;
  return {x / (2.0 * epsilon), (4.0 - x) / (2.0 * epsilon)};
}

inline bool markov_expansion_valid(double gamma, double tau) { return gamma * tau <= 0.05; }

inline bool nonmarkov_expansion_valid(double gamma0, double lambda, double tau) {
  return lambda * tau <= 0.05 && gamma0 * tau <= 0.05;
}

// ---------------------------------------------------------------------------
// tau sweeps
// ---------------------------------------------------------------------------

struct WeakValueTrace {
  std::vector<double> tau_grid;
  std::vector<Complex> values;  // NaN at gaps
  std::vector<double> postselection_probs;
  std::vector<std::uint8_t> gaps;  // 1 where post-selection vanishes
  std::uint64_t setup_hash = 0;
  std::string channel_description;

  [[nodiscard]] std::size_t size() const { return tau_grid.size(); }
  [[nodiscard]] std::size_t gap_count() const {
    return static_cast<std::size_t>(std::count(gaps.begin(), gaps.end(), std::uint8_t{1}));
  }
};

inline unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

inline WeakValueTrace trace_over_tau(const WeakMeasurementSetup& s, const Dissipator& d,
                                     const std::vector<double>& tau_grid, unsigned jobs = 0) {
  detail::check_dims(s, d);
  if (!std::is_sorted(tau_grid.begin(), tau_grid.end())) throw InvalidChannel("tau grid must be increasing");
  for (double t : tau_grid) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw NegativeTau("tau grid contains " + std::to_string(t));
  }

  const std::size_t n = tau_grid.size();
  WeakValueTrace tr;
  tr.tau_grid = tau_grid;
  tr.values.assign(n, Complex(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()));
  tr.postselection_probs.assign(n, 0.0);
  tr.gaps.assign(n, 0);
  tr.setup_hash = s.hash();
  tr.channel_description = d.description();

  const Operator a_sigma = s.A_SI * s.sigma_i;
  auto fill = [&](std::size_t k, const Operator& num, const Operator& den) {
    const Complex nv = (s.sigma_fI * num).trace();
    const Complex dv = (s.sigma_fI * den).trace();
    tr.postselection_probs[k] = dv.real();
    if (std::abs(dv) < kPostselectionTol) {
      tr.gaps[k] = 1;
    } else {
      tr.values[k] = nv / dv;
    }
  };

  if (!d.is_constant()) {
    const auto evolved = d.evolve_many({a_sigma, s.sigma_i}, tau_grid);
    for (std::size_t k = 0; k < n; ++k) fill(k, evolved[k][0], evolved[k][1]);
    return tr;
  }

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs == 0 ? default_jobs() : jobs, std::max<std::size_t>(n, 1)));
  auto work = [&](unsigned w) {
    for (std::size_t k = w; k < n; k += workers) {
      const auto ev = d.evolve_many({a_sigma, s.sigma_i}, {tau_grid[k]}).front();
      fill(k, ev[0], ev[1]);
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  return tr;
}

}  // namespace weakdiss
