#pragma once

// Lindblad dissipators acting on arbitrary (not necessarily Hermitian)
// operators, the analytic amplitude-damping channels and asymptotic spaces.
//
// Vectorization is column stacking: vec(A X B) = (B^T (x) A) vec(X).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/numeric/odeint.hpp>

#include "weakdiss/errors.hpp"
#include "weakdiss/operators.hpp"

namespace weakdiss {

struct ConstantRate {
  double gamma = 0.0;
};

/// Time-dependent rate of a two-level atom in a lossy cavity (Lorentzian bath).
struct NonMarkovJC {
  double gamma0 = 1.0;
  double lambda = 1.0;
};

using RateModel = std::variant<ConstantRate, NonMarkovJC>;

struct DissipationChannel {
  Operator jump;
  RateModel rate = ConstantRate{};
  std::string label;
};

inline std::string describe(const RateModel& rate) {
  return std::visit(
      [](const auto& r) -> std::string {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ConstantRate>) {
          return "constant(gamma=" + std::to_string(r.gamma) + ")";
        } else {
          return "nonmarkov_jc(gamma0=" + std::to_string(r.gamma0) +
                 ",lambda=" + std::to_string(r.lambda) + ")";
        }
      },
      rate);
}

// ---------------------------------------------------------------------------
// Non-Markovian Jaynes-Cummings rate
// ---------------------------------------------------------------------------

namespace detail {

struct NonMarkovParts {
  Complex cosh_half;    // cosh(d z / 2)
  Complex sinh_over_d;  // sinh(d z / 2) / d
};

inline NonMarkovParts nonmarkov_parts(Complex z, double gamma0, double lambda) {
  const Complex d = std::sqrt(Complex(lambda * lambda - 2.0 * gamma0 * lambda));
  const Complex w = 0.5 * d * z;
  NonMarkovParts p;
  p.cosh_half = std::cosh(w);
  if (std::abs(w) < 1e-4) {
    const Complex w2 = w * w;
    p.sinh_over_d = 0.5 * z * (1.0 + w2 / 6.0 + w2 * w2 / 120.0);
  } else {
    p.sinh_over_d = std::sinh(w) / d;
  }
  return p;
}

inline double real_with_guard(Complex v, const char* what) {
  if (std::abs(v.imag()) > 1e-10 * std::max(1.0, std::abs(v.real()))) {
    throw NoConvergence(std::string(what) + " has a non-negligible imaginary residue");
  }
  return v.real();
}

inline void check_nonmarkov_params(double gamma0, double lambda) {
  if (!(gamma0 > 0.0) || !(lambda > 0.0)) {
    throw InvalidChannel("NonMarkovJC requires gamma0 > 0 and lambda > 0");
  }
}

}  // namespace detail

/// gamma(z) = 2 g0 l sinh(dz/2) / (d cosh(dz/2) + l sinh(dz/2)), d = sqrt(l^2 - 2 g0 l).
inline Complex nonmarkov_gamma(Complex z, double gamma0, double lambda) {
  const auto p = detail::nonmarkov_parts(z, gamma0, lambda);
  return 2.0 * gamma0 * lambda * p.sinh_over_d / (p.cosh_half + lambda * p.sinh_over_d);
}

inline double nonmarkov_gamma(double tau, double gamma0, double lambda) {
  detail::check_nonmarkov_params(gamma0, lambda);
  return detail::real_with_guard(nonmarkov_gamma(Complex(tau), gamma0, lambda), "gamma(tau)");
}

/// Coherence attenuation Gamma(z) = e^{-l z/2} [cosh(dz/2) + (l/d) sinh(dz/2)].
inline Complex nonmarkov_big_gamma(Complex z, double gamma0, double lambda) {
  const auto p = detail::nonmarkov_parts(z, gamma0, lambda);
  return std::exp(-0.5 * lambda * z) * (p.cosh_half + lambda * p.sinh_over_d);
}

inline double nonmarkov_big_gamma(double tau, double gamma0, double lambda) {
  detail::check_nonmarkov_params(gamma0, lambda);
  return detail::real_with_guard(nonmarkov_big_gamma(Complex(tau), gamma0, lambda), "Gamma(tau)");
}

/// Real zeros of Gamma in (0, tau_max]; nonempty only for strong coupling (lambda < 2 gamma0).
inline std::vector<double> nonmarkov_poles(double gamma0, double lambda, double tau_max) {
  std::vector<double> poles;
  const double disc = 2.0 * gamma0 * lambda - lambda * lambda;
  if (!(disc > 0.0)) return poles;
  const double omega = std::sqrt(disc);
  const double base = std::numbers::pi - std::atan(omega / lambda);
  for (int k = 0;; ++k) {
    const double tau = 2.0 * (base + k * std::numbers::pi) / omega;
    if (tau > tau_max) break;
    poles.push_back(tau);
  }
  return poles;
}

inline double rate_at(const RateModel& rate, double tau) {
  return std::visit(
      [tau](const auto& r) -> double {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ConstantRate>) {
          return r.gamma;
        } else {
          return nonmarkov_gamma(tau, r.gamma0, r.lambda);
        }
      },
      rate);
}

// ---------------------------------------------------------------------------
// Analytic two-level channels
// ---------------------------------------------------------------------------

/// Amplitude damping with coherence factor G and population factor G^2.
inline Operator two_level_attenuate(const Operator& c, double big_gamma) {
  if (c.rows() != 2 || c.cols() != 2) throw DimensionMismatch("expected a 2x2 operator");
  const double g2 = big_gamma * big_gamma;
  Operator out(2, 2);
  out(0, 0) = c(0, 0) * g2;
  out(0, 1) = c(0, 1) * big_gamma;
  out(1, 0) = c(1, 0) * big_gamma;
  out(1, 1) = c(1, 1) + c(0, 0) * (1.0 - g2);
  return out;
}

inline Operator two_level_damping_apply(const Operator& c, double gamma, double tau) {
  if (gamma < 0.0) throw InvalidChannel("negative rate");
  if (tau < 0.0) throw NegativeTau("tau = " + std::to_string(tau));
  return two_level_attenuate(c, std::exp(-0.5 * gamma * tau));
}

inline Operator nonmarkov_damping_apply(const Operator& c, double gamma0, double lambda, double tau) {
  if (tau < 0.0) throw NegativeTau("tau = " + std::to_string(tau));
  return two_level_attenuate(c, nonmarkov_big_gamma(tau, gamma0, lambda));
}

// ---------------------------------------------------------------------------
// Dissipator
// ---------------------------------------------------------------------------

/// Unit-rate superoperator of L C L^+ - 1/2 {L^+ L, C}.
inline Operator channel_superoperator(const Operator& jump) {
  const auto n = jump.rows();
  const Operator id = identity(n);
  const Operator ldl = jump.adjoint() * jump;
  return kron(jump.conjugate(), jump) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id);
}

struct AsymptoticSpace {
  Eigen::Index rank = 0;
  Operator right;      // dim^2 x rank, kernel of the superoperator
  Operator left;       // dim^2 x rank, kernel of its adjoint
  Operator projector;  // lim e^{D tau}
  std::optional<Operator> unique_state;
  std::vector<Operator> basis;
};

class Dissipator {
 public:
  Dissipator() = default;

  Dissipator(std::vector<DissipationChannel> channels, Eigen::Index dim)
      : dim_(dim), channels_(std::move(channels)) {
    if (dim < 1) throw DimensionMismatch("dimension must be positive");
    const auto n2 = dim * dim;
    constant_ = Operator::Zero(n2, n2);
    for (const auto& ch : channels_) {
      if (ch.jump.rows() != dim || ch.jump.cols() != dim) {
        throw DimensionMismatch("jump operator '" + ch.label + "' is not " + std::to_string(dim) +
                                "x" + std::to_string(dim));
      }
      if (!all_finite(ch.jump)) throw InvalidChannel("jump operator has non-finite entries");
      Operator s = channel_superoperator(ch.jump);
      if (const auto* c = std::get_if<ConstantRate>(&ch.rate)) {
        if (!(c->gamma >= 0.0) || !std::isfinite(c->gamma)) throw InvalidChannel("rates must be nonnegative");
        constant_ += c->gamma * s;
      } else {
        const auto& nm = std::get<NonMarkovJC>(ch.rate);
        detail::check_nonmarkov_params(nm.gamma0, nm.lambda);
        timed_.push_back({nm, std::move(s)});
      }
    }
  }

  [[nodiscard]] Eigen::Index dim() const { return dim_; }
  [[nodiscard]] const std::vector<DissipationChannel>& channels() const { return channels_; }
  [[nodiscard]] bool is_constant() const { return timed_.empty(); }

  /// Materialized superoperator; constant rates only.
  [[nodiscard]] const Operator& superoperator() const {
    if (!is_constant()) throw InvalidChannel("time-dependent dissipator has no single superoperator");
    return constant_;
  }

  /// D(tau)(C) evaluated directly from the jump operators.
  [[nodiscard]] Operator apply(const Operator& c, double tau = 0.0) const {
    check_operand(c);
    Operator out = Operator::Zero(dim_, dim_);
    for (const auto& ch : channels_) {
      const double g = rate_at(ch.rate, tau);
      const Operator& l = ch.jump;
      const Operator ldl = l.adjoint() * l;
      out += g * (l * c * l.adjoint() - 0.5 * (ldl * c + c * ldl));
    }
    return out;
  }

  /// Matrix of e^{D tau} on vectorized operators.
  [[nodiscard]] Operator transfer_matrix(double tau) const {
    check_tau(tau);
    if (is_constant()) return (constant_ * tau).exp();
    const auto n2 = dim_ * dim_;
    return integrate(Operator::Identity(n2, n2), {tau}).front();
  }

  [[nodiscard]] Operator evolve(const Operator& c, double tau) const {
    check_operand(c);
    check_tau(tau);
    if (tau == 0.0) return c;
    if (is_constant()) return unvec((constant_ * tau).exp() * vec(c), dim_);
    return unvec(integrate(vec(c), {tau}).front().col(0), dim_);
  }

  /// Evolves several operators to each of the increasing times in `taus`.
  [[nodiscard]] std::vector<std::vector<Operator>> evolve_many(const std::vector<Operator>& ops,
                                                               const std::vector<double>& taus) const {
    Operator cols(dim_ * dim_, static_cast<Eigen::Index>(ops.size()));
    for (std::size_t k = 0; k < ops.size(); ++k) {
      check_operand(ops[k]);
      cols.col(static_cast<Eigen::Index>(k)) = vec(ops[k]);
    }
    for (double t : taus) check_tau(t);
    if (!std::is_sorted(taus.begin(), taus.end())) throw InvalidChannel("tau grid must be increasing");

    std::vector<Operator> mats;
    if (is_constant()) {
      mats.reserve(taus.size());
      for (double t : taus) mats.push_back((constant_ * t).exp() * cols);
    } else {
      mats = integrate(cols, taus);
    }
    std::vector<std::vector<Operator>> out(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
      for (Eigen::Index k = 0; k < cols.cols(); ++k) out[i].push_back(unvec(mats[i].col(k), dim_));
    }
    return out;
  }

  /// Kernel of the constant-rate superoperator and the asymptotic projector.
  [[nodiscard]] AsymptoticSpace asymptotic_space(double tol = 1e-9) const {
    const Operator& s = superoperator();
    Eigen::JacobiSVD<Operator> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double scale = std::max(1.0, sv.size() ? sv(0) : 0.0);

    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      const double v = sv(k) / scale;
      if (v <= tol) {
        ++rank;
      } else if (v <= 1e3 * tol) {
        throw NoConvergence("no clear singular-value gap at tolerance " + std::to_string(tol));
      }
    }
    if (rank == 0) throw NoConvergence("superoperator has no kernel");

    Eigen::ComplexEigenSolver<Operator> es(s, false);
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      const Complex ev = es.eigenvalues()(k);
      if (std::abs(ev) > 1e3 * tol * scale && !(ev.real() < -tol * scale)) {
        throw NoConvergence("non-decaying oscillatory mode; no asymptotic limit");
      }
    }

    AsymptoticSpace out;
    out.rank = rank;
    out.right = svd.matrixV().rightCols(rank);
    out.left = svd.matrixU().rightCols(rank);
    const Operator overlap = out.left.adjoint() * out.right;
    Eigen::FullPivLU<Operator> lu(overlap);
    if (!lu.isInvertible()) throw NoConvergence("kernel is not semisimple");
    out.projector = out.right * lu.inverse() * out.left.adjoint();

    for (Eigen::Index k = 0; k < rank; ++k) out.basis.push_back(unvec(out.right.col(k), dim_));
    if (rank == 1) {
      Operator rho = out.basis.front();
      rho /= rho.trace();
      out.unique_state = 0.5 * (rho + rho.adjoint());
    }
    return out;
  }

  [[nodiscard]] std::string description() const {
    std::string s = "dim=" + std::to_string(dim_) + ";";
    for (const auto& ch : channels_) s += (ch.label.empty() ? "L" : ch.label) + ":" + describe(ch.rate) + ";";
    return s;
  }

  /// Largest characteristic rate, used to make tau dimensionless.
  [[nodiscard]] double max_rate() const {
    double m = 0.0;
    for (const auto& ch : channels_) {
      m = std::max(m, std::visit(
                          [](const auto& r) -> double {
                            using R = std::decay_t<decltype(r)>;
                            if constexpr (std::is_same_v<R, ConstantRate>) return r.gamma;
                            else return r.gamma0;
                          },
                          ch.rate));
    }
    return m;
  }

 private:
  struct TimedChannel {
    NonMarkovJC params;
    Operator superop;
  };

  struct PathPiece {
    Complex from;
    Complex to;
    bool arc = false;  // upper semicircle centred at (from + to) / 2

    [[nodiscard]] Complex z(double s) const {
      if (!arc) return from + s * (to - from);
      const double r = 0.5 * std::abs(to - from);
      return 0.5 * (from + to) + r * std::exp(kI * std::numbers::pi * (1.0 - s));
    }
    [[nodiscard]] Complex dz(double s) const {
      if (!arc) return to - from;
      const double r = 0.5 * std::abs(to - from);
      return -kI * std::numbers::pi * r * std::exp(kI * std::numbers::pi * (1.0 - s));
    }
  };

  void check_operand(const Operator& c) const {
    if (c.rows() != dim_ || c.cols() != dim_) throw DimensionMismatch("operand has the wrong dimension");
  }

  static void check_tau(double tau) {
    if (!std::isfinite(tau)) throw NegativeTau("tau must be finite");
    if (tau < 0.0) throw NegativeTau("tau = " + std::to_string(tau));
  }

  // Straight segments on the real axis, detouring through the upper half
  // plane around real poles of the time-dependent rates.
  [[nodiscard]] std::vector<PathPiece> path(double a, double b) const {
    std::vector<double> poles;
    for (const auto& tc : timed_) {
      auto p = nonmarkov_poles(tc.params.gamma0, tc.params.lambda, b + 1.0);
      poles.insert(poles.end(), p.begin(), p.end());
    }
    std::sort(poles.begin(), poles.end());

    std::vector<PathPiece> pieces;
    double cursor = a;
    for (std::size_t k = 0; k < poles.size(); ++k) {
      const double p = poles[k];
      for (double endpoint : {a, b}) {
        if (std::abs(endpoint - p) < 1e-10) {
          throw NoConvergence("rate is singular at tau = " + std::to_string(p));
        }
      }
      if (p <= a || p >= b) continue;
      double r = 0.5 * std::min(p - cursor, b - p);
      if (k + 1 < poles.size()) r = std::min(r, 0.5 * (poles[k + 1] - p));
      r = std::min(r, 0.5);
      if (p - r > cursor) pieces.push_back({cursor, p - r, false});
      pieces.push_back({p - r, p + r, true});
      cursor = p + r;
    }
    if (b > cursor) pieces.push_back({cursor, b, false});
    return pieces;
  }

  void integrate_piece(std::vector<double>& state, Eigen::Index rows, Eigen::Index cols,
                       const PathPiece& piece) const {
    namespace ode = boost::numeric::odeint;
    auto rhs = [&](const std::vector<double>& x, std::vector<double>& dxdt, double s) {
      const Complex z = piece.z(s);
      const Complex dz = piece.dz(s);
      Eigen::Map<const Operator> xm(reinterpret_cast<const Complex*>(x.data()), rows, cols);
      Eigen::Map<Operator> dm(reinterpret_cast<Complex*>(dxdt.data()), rows, cols);
      Operator gen = constant_ * dz;
      for (const auto& tc : timed_) {
        gen += (nonmarkov_gamma(z, tc.params.gamma0, tc.params.lambda) * dz) * tc.superop;
      }
      dm.noalias() = gen * xm;
    };
    using Stepper = ode::runge_kutta_dopri5<std::vector<double>>;
    auto stepper = ode::make_dense_output(1e-12, 1e-10, Stepper());
    try {
      ode::integrate_adaptive(stepper, rhs, state, 0.0, 1.0, 1e-3);
    } catch (const std::exception& e) {
      throw NoConvergence(std::string("integration failed: ") + e.what());
    }
    for (double v : state) {
      if (!std::isfinite(v)) throw NoConvergence("integration produced non-finite values");
    }
  }

  [[nodiscard]] std::vector<Operator> integrate(const Operator& initial, const std::vector<double>& taus) const {
    const auto rows = initial.rows();
    const auto cols = initial.cols();
    std::vector<double> state(static_cast<std::size_t>(2 * rows * cols));
    Eigen::Map<Operator>(reinterpret_cast<Complex*>(state.data()), rows, cols) = initial;

    std::vector<Operator> out;
    out.reserve(taus.size());
    double t = 0.0;
    for (double target : taus) {
      if (target > t) {
        for (const auto& piece : path(t, target)) integrate_piece(state, rows, cols, piece);
        t = target;
      } else {
        for (const auto& tc : timed_) {
          for (double p : nonmarkov_poles(tc.params.gamma0, tc.params.lambda, target + 1.0)) {
            if (std::abs(p - target) < 1e-10) throw NoConvergence("rate is singular at requested tau");
          }
        }
      }
      out.emplace_back(Eigen::Map<const Operator>(reinterpret_cast<const Complex*>(state.data()), rows, cols));
    }
    return out;
  }

  Eigen::Index dim_ = 0;
  std::vector<DissipationChannel> channels_;
  Operator constant_;
  std::vector<TimedChannel> timed_;
};

inline Dissipator build_dissipator(std::vector<DissipationChannel> channels, Eigen::Index dim) {
  return Dissipator(std::move(channels), dim);
}

inline Operator evolve(const Dissipator& d, const Operator& c, double tau) { return d.evolve(c, tau); }

inline AsymptoticSpace steady_state(const Dissipator& d, double tol = 1e-9) {
  return d.asymptotic_space(tol);
}

/// Two-level amplitude damping through sigma_-.
inline Dissipator amplitude_damping(double gamma) {
  return Dissipator({{sigma_minus(), ConstantRate{gamma}, "sigma_minus"}}, 2);
}

inline Dissipator nonmarkov_jc_dissipator(double gamma0, double lambda) {
  return Dissipator({{sigma_minus(), NonMarkovJC{gamma0, lambda}, "sigma_minus"}}, 2);
}

/// Spontaneous emission of the six-level system, one rate for all three channels.
inline Dissipator sodium_dissipator(double big_gamma) {
  std::vector<DissipationChannel> chans;
  for (auto& j : sodium_jump_operators()) chans.push_back({std::move(j.jump), ConstantRate{big_gamma}, "L" + j.label});
  return Dissipator(std::move(chans), six_level::dim);
}

}  // namespace weakdiss
