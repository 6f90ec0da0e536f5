#pragma once

// Finite-dimensional operator algebra: Pauli/Bloch machinery, truncated Fock
// space ladder operators and the J_g = 1/2 <-> J_e = 3/2 six-level system.
//
// Basis conventions
//   two-level:  index 0 = |e>, index 1 = |g>   (sigma_z = diag(1, -1))
//   six-level:  (e,-3/2) (e,-1/2) (e,+1/2) (e,+3/2) (g,-1/2) (g,+1/2)
//   Fock:       index n = |n>, n = 0 .. n_max

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "weakdiss/errors.hpp"

namespace weakdiss {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Default tolerance for structural checks on small dense matrices.
inline constexpr double kStructuralTol = 1e-12;

enum class Axis { x, y, z };

/// Real Bloch vector. States satisfy norm() <= 1; observables are unconstrained.
struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  [[nodiscard]] double norm() const { return std::sqrt(x * x + y * y + z * z); }
  [[nodiscard]] Eigen::Vector3d vec() const { return {x, y, z}; }
  static BlochVector from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
  friend bool operator==(const BlochVector&, const BlochVector&) = default;
};

inline bool all_finite(const Operator& m) {
  return m.array().isFinite().all();
}

inline bool is_hermitian(const Operator& m, double tol = kStructuralTol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

/// Hermitian, unit trace and positive semidefinite, all up to `tol`.
inline bool is_density(const Operator& m, double tol = kStructuralTol) {
  if (m.rows() == 0 || !is_hermitian(m, tol) || !all_finite(m)) return false;
  if (std::abs(m.trace() - Complex(1.0)) > tol) return false;
  const Operator h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

inline Operator identity(Eigen::Index dim) { return Operator::Identity(dim, dim); }

inline Operator pauli(Axis axis) {
  Operator s = Operator::Zero(2, 2);
  switch (axis) {
    case Axis::x:
      s(0, 1) = 1.0;
      s(1, 0) = 1.0;
      break;
    case Axis::y:
      s(0, 1) = -kI;
      s(1, 0) = kI;
      break;
    case Axis::z:
      s(0, 0) = 1.0;
      s(1, 1) = -1.0;
      break;
  }
  return s;
}

/// sigma_+ = |e><g|.
inline Operator sigma_plus() {
  Operator s = Operator::Zero(2, 2);
  s(0, 1) = 1.0;
  return s;
}

/// sigma_- = |g><e|.
inline Operator sigma_minus() {
  Operator s = Operator::Zero(2, 2);
  s(1, 0) = 1.0;
  return s;
}

/// a * 1 + sum_j m_j sigma_j for a possibly complex 3-vector m.
inline Operator pauli_combination(Complex a, const Eigen::Vector3cd& m) {
  return a * identity(2) + m(0) * pauli(Axis::x) + m(1) * pauli(Axis::y) +
         m(2) * pauli(Axis::z);
}

inline Operator bloch_to_density(const BlochVector& v) {
  if (!(v.norm() <= 1.0 + kStructuralTol)) {
    throw NormTooLarge("Bloch vector norm " + std::to_string(v.norm()) + " exceeds 1");
  }
  return 0.5 * pauli_combination(1.0, v.vec().cast<Complex>());
}

inline BlochVector density_to_bloch(const Operator& rho) {
  if (rho.rows() != 2 || !is_density(rho, 1e-10)) {
    throw NotDensity("expected a 2x2 density matrix");
  }
  // Tr[rho sigma_j] with basis (|e>, |g>)
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(),
          (rho(0, 0) - rho(1, 1)).real()};
}

inline Operator ket_to_density(const Ket& psi) { return psi * psi.adjoint(); }

/// Normalizes a ket; throws NotDensity for the zero vector.
inline Ket normalized(const Ket& psi) {
  const double n = psi.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NotDensity("cannot normalize a zero or non-finite ket");
  return psi / n;
}

// ---------------------------------------------------------------------------
// Fock space
// ---------------------------------------------------------------------------

struct FockSpace {
  int n_max = 20;
  double omega_f = 1.0;
  double hbar = 1.0;

  [[nodiscard]] Eigen::Index dim() const { return n_max + 1; }
};

struct LadderPair {
  Operator a;
  Operator a_dagger;
};

struct QuadraturePair {
  Operator Q;
  Operator P;
};

inline LadderPair ladder(const FockSpace& space) {
  const auto d = space.dim();
  Operator a = Operator::Zero(d, d);
  for (Eigen::Index n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Operator ad = a.adjoint();
  return {std::move(a), std::move(ad)};
}

/// Q = sqrt(hbar / 2 w) (a^+ + a), P = i sqrt(hbar w / 2) (a^+ - a).
inline QuadraturePair quadratures(const FockSpace& space) {
  const auto [a, ad] = ladder(space);
  const double qs = std::sqrt(space.hbar / (2.0 * space.omega_f));
  const double ps = std::sqrt(space.hbar * space.omega_f / 2.0);
  return {qs * (ad + a), kI * ps * (ad - a)};
}

inline Ket fock_ket(const FockSpace& space, int n) {
  Ket k = Ket::Zero(space.dim());
  k(n) = 1.0;
  return k;
}

// ---------------------------------------------------------------------------
// J_g = 1/2 <-> J_e = 3/2 six-level system
// ---------------------------------------------------------------------------

namespace six_level {
inline constexpr int e_m3h = 0;  // |J_e, -3/2>
inline constexpr int e_m1h = 1;  // |J_e, -1/2>
inline constexpr int e_p1h = 2;  // |J_e, +1/2>
inline constexpr int e_p3h = 3;  // |J_e, +3/2>
inline constexpr int g_m1h = 4;  // |J_g, -1/2>
inline constexpr int g_p1h = 5;  // |J_g, +1/2>
inline constexpr int dim = 6;
}  // namespace six_level

/// J_y on the six-level system with hbar = 1.
inline Operator jy_six_level() {
  using namespace six_level;
  Operator j = Operator::Zero(dim, dim);
  const double h3 = std::sqrt(3.0) / 2.0;
  j(0, 1) = kI * h3;
  j(1, 0) = -kI * h3;
  j(1, 2) = kI;
  j(2, 1) = -kI;
  j(2, 3) = kI * h3;
  j(3, 2) = -kI * h3;
  j(4, 5) = 0.5 * kI;
  j(5, 4) = -0.5 * kI;
  return j;
}

struct LabeledJump {
  Operator jump;
  std::string label;  // "0", "-", "+"
};

/// Spontaneous-emission jump operators L_0, L_-, L_+ with Clebsch-Gordan amplitudes.
inline std::vector<LabeledJump> sodium_jump_operators() {
  using namespace six_level;
  const double s23 = std::sqrt(2.0 / 3.0);
  const double s13 = 1.0 / std::sqrt(3.0);

  Operator l0 = Operator::Zero(dim, dim);
  l0(g_m1h, e_m1h) = s23;
  l0(g_p1h, e_p1h) = s23;

  Operator lm = Operator::Zero(dim, dim);
  lm(g_m1h, e_m3h) = 1.0;
  lm(g_p1h, e_m1h) = s13;

  Operator lp = Operator::Zero(dim, dim);
  lp(g_m1h, e_p1h) = s13;
  lp(g_p1h, e_p3h) = 1.0;

  return {{std::move(l0), "0"}, {std::move(lm), "-"}, {std::move(lp), "+"}};
}

// ---------------------------------------------------------------------------
// Column-stacking vectorization
// ---------------------------------------------------------------------------

inline Eigen::VectorXcd vec(const Operator& m) {
  return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

inline Operator unvec(const Eigen::VectorXcd& v, Eigen::Index dim) {
  return Eigen::Map<const Operator>(v.data(), dim, dim);
}

inline Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace weakdiss
