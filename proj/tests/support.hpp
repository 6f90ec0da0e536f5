#pragma once

#include <cmath>
#include <complex>
#include <random>


#include "weakdiss/operators.hpp"

namespace weakdiss::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

  Operator op(Eigen::Index n) {
    Operator m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = Complex(normal(), normal());
    return m;
  }

  Operator hermitian(Eigen::Index n) {
    const Operator m = op(n);
    return 0.5 * (m + m.adjoint());
  }

  Ket ket(Eigen::Index n) {
    Ket k(n);
    for (Eigen::Index i = 0; i < n; ++i) k(i) = Complex(normal(), normal());
    return k.normalized();
  }

  Operator density(Eigen::Index n) {
    const Operator m = op(n);
    Operator rho = m * m.adjoint();
    return rho / rho.trace();
  }

  /// Uniform inside the unit ball; `pure` puts it on the sphere.
  BlochVector bloch(bool pure = false) {
    Eigen::Vector3d v(normal(), normal(), normal());
    v.normalize();
    if (!pure) v *= std::cbrt(uniform(0.0, 1.0));
    return BlochVector::from(v);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline double max_abs(const Operator& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace weakdiss::testing
