#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace poro {

using Vec3 = Eigen::Vector3d;

/// Symmetric 3x3 tensor stored as six components in Voigt order
/// 11, 22, 33, 23, 13, 12. Components are plain tensor entries;
/// the factor of 2 on shear terms enters only inside ddot(). This is
/// the single place where the ordering and shear convention live.
struct SymTensor3 {
  std::array<double, 6> v{0, 0, 0, 0, 0, 0};

  static SymTensor3 zero() { return {}; }
  static SymTensor3 identity() { return {{1, 1, 1, 0, 0, 0}}; }
  static SymTensor3 diag(double a, double b, double c) { return {{a, b, c, 0, 0, 0}}; }

  static SymTensor3 from_matrix(const Eigen::Matrix3d& m) {
    SymTensor3 t;
    t.v = {m(0, 0), m(1, 1), m(2, 2),
           0.5 * (m(1, 2) + m(2, 1)), 0.5 * (m(0, 2) + m(2, 0)), 0.5 * (m(0, 1) + m(1, 0))};
    return t;
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d m;
    m << v[0], v[5], v[4],
         v[5], v[1], v[3],
         v[4], v[3], v[2];
    return m;
  }

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }

  double trace() const { return v[0] + v[1] + v[2]; }

  /// Full double contraction a : b (shear entries counted twice).
  double ddot(const SymTensor3& o) const {
    return v[0] * o.v[0] + v[1] * o.v[1] + v[2] * o.v[2] +
           2.0 * (v[3] * o.v[3] + v[4] * o.v[4] + v[5] * o.v[5]);
  }

  double norm() const { return std::sqrt(ddot(*this)); }

  SymTensor3 operator+(const SymTensor3& o) const {
    SymTensor3 r;
    for (int i = 0; i < 6; ++i) r.v[i] = v[i] + o.v[i];
    return r;
  }
  SymTensor3 operator-(const SymTensor3& o) const {
    SymTensor3 r;
    for (int i = 0; i < 6; ++i) r.v[i] = v[i] - o.v[i];
    return r;
  }
  SymTensor3 operator*(double s) const {
    SymTensor3 r;
    for (int i = 0; i < 6; ++i) r.v[i] = v[i] * s;
    return r;
  }
  SymTensor3& operator+=(const SymTensor3& o) {
    for (int i = 0; i < 6; ++i) v[i] += o.v[i];
    return *this;
  }
};

inline SymTensor3 operator*(double s, const SymTensor3& t) { return t * s; }

}  // namespace poro
