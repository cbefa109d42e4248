#pragma once

#include <array>

#include <Eigen/Core>

namespace bilayer {

struct TriangleQuadraturePoint {
  Eigen::Vector3d lambda;
  double weight;  // relative to the triangle area
};

// Seven-point rule, exact for polynomials of degree 5.
inline const std::array<TriangleQuadraturePoint, 7>& degree5_triangle_rule() {
  static const std::array<TriangleQuadraturePoint, 7> rule = [] {
    constexpr double a1 = 0.059715871789769820, b1 = 0.470142064105115090;
    constexpr double a2 = 0.797426985353087322, b2 = 0.101286507323456339;
    constexpr double w0 = 0.225;
    constexpr double w1 = 0.132394152788506181;
    constexpr double w2 = 0.125939180544827153;
    return std::array<TriangleQuadraturePoint, 7>{{
        {Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3), w0},
        {Eigen::Vector3d(a1, b1, b1), w1},
        {Eigen::Vector3d(b1, a1, b1), w1},
        {Eigen::Vector3d(b1, b1, a1), w1},
        {Eigen::Vector3d(a2, b2, b2), w2},
        {Eigen::Vector3d(b2, a2, b2), w2},
        {Eigen::Vector3d(b2, b2, a2), w2},
    }};
  }();
  return rule;
}

}  // namespace bilayer
