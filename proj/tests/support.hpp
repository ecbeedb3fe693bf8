#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include <Eigen/Dense>

namespace ntk::testing {

/// Unit vectors x, x' in R^d with <x, x'> = u.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> pair_with_dot(int d, double u) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  x[0] = 1.0;
  y[0] = u;
  y[1] = std::sqrt((1.0 - u) * (1.0 + u));
  return {x, y};
}

/// Two-layer RF kernel from its defining expectation, reduced to the plane of
/// x and x': c^2 2^s s! / (2 pi) * integral of cos(phi)^s cos(phi - theta)^s
/// over the arc where both are positive, by composite Simpson.
double rf_by_angular_quadrature(int s, double u);

/// Integral over [-1, 1] of f(t) P_i(t) dt by composite Simpson in theta = arccos t.
double legendre_moment(const std::function<double(double)>& f, int degree, int panels = 4000);

}  // namespace ntk::testing
