#include <algorithm>
#include <cmath>
#include <numbers>

#include "support.hpp"

namespace ntk::testing {

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
double simpson(F&& f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int k = 1; k < intervals; ++k) sum += f(a + k * h) * ((k % 2) ? 4.0 : 2.0);
  return sum * h / 3.0;
}

double legendre(int n, double t) {
  double p0 = 1.0;
  if (n == 0) return p0;
  double p1 = t;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace

double rf_by_angular_quadrature(int s, double u) {
  const double theta = std::acos(u);
  double dfact = 1.0;
  for (int k = 2 * s - 1; k > 1; k -= 2) dfact *= k;
  const double c2 = 2.0 / dfact;
  double radial = std::pow(2.0, s);
  for (int k = 2; k <= s; ++k) radial *= k;
  const double lo = theta - kPi / 2.0;
  const double hi = kPi / 2.0;
  if (hi <= lo) return 0.0;
  const double arc = simpson(
      [&](double phi) {
        return std::pow(std::max(0.0, std::cos(phi)), s) * std::pow(std::max(0.0, std::cos(phi - theta)), s);
      },
      lo, hi, 20000);
  return c2 * radial * arc / (2.0 * kPi);
}

double legendre_moment(const std::function<double(double)>& f, int degree, int panels) {
  // t = cos(theta) turns the endpoint fractional powers into smooth functions of theta.
  return simpson([&](double th) { return f(std::cos(th)) * legendre(degree, std::cos(th)) * std::sin(th); }, 0.0,
                 kPi, 2 * panels * 25);
}

}  // namespace ntk::testing
