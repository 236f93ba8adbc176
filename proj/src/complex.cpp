// SPDX-License-Identifier: Apache-2.0
#include "ftkit/complex.hpp"

#include <cmath>
#include <stdexcept>

namespace ftkit {

Complex cadd(Complex z1, Complex z2) {
  return {z1.real() + z2.real(), z1.imag() + z2.imag()};
}

Complex cmul(Complex z1, Complex z2) {
  return {z1.real() * z2.real() - z1.imag() * z2.imag(),
          z1.real() * z2.imag() + z1.imag() * z2.real()};
}

bool check_cauchy_riemann(const ComplexFunction &f, Complex z, double h,
                          double tol) {
  if (!(h > 0.0)) throw std::invalid_argument("cauchy-riemann: step must be > 0");
  if (!(tol > 0.0))
    throw std::invalid_argument("cauchy-riemann: tolerance must be > 0");

  const Complex dx{h, 0.0};
  const Complex dy{0.0, h};
  const Complex fx = (f(z + dx) - f(z - dx)) / (2.0 * h);
  const Complex fy = (f(z + dy) - f(z - dy)) / (2.0 * h);

  const double u_x = fx.real(), v_x = fx.imag();
  const double u_y = fy.real(), v_y = fy.imag();
  return std::abs(u_x - v_y) <= tol && std::abs(u_y + v_x) <= tol;
}

}  // namespace ftkit
