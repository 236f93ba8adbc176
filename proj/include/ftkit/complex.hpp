// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <functional>

namespace ftkit {

/// Real part carries the stimulus channel, imaginary part the neurotrophin
/// channel.
using Complex = std::complex<double>;

using ComplexFunction = std::function<Complex(Complex)>;

Complex cadd(Complex z1, Complex z2);

/// Textbook product (ac - bd, ad + bc) without the NaN-recovery branches of
/// operator*.
Complex cmul(Complex z1, Complex z2);

/// Numerical Cauchy-Riemann test at `z` using central differences of step `h`
/// along each real coordinate. True iff |u_x - v_y| <= tol and
/// |u_y + v_x| <= tol. Throws std::invalid_argument for h <= 0 or tol <= 0.
bool check_cauchy_riemann(const ComplexFunction &f, Complex z, double h = 1e-5,
                          double tol = 1e-6);

}  // namespace ftkit
