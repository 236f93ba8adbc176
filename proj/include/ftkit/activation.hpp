// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numbers>
#include <string>
#include <string_view>

#include "ftkit/complex.hpp"

namespace ftkit {

enum class ActivationType { SplitSigmoid, SplitTanh, ModReLU, ZReLU, PReLU };

enum class Channel { Real, Imag };

/// Complex activation applied after the conversion (a + bi) * z.
///
/// Split kinds act on each part independently with the same real function.
/// The ReLU family acts on the complex value as a whole and either passes it
/// through (possibly rescaled, for modReLU) or zeroes it.
struct ActivationKind {
  ActivationType type = ActivationType::SplitTanh;
  double bias = 0.0;       // modReLU radius offset
  double rho = 0.3;        // PReLU minimum radius
  double theta_min = 0.0;  // PReLU allowed phase window, radians
  double theta_max = std::numbers::pi / 2;

  static ActivationKind split_sigmoid() { return {ActivationType::SplitSigmoid}; }
  static ActivationKind split_tanh() { return {ActivationType::SplitTanh}; }
  static ActivationKind mod_relu(double b) {
    ActivationKind k{ActivationType::ModReLU};
    k.bias = b;
    return k;
  }
  static ActivationKind z_relu() { return {ActivationType::ZReLU}; }
  static ActivationKind p_relu(double rho = 0.3, double theta_min = 0.0,
                               double theta_max = std::numbers::pi / 2);

  bool is_split() const noexcept {
    return type == ActivationType::SplitSigmoid || type == ActivationType::SplitTanh;
  }

  /// Throws std::invalid_argument when PReLU parameters break
  /// rho >= 0, theta_min < theta_max, both inside [-pi, pi].
  void validate() const;

  friend bool operator==(const ActivationKind &, const ActivationKind &) = default;
};

Complex activate(const ActivationKind &kind, Complex z);

/// Whether `z` lies in the closed active region of a ReLU-family activation.
/// Always true for split kinds. Boundary points (|z| == rho, |z| == -b, phase
/// exactly on a window edge) count as active.
bool is_active(const ActivationKind &kind, Complex z);

/// Point-wise derivative consumed by back-propagation.
///
/// Split kinds: derivative of the real function at `pre_activation`.
/// ReLU family: an indicator gate, 1 when the activation produced a nonzero
/// output and 0 in the dead region. For modReLU this ignores the radial
/// rescaling and is an approximation.
double activate_derivative(const ActivationKind &kind, double pre_activation,
                           Channel channel, bool output_nonzero);

double sigmoid(double x);

/// Compact text form: "sigmoid", "tanh", "modrelu:<b>", "zrelu",
/// "prelu:<rho>:<theta_min>:<theta_max>". Doubles are written in shortest
/// round-trip form.
std::string to_string(const ActivationKind &kind);
ActivationKind parse_activation(std::string_view text);

}  // namespace ftkit
