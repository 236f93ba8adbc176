// SPDX-License-Identifier: Apache-2.0
#include "ftkit/activation.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ftkit/format.hpp"

namespace ftkit {

ActivationKind ActivationKind::p_relu(double rho, double theta_min,
                                      double theta_max) {
  ActivationKind k{ActivationType::PReLU};
  k.rho = rho;
  k.theta_min = theta_min;
  k.theta_max = theta_max;
  k.validate();
  return k;
}

void ActivationKind::validate() const {
  if (type != ActivationType::PReLU) return;
  constexpr double pi = std::numbers::pi;
  if (!(rho >= 0.0)) throw std::invalid_argument("prelu: rho must be >= 0");
  if (!(theta_min < theta_max))
    throw std::invalid_argument("prelu: theta_min must be < theta_max");
  if (theta_min < -pi || theta_max > pi)
    throw std::invalid_argument("prelu: phase window must lie within [-pi, pi]");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

bool phase_in(Complex z, double lo, double hi) {
  const double theta = std::arg(z);
  return theta >= lo && theta <= hi;
}

}  // namespace

Complex activate(const ActivationKind &kind, Complex z) {
  switch (kind.type) {
    case ActivationType::SplitSigmoid:
      return {sigmoid(z.real()), sigmoid(z.imag())};
    case ActivationType::SplitTanh:
      return {std::tanh(z.real()), std::tanh(z.imag())};
    case ActivationType::ModReLU: {
      if (!is_active(kind, z)) return {0.0, 0.0};
      const double mag = std::abs(z);
      const double scale = (mag + kind.bias) / mag;
      return {z.real() * scale, z.imag() * scale};
    }
    case ActivationType::ZReLU:
    case ActivationType::PReLU:
      return is_active(kind, z) ? z : Complex{0.0, 0.0};
  }
  return z;
}

bool is_active(const ActivationKind &kind, Complex z) {
  switch (kind.type) {
    case ActivationType::SplitSigmoid:
    case ActivationType::SplitTanh:
      return true;
    case ActivationType::ModReLU: {
      const double mag = std::abs(z);
      return mag > 0.0 && mag + kind.bias >= 0.0;
    }
    case ActivationType::ZReLU:
      return phase_in(z, 0.0, std::numbers::pi / 2);
    case ActivationType::PReLU:
      return std::abs(z) >= kind.rho && phase_in(z, kind.theta_min, kind.theta_max);
  }
  return true;
}

double activate_derivative(const ActivationKind &kind, double pre_activation,
                           Channel /*channel*/, bool output_nonzero) {
  // Both channels share one real function; `channel` is kept so callers state
  // which part they differentiate.
  switch (kind.type) {
    case ActivationType::SplitSigmoid: {
      const double s = sigmoid(pre_activation);
      return s * (1.0 - s);
    }
    case ActivationType::SplitTanh: {
      const double t = std::tanh(pre_activation);
      return 1.0 - t * t;
    }
    case ActivationType::ModReLU:
    case ActivationType::ZReLU:
    case ActivationType::PReLU:
      return output_nonzero ? 1.0 : 0.0;
  }
  return 0.0;
}

std::string to_string(const ActivationKind &kind) {
  switch (kind.type) {
    case ActivationType::SplitSigmoid: return "sigmoid";
    case ActivationType::SplitTanh: return "tanh";
    case ActivationType::ModReLU: return "modrelu:" + format_double(kind.bias);
    case ActivationType::ZReLU: return "zrelu";
    case ActivationType::PReLU:
      return "prelu:" + format_double(kind.rho) + ":" +
             format_double(kind.theta_min) + ":" + format_double(kind.theta_max);
  }
  return "?";
}

ActivationKind parse_activation(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  const auto name = parts.front();
  const auto arg = [&](std::size_t i) { return parse_double(parts.at(i)); };
  const auto expect_args = [&](std::size_t n) {
    if (parts.size() != n + 1)
      throw std::invalid_argument("activation '" + std::string(text) +
                                  "': expected " + std::to_string(n) +
                                  " parameter(s)");
  };

  if (name == "sigmoid") {
    expect_args(0);
    return ActivationKind::split_sigmoid();
  }
  if (name == "tanh") {
    expect_args(0);
    return ActivationKind::split_tanh();
  }
  if (name == "zrelu") {
    expect_args(0);
    return ActivationKind::z_relu();
  }
  if (name == "modrelu") {
    expect_args(1);
    return ActivationKind::mod_relu(arg(1));
  }
  if (name == "prelu") {
    if (parts.size() == 1) return ActivationKind::p_relu();
    expect_args(3);
    return ActivationKind::p_relu(arg(1), arg(2), arg(3));
  }
  throw std::invalid_argument("unknown activation '" + std::string(text) + "'");
}

}  // namespace ftkit
