// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ftkit/activation.hpp"
#include "ftkit/matrix.hpp"

namespace ftkit {

/// One layer of FT neurons.
///
/// Each neuron i holds a row of vesicle concentrations W(i, :) on the incoming
/// stimuli and a row of receptor strengths V(i, :) on the layer's own
/// neurotrophin densities from the previous timestamp. The complex
/// pre-activation W s + i V r is converted by (a + bi) and activated.
struct FTLayer {
  Matrix W;  // n x m
  Matrix V;  // n x n
  double a = 1.0;
  double b = 1.0;
  ActivationKind activation = ActivationKind::split_tanh();
  Vector r0;       // configured initial neurotrophin densities
  Vector r_state;  // r_{t-1}

  FTLayer() = default;
  FTLayer(std::size_t inputs, std::size_t units, double a = 1.0, double b = 1.0,
          ActivationKind activation = ActivationKind::split_tanh());

  std::size_t inputs() const noexcept { return W.cols(); }
  std::size_t units() const noexcept { return W.rows(); }

  /// Throws std::invalid_argument when shapes are inconsistent.
  void validate() const;

  friend bool operator==(const FTLayer &, const FTLayer &) = default;
};

/// Everything one timestamp of a layer produces. `r_prev` is the state the
/// step consumed; `s_prev` is not stored (the caller owns it).
struct LayerStep {
  Vector s;
  Vector r;
  Vector alpha;
  Vector beta;
  Vector r_prev;
};

/// alpha = a W s_prev - b V r_prev, beta = b W s_prev + a V r_prev,
/// (s, r) = activation(alpha + beta i). Advances layer.r_state to r.
///
/// Throws std::invalid_argument on a length mismatch and NumericOverflow when
/// the result is not finite.
LayerStep layer_forward(FTLayer &layer, std::span<const double> s_prev);

/// Fully-connected feed-forward stack of FT layers.
class FTNetwork {
 public:
  FTNetwork() = default;
  explicit FTNetwork(std::vector<FTLayer> layers);

  /// Builds from the cascade notation size(m, l1, ..., n). A zero hidden
  /// width means "no hidden layer", so {m, 0, n} gives a single layer.
  static FTNetwork from_signature(const std::vector<std::size_t> &signature,
                                  double a = 1.0, double b = 1.0,
                                  ActivationKind activation = ActivationKind::split_tanh());

  std::vector<FTLayer> &layers() noexcept { return layers_; }
  const std::vector<FTLayer> &layers() const noexcept { return layers_; }
  FTLayer &layer(std::size_t i) { return layers_.at(i); }
  const FTLayer &layer(std::size_t i) const { return layers_.at(i); }
  std::size_t depth() const noexcept { return layers_.size(); }

  std::size_t input_width() const;
  std::size_t output_width() const;

  /// {m, l1, ..., n}; a single-layer net reports {m, 0, n}.
  std::vector<std::size_t> signature() const;
  std::string signature_string() const;

  /// Uniform on +-0.5 / sqrt(fan-in) for W (fan-in = inputs) and V
  /// (fan-in = units), drawn layer by layer, W before V, row-major. `scale`
  /// multiplies both bounds.
  void initialize(std::uint64_t seed, double scale = 1.0);

  std::size_t parameter_count() const;

  void validate() const;

  friend bool operator==(const FTNetwork &, const FTNetwork &) = default;

 private:
  std::vector<FTLayer> layers_;
};

/// Chains layer_forward over the stack and returns the top stimulus vector.
Vector network_forward(FTNetwork &net, std::span<const double> x);

/// Like network_forward but keeps every layer's step for back-propagation.
std::vector<LayerStep> network_forward_trace(FTNetwork &net, std::span<const double> x);

/// Sets every layer's r_state to its configured r0.
void reset_state(FTNetwork &net);

/// Replaces each layer's configured r0 and resets to it.
void reset_state(FTNetwork &net, const std::vector<Vector> &r0);

/// Resets the state and runs the forward pass over `inputs`, returning the
/// output at every timestamp.
std::vector<Vector> replay(FTNetwork &net, const std::vector<Vector> &inputs);

/// Replays the forward pass over `inputs` from the reset state so each
/// layer's r_state holds the last neurotrophin densities under the current
/// weights.
void refresh_imaginary(FTNetwork &net, const std::vector<Vector> &inputs);

/// Versioned plain-text model file. Values are written in shortest
/// round-trip decimal form, so save/load is bit-exact.
void save_model(const FTNetwork &net, std::ostream &out);
FTNetwork load_model(std::istream &in);
void save_model(const FTNetwork &net, const std::filesystem::path &path);
FTNetwork load_model(const std::filesystem::path &path);

}  // namespace ftkit
