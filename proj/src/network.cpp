// SPDX-License-Identifier: Apache-2.0
#include "ftkit/network.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ftkit/errors.hpp"
#include "ftkit/format.hpp"
#include "ftkit/io.hpp"

namespace ftkit {

FTLayer::FTLayer(std::size_t inputs, std::size_t units, double a_, double b_,
                 ActivationKind act)
    : W(units, inputs),
      V(units, units),
      a(a_),
      b(b_),
      activation(act),
      r0(units, 0.0),
      r_state(units, 0.0) {
  activation.validate();
}

void FTLayer::validate() const {
  if (W.rows() == 0 || W.cols() == 0)
    throw std::invalid_argument("layer W must be non-empty");
  if (V.rows() != W.rows() || V.cols() != W.rows())
    throw std::invalid_argument("layer V must be square with side " +
                                std::to_string(W.rows()));
  if (r_state.size() != W.rows() || r0.size() != W.rows())
    throw std::invalid_argument("layer state length must equal unit count");
  activation.validate();
}

LayerStep layer_forward(FTLayer &layer, std::span<const double> s_prev) {
  const std::size_t n = layer.units();
  if (s_prev.size() != layer.inputs())
    throw std::invalid_argument("layer_forward: expected input of length " +
                                std::to_string(layer.inputs()) + ", got " +
                                std::to_string(s_prev.size()));
  if (layer.r_state.size() != n)
    throw std::invalid_argument("layer_forward: state length mismatch");

  LayerStep step;
  step.r_prev = layer.r_state;
  step.s.resize(n);
  step.r.resize(n);
  step.alpha.resize(n);
  step.beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ws = dot(layer.W.row(i), s_prev);
    const double vr = dot(layer.V.row(i), step.r_prev);
    step.alpha[i] = layer.a * ws - layer.b * vr;
    step.beta[i] = layer.b * ws + layer.a * vr;
    const Complex out = activate(layer.activation, {step.alpha[i], step.beta[i]});
    if (!std::isfinite(out.real()) || !std::isfinite(out.imag()))
      throw NumericOverflow("layer_forward: non-finite activation at unit " +
                            std::to_string(i));
    step.s[i] = out.real();
    step.r[i] = out.imag();
  }
  layer.r_state = step.r;
  return step;
}

FTNetwork::FTNetwork(std::vector<FTLayer> layers) : layers_(std::move(layers)) {
  validate();
}

FTNetwork FTNetwork::from_signature(const std::vector<std::size_t> &signature,
                                    double a, double b, ActivationKind activation) {
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; i < signature.size(); ++i) {
    const bool interior = i > 0 && i + 1 < signature.size();
    if (signature[i] == 0 && interior) continue;
    widths.push_back(signature[i]);
  }
  if (widths.size() < 2)
    throw std::invalid_argument("signature needs at least an input and an output width");
  std::vector<FTLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] == 0 || widths[i + 1] == 0)
      throw std::invalid_argument("signature widths must be positive");
    layers.emplace_back(widths[i], widths[i + 1], a, b, activation);
  }
  return FTNetwork(std::move(layers));
}

std::size_t FTNetwork::input_width() const { return layers_.at(0).inputs(); }
std::size_t FTNetwork::output_width() const { return layers_.back().units(); }

std::vector<std::size_t> FTNetwork::signature() const {
  std::vector<std::size_t> sig{input_width()};
  if (layers_.size() == 1) sig.push_back(0);
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) sig.push_back(layers_[i].units());
  sig.push_back(output_width());
  return sig;
}

std::string FTNetwork::signature_string() const {
  std::string s = "size(";
  const auto sig = signature();
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(sig[i]);
  }
  return s + ")";
}

void FTNetwork::initialize(std::uint64_t seed, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("initialize: scale must be positive and finite");
  std::mt19937_64 rng(seed);
  for (auto &layer : layers_) {
    const double w_bound = scale * 0.5 / std::sqrt(static_cast<double>(layer.inputs()));
    const double v_bound = scale * 0.5 / std::sqrt(static_cast<double>(layer.units()));
    std::uniform_real_distribution<double> wdist(-w_bound, w_bound);
    std::uniform_real_distribution<double> vdist(-v_bound, v_bound);
    for (double &w : layer.W.flat()) w = wdist(rng);
    for (double &v : layer.V.flat()) v = vdist(rng);
  }
}

std::size_t FTNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto &layer : layers_) n += layer.W.size() + layer.V.size();
  return n;
}

void FTNetwork::validate() const {
  if (layers_.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].validate();
    if (i > 0 && layers_[i].inputs() != layers_[i - 1].units())
      throw std::invalid_argument("layer " + std::to_string(i) + " expects " +
                                  std::to_string(layers_[i].inputs()) +
                                  " inputs but layer below has " +
                                  std::to_string(layers_[i - 1].units()) + " units");
  }
}

Vector network_forward(FTNetwork &net, std::span<const double> x) {
  if (x.size() != net.input_width())
    throw std::invalid_argument("network_forward: expected input of length " +
                                std::to_string(net.input_width()) + ", got " +
                                std::to_string(x.size()));
  Vector s(x.begin(), x.end());
  for (auto &layer : net.layers()) s = layer_forward(layer, s).s;
  return s;
}

std::vector<LayerStep> network_forward_trace(FTNetwork &net, std::span<const double> x) {
  if (x.size() != net.input_width())
    throw std::invalid_argument("network_forward: expected input of length " +
                                std::to_string(net.input_width()) + ", got " +
                                std::to_string(x.size()));
  std::vector<LayerStep> steps;
  steps.reserve(net.depth());
  std::span<const double> s = x;
  for (auto &layer : net.layers()) {
    steps.push_back(layer_forward(layer, s));
    s = steps.back().s;
  }
  return steps;
}

void reset_state(FTNetwork &net) {
  for (auto &layer : net.layers()) layer.r_state = layer.r0;
}

void reset_state(FTNetwork &net, const std::vector<Vector> &r0) {
  if (r0.size() != net.depth())
    throw std::invalid_argument("reset_state: expected " + std::to_string(net.depth()) +
                                " initial state vectors");
  for (std::size_t l = 0; l < net.depth(); ++l)
    if (r0[l].size() != net.layer(l).units())
      throw std::invalid_argument("reset_state: layer " + std::to_string(l) +
                                  " expects initial state of length " +
                                  std::to_string(net.layer(l).units()));
  for (std::size_t l = 0; l < net.depth(); ++l) {
    net.layer(l).r0 = r0[l];
    net.layer(l).r_state = r0[l];
  }
}

std::vector<Vector> replay(FTNetwork &net, const std::vector<Vector> &inputs) {
  reset_state(net);
  std::vector<Vector> outputs;
  outputs.reserve(inputs.size());
  for (const auto &x : inputs) outputs.push_back(network_forward(net, x));
  return outputs;
}

void refresh_imaginary(FTNetwork &net, const std::vector<Vector> &inputs) {
  replay(net, inputs);
}

// ---------------------------------------------------------------------------
// serialization

namespace {

constexpr const char *kMagic = "ftkit-model";
constexpr int kVersion = 1;

void write_values(std::ostream &out, const char *tag, std::span<const double> values) {
  out << tag;
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

std::string expect_word(std::istream &in, const char *word) {
  std::string w;
  if (!(in >> w) || w != word)
    throw std::runtime_error(std::string("model file: expected '") + word + "', got '" +
                             w + "'");
  return w;
}

std::size_t read_size(std::istream &in) {
  long long v = -1;
  if (!(in >> v) || v < 0) throw std::runtime_error("model file: bad integer");
  return static_cast<std::size_t>(v);
}

double read_double(std::istream &in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("model file: truncated");
  return parse_double(tok);
}

void read_values(std::istream &in, const char *tag, std::span<double> dst) {
  expect_word(in, tag);
  for (double &v : dst) v = read_double(in);
}

}  // namespace

void save_model(const FTNetwork &net, std::ostream &out) {
  out << kMagic << " v" << kVersion << '\n';
  out << "layers " << net.depth() << '\n';
  for (const auto &layer : net.layers()) {
    out << "layer " << layer.units() << ' ' << layer.inputs() << " a "
        << format_double(layer.a) << " b " << format_double(layer.b) << " activation "
        << to_string(layer.activation) << '\n';
    write_values(out, "W", layer.W.flat());
    write_values(out, "V", layer.V.flat());
    write_values(out, "r0", layer.r0);
    write_values(out, "r", layer.r_state);
  }
}

FTNetwork load_model(std::istream &in) {
  expect_word(in, kMagic);
  std::string version;
  in >> version;
  if (version != "v" + std::to_string(kVersion))
    throw std::runtime_error("model file: unsupported version '" + version + "'");
  expect_word(in, "layers");
  const std::size_t depth = read_size(in);
  std::vector<FTLayer> layers;
  for (std::size_t l = 0; l < depth; ++l) {
    expect_word(in, "layer");
    const std::size_t rows = read_size(in);
    const std::size_t cols = read_size(in);
    expect_word(in, "a");
    const double a = read_double(in);
    expect_word(in, "b");
    const double b = read_double(in);
    expect_word(in, "activation");
    std::string act;
    in >> act;
    FTLayer layer(cols, rows, a, b, parse_activation(act));
    read_values(in, "W", layer.W.flat());
    read_values(in, "V", layer.V.flat());
    read_values(in, "r0", layer.r0);
    read_values(in, "r", layer.r_state);
    layers.push_back(std::move(layer));
  }
  return FTNetwork(std::move(layers));
}

void save_model(const FTNetwork &net, const std::filesystem::path &path) {
  std::ostringstream out;
  save_model(net, out);
  write_file_atomic(path, out.str());
}

FTNetwork load_model(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace ftkit
