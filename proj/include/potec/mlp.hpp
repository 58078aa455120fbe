// Copyright 2026 The POTEC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POTEC_MLP_HPP
#define POTEC_MLP_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace potec {

// Gradient with respect to a flat parameter vector, aligned with Mlp::params().
using GradientVector = std::vector<double>;

// Feed-forward network with tanh hidden units and an affine output layer.
//
// Parameters are stored flat, layer by layer: the weight matrix (fan_out rows
// of fan_in entries) followed by the fan_out biases.
class Mlp {
 public:
  // Activations of one forward pass, reused by Backward.
  struct Trace {
    std::vector<std::vector<double>> activations;  // input, hidden..., output
  };

  Mlp() = default;
  // All-zero parameters.
  explicit Mlp(std::vector<std::size_t> layer_sizes);
  // Glorot-uniform weights, zero biases.
  static Mlp Initialized(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t input_size() const { return layer_sizes_.front(); }
  std::size_t output_size() const { return layer_sizes_.back(); }
  std::size_t n_params() const { return params_.size(); }
  // Parameters of the output layer (weights and biases).
  std::size_t n_last_layer_params() const;

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }

  std::vector<double> Forward(std::span<const double> x) const;
  void Forward(std::span<const double> x, Trace& trace) const;

  // grad += scale * d(upstream . output)/d(params), for the pass in trace.
  void Backward(const Trace& trace, std::span<const double> upstream, std::span<double> grad,
                double scale = 1.0) const;

  // Gradient of upstream . Forward(x) with respect to the parameters.
  GradientVector ParamGradient(std::span<const double> x, std::span<const double> upstream) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

  std::vector<std::size_t> layer_sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

void WriteMlp(const Mlp& net, std::ostream& out);
Mlp ReadMlp(std::istream& in);

struct AdamHyper {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// One descent step on grad with decoupled weight decay. Pass the negated
// gradient to ascend. Throws kNumeric on non-finite gradient entries.
void AdamStep(std::span<double> params, std::span<const double> grad, AdamState& state,
              const AdamHyper& hyper);

}  // namespace potec

#endif  // POTEC_MLP_HPP
