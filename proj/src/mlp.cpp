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

#include "potec/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "potec/error.hpp"
#include "potec/numeric.hpp"

namespace potec {
namespace {

// Indices of nonzero entries, or empty when the input is mostly dense.
// One-hot blocks in regression inputs make the first layer sparse.
std::vector<std::size_t> SparseSupport(std::span<const double> x) {
  std::vector<std::size_t> nz;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] != 0.0) nz.push_back(k);
  }
  if (nz.size() * 2 > x.size()) nz.clear();
  return nz;
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  Require(layer_sizes_.size() >= 2, ErrorCode::kConfig, "mlp needs input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    Require(layer_sizes_[l] >= 1 && layer_sizes_[l + 1] >= 1, ErrorCode::kConfig,
            "mlp layer sizes must be positive");
    offsets_.push_back(total);
    total += (layer_sizes_[l] + 1) * layer_sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::Initialized(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
  Mlp net(std::move(layer_sizes));
  Rng rng = MakeRng({seed, 0x6d6c70ULL});
  for (std::size_t l = 0; l + 1 < net.layer_sizes_.size(); ++l) {
    const std::size_t fan_in = net.layer_sizes_[l];
    const std::size_t fan_out = net.layer_sizes_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    double* w = net.params_.data() + net.offsets_[l];
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) w[i] = u(rng);
  }
  return net;
}

std::size_t Mlp::n_last_layer_params() const {
  const std::size_t l = layer_sizes_.size() - 2;
  return (layer_sizes_[l] + 1) * layer_sizes_[l + 1];
}

void Mlp::Forward(std::span<const double> x, Trace& trace) const {
  if (x.size() != input_size()) Fail(ErrorCode::kContract, "mlp input has wrong dimension");
  const std::size_t n_layers = layer_sizes_.size() - 1;
  trace.activations.resize(n_layers + 1);
  trace.activations[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t fan_in = layer_sizes_[l];
    const std::size_t fan_out = layer_sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + fan_in * fan_out;
    const std::vector<double>& in = trace.activations[l];
    std::vector<double>& out = trace.activations[l + 1];
    out.assign(b, b + fan_out);
    const std::vector<std::size_t> nz = l == 0 ? SparseSupport(in) : std::vector<std::size_t>{};
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double* row = w + o * fan_in;
      double s = 0.0;
      if (nz.empty()) {
        for (std::size_t k = 0; k < fan_in; ++k) s += row[k] * in[k];
      } else {
        for (std::size_t k : nz) s += row[k] * in[k];
      }
      out[o] += s;
    }
    if (l + 1 < n_layers) {
      for (double& v : out) v = std::tanh(v);
    }
  }
}

std::vector<double> Mlp::Forward(std::span<const double> x) const {
  Trace trace;
  Forward(x, trace);
  return std::move(trace.activations.back());
}

void Mlp::Backward(const Trace& trace, std::span<const double> upstream, std::span<double> grad,
                   double scale) const {
  if (upstream.size() != output_size()) {
    Fail(ErrorCode::kContract, "mlp upstream has wrong dimension");
  }
  if (grad.size() != params_.size()) Fail(ErrorCode::kContract, "gradient has wrong size");
  const std::size_t n_layers = layer_sizes_.size() - 1;
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (double& d : delta) d *= scale;
  std::vector<double> prev_delta;
  for (std::size_t l = n_layers; l-- > 0;) {
    const std::size_t fan_in = layer_sizes_[l];
    const std::size_t fan_out = layer_sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + fan_in * fan_out;
    const std::vector<double>& in = trace.activations[l];
    const std::vector<std::size_t> nz = l == 0 ? SparseSupport(in) : std::vector<std::size_t>{};
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* grow = gw + o * fan_in;
      if (nz.empty()) {
        for (std::size_t k = 0; k < fan_in; ++k) grow[k] += d * in[k];
      } else {
        for (std::size_t k : nz) grow[k] += d * in[k];
      }
    }
    if (l == 0) break;
    prev_delta.assign(fan_in, 0.0);
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * fan_in;
      for (std::size_t k = 0; k < fan_in; ++k) prev_delta[k] += row[k] * d;
    }
    for (std::size_t k = 0; k < fan_in; ++k) prev_delta[k] *= 1.0 - in[k] * in[k];
    delta.swap(prev_delta);
  }
}

GradientVector Mlp::ParamGradient(std::span<const double> x,
                                  std::span<const double> upstream) const {
  Trace trace;
  Forward(x, trace);
  GradientVector grad(params_.size(), 0.0);
  Backward(trace, upstream, grad);
  return grad;
}

void WriteMlp(const Mlp& net, std::ostream& out) {
  out << "layer_sizes";
  for (std::size_t s : net.layer_sizes()) out << ',' << s;
  out << '\n';
  std::ostringstream buf;
  buf.precision(17);
  for (double p : net.params()) buf << p << '\n';
  out << buf.str();
}

Mlp ReadMlp(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("layer_sizes", 0) != 0) {
    Fail(ErrorCode::kIo, "mlp blob must start with a layer_sizes header");
  }
  std::vector<std::size_t> sizes;
  std::istringstream header(line.substr(std::string("layer_sizes").size()));
  char comma;
  std::size_t s;
  while (header >> comma >> s) sizes.push_back(s);
  Mlp net(sizes);
  for (double& p : net.mutable_params()) {
    if (!std::getline(in, line)) Fail(ErrorCode::kIo, "mlp blob is truncated");
    p = std::stod(line);
  }
  return net;
}

void AdamStep(std::span<double> params, std::span<const double> grad, AdamState& state,
              const AdamHyper& hyper) {
  if (grad.size() != params.size()) Fail(ErrorCode::kContract, "adam gradient has wrong size");
  for (double g : grad) {
    if (!std::isfinite(g)) Fail(ErrorCode::kNumeric, "non-finite gradient entry in adam step");
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grad[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= hyper.lr * (m_hat / (std::sqrt(v_hat) + hyper.eps) + hyper.weight_decay * params[i]);
  }
}

}  // namespace potec
