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

#include "potec/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "potec/error.hpp"

namespace potec {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kContract: return "contract violation";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kDivision: return "division error";
    case ErrorCode::kUnsupported: return "unsupported mode";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

Rng MakeRng(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(key.size() * 2);
  for (std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

void SoftmaxInPlace(std::span<double> scores, double temperature) {
  if (scores.empty()) return;
  const double inv_t = 1.0 / temperature;
  double top = -INFINITY;
  for (double s : scores) top = std::max(top, s * inv_t);
  double total = 0.0;
  for (double& s : scores) {
    s = std::exp(s * inv_t - top);
    total += s;
  }
  for (double& s : scores) s /= total;
}

std::vector<double> Softmax(std::span<const double> scores, double temperature) {
  std::vector<double> out(scores.begin(), scores.end());
  SoftmaxInPlace(out, temperature);
  return out;
}

bool IsSimplex(std::span<const double> p, double tol) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

std::size_t SampleIndex(std::span<const double> probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  // Rounding left u above the accumulated mass.
  return last_positive;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm2(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

void Axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

std::uint64_t HashBits(std::span<const double> x) {
  // FNV-1a over the raw bytes.
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : x) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace potec
