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

#ifndef POTEC_NUMERIC_HPP
#define POTEC_NUMERIC_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace potec {

using Rng = std::mt19937_64;

// Independent stream keyed by a tuple of integers (master seed, cell, ...).
Rng MakeRng(std::initializer_list<std::uint64_t> key);

// Numerically stable softmax of scores / temperature.
std::vector<double> Softmax(std::span<const double> scores, double temperature = 1.0);
void SoftmaxInPlace(std::span<double> scores, double temperature = 1.0);

// True when p is nonnegative and sums to one within tol.
bool IsSimplex(std::span<const double> p, double tol = 1e-9);

// Draws an index from a probability vector by inverse CDF.
std::size_t SampleIndex(std::span<const double> probs, Rng& rng);

double Dot(std::span<const double> a, std::span<const double> b);
double Norm2(std::span<const double> a);
// y += alpha * x
void Axpy(double alpha, std::span<const double> x, std::span<double> y);

// Stable hash of a real vector's bit pattern, used to key exact context matches.
std::uint64_t HashBits(std::span<const double> x);

}  // namespace potec

#endif  // POTEC_NUMERIC_HPP
