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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "potec/cluster_map.hpp"
#include "potec/error.hpp"
#include "potec/numeric.hpp"

using namespace potec;

TEST_CASE("keyed streams are reproducible and distinct") {
  Rng a = MakeRng({1, 2, 3});
  Rng b = MakeRng({1, 2, 3});
  Rng c = MakeRng({1, 2, 4});
  Rng d = MakeRng({1, 23});
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
}

TEST_CASE("softmax matches hand values") {
  const std::vector<double> s{0.0, std::log(3.0)};
  const auto p = Softmax(s);
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-15));
  // temperature 2 halves the scores
  const std::vector<double> s2{0.0, 2 * std::log(3.0)};
  const auto p2 = Softmax(s2, 2.0);
  CHECK(p2[1] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("softmax is stable for large scores") {
  const std::vector<double> s{1000.0, 1000.0, -1000.0};
  const auto p = Softmax(s);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[2] == 0.0);
  CHECK(IsSimplex(p));
}

TEST_CASE("simplex check") {
  CHECK(IsSimplex(std::vector<double>{0.2, 0.8}));
  CHECK_FALSE(IsSimplex(std::vector<double>{0.2, 0.7}));
  CHECK_FALSE(IsSimplex(std::vector<double>{-0.1, 1.1}));
}

TEST_CASE("sampling follows the probabilities") {
  Rng rng = MakeRng({5});
  const std::vector<double> p{0.1, 0.0, 0.6, 0.3};
  std::vector<int> counts(4, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[SampleIndex(p, rng)];
  CHECK(counts[1] == 0);
  for (std::size_t k = 0; k < 4; ++k) {
    const double se = std::sqrt(p[k] * (1 - p[k]) / n);
    CHECK(std::abs(counts[k] / double(n) - p[k]) <= 4 * se + 1e-12);
  }
}

TEST_CASE("vector helpers") {
  const std::vector<double> a{1, 2, 2};
  std::vector<double> y{1, 1, 1};
  CHECK(Dot(a, a) == 9.0);
  CHECK(Norm2(a) == 3.0);
  Axpy(2.0, a, y);
  CHECK(y == std::vector<double>{3, 5, 5});
}

TEST_CASE("bit hashes separate nearby vectors") {
  const std::vector<double> a{0.5, 1.0};
  const std::vector<double> b{0.5, std::nextafter(1.0, 2.0)};
  CHECK(HashBits(a) == HashBits(std::vector<double>{0.5, 1.0}));
  CHECK(HashBits(a) != HashBits(b));
}

TEST_CASE("cluster maps") {
  const ClusterMap cm({1, 0, 1, 2}, 3);
  CHECK(cm.n_actions() == 4);
  CHECK(cm.n_clusters() == 3);
  CHECK(cm.members(1).size() == 2);
  CHECK(cm.members(1)[0] == 0);
  CHECK(cm.members(1)[1] == 2);
  CHECK_THROWS_AS(ClusterMap({0, 0, 2}, 3), Error);  // cluster 1 empty
  CHECK_THROWS_AS(ClusterMap({0, 3}, 3), Error);
  CHECK(ClusterMap::Singletons(3).n_clusters() == 3);
  CHECK(ClusterMap::OneCluster(3).members(0).size() == 3);

  const auto m = ClusterMarginal(std::vector<double>{0.1, 0.2, 0.3, 0.4}, cm);
  CHECK(m[0] == doctest::Approx(0.2));
  CHECK(m[1] == doctest::Approx(0.4));
  CHECK(m[2] == doctest::Approx(0.4));
}

TEST_CASE("cluster perturbation keeps every cluster populated") {
  const ClusterMap cm({0, 0, 0, 1, 1, 1, 2, 2, 2, 3}, 4);
  CHECK(PerturbClusters(cm, 0.0, 1) == cm);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ClusterMap p = PerturbClusters(cm, 0.5, seed);
    CHECK(p.n_clusters() == 4);
    for (std::size_t c = 0; c < 4; ++c) CHECK(p.members(c).size() >= 1);
  }
  // every moved action lands in a different cluster
  const ClusterMap all = PerturbClusters(cm, 1.0, 3);
  for (std::size_t a = 0; a < cm.n_actions(); ++a) CHECK(all.cluster_of(a) != cm.cluster_of(a));
  CHECK(PerturbClusters(cm, 0.3, 9) == PerturbClusters(cm, 0.3, 9));
}

TEST_CASE("perturbation noise ratio is respected on average") {
  std::vector<std::size_t> assignment(2000);
  for (std::size_t a = 0; a < assignment.size(); ++a) assignment[a] = a % 20;
  const ClusterMap cm(assignment, 20);
  const ClusterMap p = PerturbClusters(cm, 0.3, 11);
  std::size_t moved = 0;
  for (std::size_t a = 0; a < cm.n_actions(); ++a) moved += p.cluster_of(a) != cm.cluster_of(a);
  const double se = std::sqrt(0.3 * 0.7 / 2000.0);
  CHECK(std::abs(moved / 2000.0 - 0.3) <= 4 * se);
}
