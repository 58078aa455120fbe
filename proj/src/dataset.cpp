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

#include "potec/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "potec/error.hpp"

namespace potec {

LoggedDataset::LoggedDataset(std::size_t context_dim, ClusterMap cluster_map)
    : dim_(context_dim), cluster_map_(std::move(cluster_map)) {}

void LoggedDataset::Add(std::span<const double> x, std::size_t action, double reward,
                        double propensity) {
  Require(x.size() == dim_, ErrorCode::kContract, "record context has wrong dimension");
  Require(action < cluster_map_.n_actions(), ErrorCode::kContract, "record action out of range");
  contexts_.insert(contexts_.end(), x.begin(), x.end());
  actions_.push_back(action);
  clusters_.push_back(cluster_map_.cluster_of(action));
  rewards_.push_back(reward);
  propensities_.push_back(propensity);
}

LoggedDataset LoggedDataset::Slice(std::size_t begin, std::size_t end) const {
  LoggedDataset out(dim_, cluster_map_);
  for (std::size_t i = begin; i < end && i < size(); ++i) {
    out.Add(context(i), actions_[i], rewards_[i], propensities_[i]);
  }
  return out;
}

LoggedDataset SampleLoggedData(const Environment& env, std::size_t n, std::uint64_t seed,
                               std::size_t repeats_per_context) {
  Require(n >= 1, ErrorCode::kConfig, "dataset size must be at least 1");
  Require(repeats_per_context >= 1, ErrorCode::kConfig, "repeats_per_context must be at least 1");
  LoggedDataset data(env.context_dim(), env.cluster_map());
  Rng rng = MakeRng({seed, 0x6c6f67ULL});
  std::vector<double> x(env.context_dim());
  std::vector<double> probs(env.n_actions());
  for (std::size_t i = 0; i < n; ++i) {
    if (i % repeats_per_context == 0) {
      env.SampleContext(rng, x);
      env.LoggingProbs(x, probs);
    }
    const std::size_t a = SampleIndex(probs, rng);
    const double r = env.SampleReward(x, a, rng);
    data.Add(x, a, r, probs[a]);
  }
  return data;
}

namespace {

void AppendDouble(std::string& line, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, end);
}

double ParseDouble(std::string_view field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    Fail(ErrorCode::kIo, "malformed number in csv: '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

void WriteDatasetCsv(const LoggedDataset& data, std::ostream& out) {
  std::string line;
  for (std::size_t d = 0; d < data.context_dim(); ++d) line += "ctx_" + std::to_string(d) + ",";
  line += "action,cluster,reward,propensity\n";
  out << line;
  for (std::size_t i = 0; i < data.size(); ++i) {
    line.clear();
    for (double v : data.context(i)) {
      AppendDouble(line, v);
      line += ',';
    }
    line += std::to_string(data.action(i)) + ',' + std::to_string(data.cluster(i)) + ',';
    AppendDouble(line, data.reward(i));
    line += ',';
    AppendDouble(line, data.propensity(i));
    line += '\n';
    out << line;
  }
}

void SaveDatasetCsv(const LoggedDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  WriteDatasetCsv(data, out);
  if (!out) Fail(ErrorCode::kIo, "failed writing " + path);
}

LoggedDataset ReadDatasetCsv(std::istream& in, const ClusterMap& cm) {
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kIo, "dataset csv is empty");
  const auto header = SplitCsv(line);
  Require(header.size() >= 5, ErrorCode::kIo, "dataset csv header is too short");
  const std::size_t dim = header.size() - 4;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[d] != "ctx_" + std::to_string(d)) Fail(ErrorCode::kIo, "unexpected csv header");
  }
  if (header[dim] != "action" || header[dim + 1] != "cluster" || header[dim + 2] != "reward" ||
      header[dim + 3] != "propensity") {
    Fail(ErrorCode::kIo, "unexpected csv header");
  }
  LoggedDataset data(dim, cm);
  std::vector<double> x(dim);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = SplitCsv(line);
    if (fields.size() != dim + 4) Fail(ErrorCode::kIo, "wrong field count on row " + std::to_string(row));
    for (std::size_t d = 0; d < dim; ++d) x[d] = ParseDouble(fields[d]);
    const double action = ParseDouble(fields[dim]);
    const double cluster = ParseDouble(fields[dim + 1]);
    Require(action >= 0 && static_cast<std::size_t>(action) < cm.n_actions(), ErrorCode::kIo,
            "action out of range in dataset csv");
    const auto a = static_cast<std::size_t>(action);
    if (static_cast<std::size_t>(cluster) != cm.cluster_of(a)) {
      Fail(ErrorCode::kIo, "cluster column disagrees with the cluster map on row " +
                               std::to_string(row));
    }
    data.Add(x, a, ParseDouble(fields[dim + 2]), ParseDouble(fields[dim + 3]));
  }
  return data;
}

LoggedDataset LoadDatasetCsv(const std::string& path, const ClusterMap& cm) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  return ReadDatasetCsv(in, cm);
}

std::vector<double> ClusterPropensities(const Environment& env, const LoggedDataset& data,
                                        const ClusterMap& cm) {
  std::vector<double> out(data.size());
  std::vector<double> probs(env.n_actions());
  std::uint64_t last_hash = 0;
  bool have_last = false;
  std::vector<double> marginal;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint64_t h = HashBits(data.context(i));
    // Repeated contexts are stored consecutively.
    if (!have_last || h != last_hash) {
      env.LoggingProbs(data.context(i), probs);
      marginal = ClusterMarginal(probs, cm);
      last_hash = h;
      have_last = true;
    }
    out[i] = marginal[cm.cluster_of(data.action(i))];
  }
  return out;
}

}  // namespace potec
