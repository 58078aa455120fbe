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

#include "potec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "potec/error.hpp"
#include "potec/reward_models.hpp"

namespace potec {
namespace {

void RequireDiscrete(const Environment& env) {
  if (!env.is_discrete()) {
    Fail(ErrorCode::kUnsupported, "exact oracles need a discrete-context environment");
  }
}

double SquaredNorm(std::span<const double> v) { return Dot(v, v); }

// Score vectors s(x, k) for every outcome k of the policy.
std::vector<GradientVector> AllScores(const SoftmaxPolicy& policy, std::span<const double> x) {
  std::vector<GradientVector> out;
  out.reserve(policy.n_outcomes());
  for (std::size_t k = 0; k < policy.n_outcomes(); ++k) out.push_back(policy.Score(x, k));
  return out;
}

// Accumulates E|v|^2 and E v for a weighted family of vectors.
struct VectorMoments {
  explicit VectorMoments(std::size_t n) : mean(n, 0.0) {}
  void Add(double weight, std::span<const double> v) {
    second += weight * SquaredNorm(v);
    Axpy(weight, v, mean);
  }
  double VarianceTrace() const { return second - SquaredNorm(mean); }

  std::vector<double> mean;
  double second = 0.0;
};

}  // namespace

Moments EnumerateSingleRecord(const Environment& env, const GradientFn& estimator) {
  RequireDiscrete(env);
  const ContextSet& contexts = env.contexts();
  Moments out;
  std::vector<double> probs(env.n_actions());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto x = contexts[i];
    env.LoggingProbs(x, probs);
    for (std::size_t a = 0; a < env.n_actions(); ++a) {
      if (probs[a] == 0.0) continue;
      LoggedDataset record(env.context_dim(), env.cluster_map());
      record.Add(x, a, 0.0, probs[a]);
      const GradientVector at0 = estimator(record);
      record.set_reward(0, 1.0);
      GradientVector slope = estimator(record);
      for (std::size_t j = 0; j < slope.size(); ++j) slope[j] -= at0[j];
      if (out.mean.empty()) out.mean.assign(at0.size(), 0.0);
      const double q = env.ExpectedReward(x, a);
      const double s2 = env.RewardVariance(x, a);
      const double p = contexts.weights[i] * probs[a];
      for (std::size_t j = 0; j < at0.size(); ++j) out.mean[j] += p * (at0[j] + slope[j] * q);
      out.second_moment_trace += p * (SquaredNorm(at0) + 2.0 * q * Dot(at0, slope) +
                                      (q * q + s2) * SquaredNorm(slope));
    }
  }
  out.variance_trace = out.second_moment_trace - SquaredNorm(out.mean);
  return out;
}

GradientVector PotecBiasClosedForm(const Environment& env, const OverallPolicy& overall,
                                   const RewardRegressor& f) {
  RequireDiscrete(env);
  const ContextSet& contexts = env.contexts();
  const SoftmaxPolicy& first = overall.first();
  const ClusterMap& cm = overall.second()->cluster_map();
  GradientVector grad(first.n_params(), 0.0);
  std::vector<double> pi0(cm.n_actions()), pi(cm.n_actions()), q(cm.n_actions()),
      fv(cm.n_actions()), probs(cm.n_clusters()), coeffs(cm.n_clusters());
  Mlp::Trace trace;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto x = contexts[i];
    env.LoggingProbs(x, pi0);
    overall.Probs(x, pi);
    env.ExpectedRewards(x, q);
    f.PredictAll(x, fv);
    first.Probs(x, trace, probs);
    const std::vector<double> pi0_c = ClusterMarginal(pi0, cm);
    for (std::size_t c = 0; c < cm.n_clusters(); ++c) {
      coeffs[c] = 0.0;
      if (pi0_c[c] == 0.0) continue;
      const auto members = cm.members(c);
      double sum = 0.0;
      for (std::size_t u = 0; u < members.size(); ++u) {
        const std::size_t a = members[u];
        for (std::size_t v = u + 1; v < members.size(); ++v) {
          const std::size_t b = members[v];
          const double pa = pi0[a] / pi0_c[c];
          const double pb = pi0[b] / pi0_c[c];
          if (pa * pb == 0.0) continue;
          const double delta = (q[a] - q[b]) - (fv[a] - fv[b]);
          sum += pa * pb * delta * (pi[b] / pi0[b] - pi[a] / pi0[a]);
        }
      }
      coeffs[c] = contexts.weights[i] * pi0_c[c] * sum;
    }
    // sum_c coeffs[c] s(x,c) in one pass; probs are the score's own softmax
    first.AccumulateWeightedScore(trace, probs, coeffs, grad);
  }
  return grad;
}

VarianceTerms PotecVarianceClosedForm(const Environment& env, const OverallPolicy& overall,
                                      const RewardRegressor& f) {
  RequireDiscrete(env);
  const ContextSet& contexts = env.contexts();
  const SoftmaxPolicy& first = overall.first();
  const ClusterMap& cm = overall.second()->cluster_map();
  VarianceTerms out;
  out.hypothesis_holds = LocalCorrectnessResidual(f, env, contexts, cm) <= 1e-9;
  std::vector<double> pi0(cm.n_actions()), q(cm.n_actions()), fv(cm.n_actions());
  VectorMoments context_term(first.n_params());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto x = contexts[i];
    const double px = contexts.weights[i];
    env.LoggingProbs(x, pi0);
    env.ExpectedRewards(x, q);
    f.PredictAll(x, fv);
    const std::vector<double> pi1 = first.Probs(x);
    const std::vector<double> pi0_c = ClusterMarginal(pi0, cm);
    const std::vector<GradientVector> scores = AllScores(first, x);

    VectorMoments residual(first.n_params());
    std::vector<double> v(first.n_params());
    for (std::size_t a = 0; a < cm.n_actions(); ++a) {
      if (pi0[a] == 0.0) continue;
      const std::size_t c = cm.cluster_of(a);
      const double w = pi1[c] / pi0_c[c];
      const double s2 = SquaredNorm(scores[c]);
      out.noise += px * pi0[a] * w * w * s2 * env.RewardVariance(x, a);
      std::fill(v.begin(), v.end(), 0.0);
      Axpy(w * (q[a] - fv[a]), scores[c], v);
      residual.Add(pi0[a], v);
    }
    out.residual += px * residual.VarianceTrace();

    const std::vector<double> cluster_values = overall.second()->ExpectOverClusters(x, q);
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t c = 0; c < cm.n_clusters(); ++c) Axpy(pi1[c] * cluster_values[c], scores[c], v);
    context_term.Add(px, v);
  }
  out.context = context_term.VarianceTrace();
  return out;
}

VarianceTerms DrVarianceClosedForm(const Environment& env, const SoftmaxPolicy& policy,
                                   const RewardRegressor& q_hat) {
  RequireDiscrete(env);
  Require(policy.space() == OutcomeSpace::kActions, ErrorCode::kContract,
          "the doubly robust variance needs an action policy");
  const ContextSet& contexts = env.contexts();
  const std::size_t n_actions = env.n_actions();
  VarianceTerms out;
  std::vector<double> pi0(n_actions), q(n_actions), qh(n_actions);
  VectorMoments context_term(policy.n_params());
  std::vector<double> v(policy.n_params());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto x = contexts[i];
    const double px = contexts.weights[i];
    env.LoggingProbs(x, pi0);
    env.ExpectedRewards(x, q);
    q_hat.PredictAll(x, qh);
    const std::vector<double> pi = policy.Probs(x);
    const std::vector<GradientVector> scores = AllScores(policy, x);

    VectorMoments residual(policy.n_params());
    for (std::size_t a = 0; a < n_actions; ++a) {
      if (pi0[a] == 0.0) {
        if (pi[a] > 0.0) out.hypothesis_holds = false;
        continue;
      }
      const double w = pi[a] / pi0[a];
      out.noise += px * pi0[a] * w * w * SquaredNorm(scores[a]) * env.RewardVariance(x, a);
      std::fill(v.begin(), v.end(), 0.0);
      Axpy(w * (q[a] - qh[a]), scores[a], v);
      residual.Add(pi0[a], v);
    }
    out.residual += px * residual.VarianceTrace();

    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t a = 0; a < n_actions; ++a) Axpy(pi[a] * q[a], scores[a], v);
    context_term.Add(px, v);
  }
  out.context = context_term.VarianceTrace();
  return out;
}

BiasVarianceReport MonteCarloMoments(const Environment& env, const GradientFn& estimator,
                                     std::size_t n_per_replication, std::size_t n_replications,
                                     std::uint64_t seed, std::span<const double> truth) {
  Require(n_replications >= 2, ErrorCode::kConfig, "Monte-Carlo needs at least two replications");
  BiasVarianceReport report;
  report.n_replications = n_replications;
  report.n_per_replication = n_per_replication;
  std::vector<double> mean, m2;
  for (std::size_t r = 0; r < n_replications; ++r) {
    Rng key = MakeRng({seed, r, 0x6d63ULL});
    const LoggedDataset data = SampleLoggedData(env, n_per_replication, key());
    const GradientVector g = estimator(data);
    if (mean.empty()) {
      mean.assign(g.size(), 0.0);
      m2.assign(g.size(), 0.0);
    }
    // Welford update
    const double k = static_cast<double>(r + 1);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double d = g[j] - mean[j];
      mean[j] += d / k;
      m2[j] += d * (g[j] - mean[j]);
    }
  }
  const double reps = static_cast<double>(n_replications);
  double trace = 0.0;
  report.mc_std_errors.resize(mean.size());
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double var = m2[j] / (reps - 1.0);
    trace += var;
    report.mc_std_errors[j] = std::sqrt(var / reps);
  }
  report.mc_mean = mean;
  report.mc_variance_trace = static_cast<double>(n_per_replication) * trace;
  if (!truth.empty()) {
    Require(truth.size() == mean.size(), ErrorCode::kContract, "truth has the wrong dimension");
    report.mc_bias.resize(mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j) report.mc_bias[j] = mean[j] - truth[j];
  }
  return report;
}

double MaxStandardizedDeviation(const BiasVarianceReport& report,
                                std::span<const double> expected_bias) {
  double worst = 0.0;
  for (std::size_t j = 0; j < report.mc_bias.size(); ++j) {
    const double expected = expected_bias.empty() ? 0.0 : expected_bias[j];
    const double diff = std::abs(report.mc_bias[j] - expected);
    const double se = report.mc_std_errors[j];
    if (se == 0.0) {
      if (diff > 1e-12) return INFINITY;
      continue;
    }
    worst = std::max(worst, diff / se);
  }
  return worst;
}

void WriteReportCsv(const BiasVarianceReport& report, std::ostream& out) {
  out << "component,closed_form_bias,mc_mean,mc_bias,mc_std_error\n";
  out.precision(17);
  for (std::size_t j = 0; j < report.mc_mean.size(); ++j) {
    out << j << ','
        << (j < report.closed_form_bias.size() ? report.closed_form_bias[j] : 0.0) << ','
        << report.mc_mean[j] << ',' << (j < report.mc_bias.size() ? report.mc_bias[j] : 0.0)
        << ',' << report.mc_std_errors[j] << '\n';
  }
}

void WriteReportSummary(const BiasVarianceReport& report, std::ostream& out) {
  out << "replications        " << report.n_replications << '\n'
      << "records/replication " << report.n_per_replication << '\n'
      << "mc n tr(Cov)        " << report.mc_variance_trace << '\n'
      << "closed n tr(Cov)    " << report.closed_form_variance_trace << '\n'
      << "max |bias - closed| / se  " << MaxStandardizedDeviation(report, report.closed_form_bias)
      << '\n';
}

double ClusterValue(const Environment& env, const SecondStageRule& second,
                    std::span<const double> x, std::size_t c) {
  Require(c < second.cluster_map().n_clusters(), ErrorCode::kContract, "cluster index out of range");
  return second.ExpectOverClusters(x, env.ExpectedRewards(x))[c];
}

GradientFn PotecEstimatorFn(const Environment& env, const SoftmaxPolicy& first,
                            SecondStagePtr second, RegressorPtr f, const ClusterMap& cm) {
  return [&env, first, second = std::move(second), f = std::move(f), cm](const LoggedDataset& d) {
    const std::vector<double> props = ClusterPropensities(env, d, cm);
    return PotecGradient(d, first, *second, *f, cm, props);
  };
}

}  // namespace potec
