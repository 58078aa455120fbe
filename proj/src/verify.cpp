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

#include "potec/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "potec/cluster_map.hpp"
#include "potec/dataset.hpp"
#include "potec/error.hpp"
#include "potec/estimators.hpp"
#include "potec/mlp.hpp"
#include "potec/numeric.hpp"
#include "potec/oracle.hpp"
#include "potec/policy.hpp"
#include "potec/regressor.hpp"
#include "potec/reward_models.hpp"

namespace potec {
namespace {

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

double MaxAbsDiff(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kContract, "gradient sizes differ");
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

double RelDiff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double NormDiff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    d += (a[j] - b[j]) * (a[j] - b[j]);
    na += a[j] * a[j];
    nb += b[j] * b[j];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(d) / scale;
}

template <typename Fn>
CheckResult Timed(int id, const char* name, Fn&& body) {
  CheckResult result;
  result.id = id;
  result.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(result);
  } catch (const std::exception& e) {
    result.passed = false;
    result.detail = std::string("error: ") + e.what();
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RegressorPtr Zero(std::size_t n_actions) {
  return std::make_shared<FunctionRegressor>(n_actions,
                                             [](std::span<const double>, std::size_t) { return 0.0; });
}

RegressorPtr Table(std::vector<double> values) {
  const std::size_t n = values.size();
  return std::make_shared<FunctionRegressor>(
      n, [values = std::move(values)](std::span<const double>, std::size_t a) { return values[a]; });
}

std::uint64_t Sub(std::uint64_t seed, std::uint64_t tag) { return MakeRng({seed, tag})(); }

// First-stage policy, second stage and model for the two-stage oracle checks.
struct TwoStageSetup {
  std::shared_ptr<SyntheticEnvironment> env;
  RegressorPtr f;
  SoftmaxPolicy first;
  SecondStagePtr second;
};

TwoStageSetup MakeTwoStage(std::uint64_t seed, double sigma_a) {
  TwoStageSetup s;
  s.env = OracleEnvironment(Sub(seed, 1));
  s.f = MakeNoisyRegressionModel(s.env, 1.0, sigma_a, Sub(seed, 2));
  s.first = SoftmaxPolicy::Initialized(s.env->context_dim(), {}, s.env->cluster_map().n_clusters(),
                                       OutcomeSpace::kClusters, Sub(seed, 3));
  s.second = std::make_shared<SecondStagePolicy>(s.f, s.env->cluster_map());
  return s;
}

}  // namespace

VerifyOptions QuickVerifyOptions() {
  VerifyOptions o;
  o.mc_replications = 10000;
  o.ordering_replications = 200;
  o.bootstrap_resamples = 500;
  return o;
}

std::shared_ptr<SyntheticEnvironment> OracleEnvironment(std::uint64_t seed) {
  EnvConfig config;
  config.n_actions = 20;
  config.n_clusters = 4;
  config.context_dim = 3;
  config.action_feature_dim = 3;
  config.context_mode = ContextMode::kDiscrete;
  config.n_contexts = 5;
  return BuildSyntheticEnv(config, seed);
}

// ---------------------------------------------------------------------------

CheckResult CheckReductionIdentities(std::uint64_t seed, std::size_t n_instances) {
  return Timed(1, "reduction identities", [&](CheckResult& out) {
    double worst = 0.0;
    Rng rng = MakeRng({seed, 0x726564});
    for (std::size_t t = 0; t < n_instances; ++t) {
      EnvConfig config;
      config.n_actions = 3 + rng() % 18;
      config.n_clusters = 1 + rng() % config.n_actions;
      config.context_dim = 1 + rng() % 4;
      config.action_feature_dim = 2;
      config.context_mode = (t % 2 == 0) ? ContextMode::kDiscrete : ContextMode::kContinuous;
      config.n_contexts = 4;
      auto env = BuildSyntheticEnv(config, rng());
      const LoggedDataset data = SampleLoggedData(*env, 40, rng(), 2);
      const std::vector<std::size_t> hidden =
          (t % 3 == 0) ? std::vector<std::size_t>{} : std::vector<std::size_t>{4};
      const SoftmaxPolicy policy = SoftmaxPolicy::Initialized(
          config.context_dim, hidden, config.n_actions, OutcomeSpace::kActions, rng());
      RegressorPtr q_hat = MakeNoisyRegressionModel(env, 1.0, 1.0, rng());

      const GradientVector ips = IpsGradient(data, policy);
      worst = std::max(worst, MaxAbsDiff(DrGradient(data, policy, *Zero(config.n_actions)), ips));
      worst = std::max(
          worst, MaxAbsDiff(SipsGradient(data, policy, ActionSelector::TopFraction(q_hat, 1.0)), ips));

      const GradientVector dr = DrGradient(data, policy, *q_hat);
      const ClusterMap singletons = ClusterMap::Singletons(config.n_actions);
      const std::vector<double> props = ClusterPropensities(*env, data, singletons);
      const SoftmaxPolicy first(policy.net(), OutcomeSpace::kClusters, policy.temperature());
      const SecondStagePolicy second(q_hat, singletons);
      worst = std::max(worst,
                       MaxAbsDiff(PotecGradient(data, first, second, *q_hat, singletons, props), dr));
      worst = std::max(
          worst, MaxAbsDiff(PotecOneStageGradient(data, policy, *q_hat, singletons, props), dr));
    }
    out.passed = worst <= 1e-12;
    out.detail = "max elementwise difference " + Fmt("%.3g", worst) + " over " +
                 std::to_string(n_instances) + " instances (limit 1e-12)";
  });
}

GradcheckReport RunGradcheck(std::size_t n_cases, std::uint64_t seed) {
  GradcheckReport report;
  Rng rng = MakeRng({seed, 0x67726164});
  std::normal_distribution<double> normal;
  constexpr double kStep = 1e-6;
  auto record = [&](double rel) {
    ++report.n_cases;
    report.max_rel_error = std::max(report.max_rel_error, rel);
    if (!(rel <= 1e-5)) ++report.n_failed;
  };
  for (std::size_t t = 0; t < n_cases; ++t) {
    std::vector<std::size_t> sizes{1 + rng() % 5};
    const std::size_t depth = rng() % 3;
    for (std::size_t l = 0; l < depth; ++l) sizes.push_back(1 + rng() % 6);
    sizes.push_back(1 + rng() % 5);
    std::vector<double> x(sizes.front());
    for (double& v : x) v = normal(rng);

    // parameter gradient of upstream . net(x)
    Mlp net = Mlp::Initialized(sizes, rng());
    std::vector<double> upstream(sizes.back());
    for (double& v : upstream) v = normal(rng);
    const GradientVector g = net.ParamGradient(x, upstream);
    GradientVector fd(net.n_params());
    for (std::size_t j = 0; j < net.n_params(); ++j) {
      double& p = net.mutable_params()[j];
      const double saved = p;
      p = saved + kStep;
      const double up = Dot(upstream, net.Forward(x));
      p = saved - kStep;
      const double down = Dot(upstream, net.Forward(x));
      p = saved;
      fd[j] = (up - down) / (2 * kStep);
    }
    record(NormDiff(g, fd));

    // score of a softmax policy
    const double temperature = 0.5 + 1.5 * std::uniform_real_distribution<double>()(rng);
    SoftmaxPolicy policy(Mlp::Initialized(sizes, rng()), OutcomeSpace::kActions, temperature);
    const std::size_t k = rng() % sizes.back();
    const GradientVector s = policy.Score(x, k);
    GradientVector fd_s(policy.n_params());
    for (std::size_t j = 0; j < policy.n_params(); ++j) {
      double& p = policy.mutable_net().mutable_params()[j];
      const double saved = p;
      p = saved + kStep;
      const double up = std::log(policy.Probs(x)[k]);
      p = saved - kStep;
      const double down = std::log(policy.Probs(x)[k]);
      p = saved;
      fd_s[j] = (up - down) / (2 * kStep);
    }
    record(NormDiff(s, fd_s));
  }
  return report;
}

CheckResult CheckGradients(std::uint64_t seed, std::size_t n_cases) {
  return Timed(2, "gradient correctness", [&](CheckResult& out) {
    const GradcheckReport r = RunGradcheck(n_cases, seed);
    out.passed = r.n_failed == 0;
    out.detail = std::to_string(r.n_cases) + " cases, " + std::to_string(r.n_failed) +
                 " above 1e-5, max relative error " + Fmt("%.3g", r.max_rel_error);
  });
}

CheckResult CheckUnbiasedness(const VerifyOptions& o) {
  return Timed(3, "unbiasedness under local correctness", [&](CheckResult& out) {
    const TwoStageSetup s = MakeTwoStage(Sub(o.seed, 3), 0.0);
    const ClusterMap& cm = s.env->cluster_map();
    const GradientFn fn = PotecEstimatorFn(*s.env, s.first, s.second, s.f, cm);
    const GradientVector truth = TrueFirstStageGradient(*s.env, s.first, *s.second, s.env->contexts());
    const Moments m = EnumerateSingleRecord(*s.env, fn);
    const double exact_gap = MaxAbsDiff(m.mean, truth);
    const BiasVarianceReport report =
        MonteCarloMoments(*s.env, fn, o.mc_records, o.mc_replications, Sub(o.seed, 30), truth);
    const std::vector<double> zero(truth.size(), 0.0);
    const double z = MaxStandardizedDeviation(report, zero);
    out.passed = exact_gap <= 1e-10 && z <= 3.0;
    out.detail = "exact |E g - truth| " + Fmt("%.3g", exact_gap) + " (limit 1e-10); MC max |z| " +
                 Fmt("%.3f", z) + " over " + std::to_string(truth.size()) + " components (limit 3)";
  });
}

CheckResult CheckBiasOracle(const VerifyOptions& o) {
  return Timed(4, "closed-form bias", [&](CheckResult& out) {
    const TwoStageSetup s = MakeTwoStage(Sub(o.seed, 4), 0.5);
    const ClusterMap& cm = s.env->cluster_map();
    const OverallPolicy overall(s.first, s.second);
    const GradientFn fn = PotecEstimatorFn(*s.env, s.first, s.second, s.f, cm);
    const GradientVector truth = TrueFirstStageGradient(*s.env, s.first, *s.second, s.env->contexts());
    const GradientVector closed = PotecBiasClosedForm(*s.env, overall, *s.f);
    const Moments m = EnumerateSingleRecord(*s.env, fn);
    GradientVector exact_bias(truth.size());
    for (std::size_t j = 0; j < truth.size(); ++j) exact_bias[j] = m.mean[j] - truth[j];
    const double gap = MaxAbsDiff(closed, exact_bias);
    const double size = Norm2(closed);
    const BiasVarianceReport report =
        MonteCarloMoments(*s.env, fn, o.mc_records, o.mc_replications, Sub(o.seed, 40), truth);
    const double z = MaxStandardizedDeviation(report, closed);
    out.passed = gap <= 1e-10 && z <= 3.0 && size > 1e-6;
    out.detail = "|bias| " + Fmt("%.4g", size) + "; closed vs exact " + Fmt("%.3g", gap) +
                 " (limit 1e-10); MC max |z| " + Fmt("%.3f", z) + " (limit 3)";
  });
}

CheckResult CheckVarianceOracles(const VerifyOptions& o) {
  return Timed(5, "closed-form variance", [&](CheckResult& out) {
    const TwoStageSetup s = MakeTwoStage(Sub(o.seed, 5), 0.0);
    const ClusterMap& cm = s.env->cluster_map();
    const Environment& env = *s.env;
    const SoftmaxPolicy policy = SoftmaxPolicy::Initialized(
        env.context_dim(), {}, env.n_actions(), OutcomeSpace::kActions, Sub(o.seed, 51));
    RegressorPtr q_hat = MakeNoisyRegressionModel(s.env, 1.0, 0.5, Sub(o.seed, 52));
    RegressorPtr zero = Zero(env.n_actions());

    struct Case {
      const char* name;
      double closed;
      bool hypothesis;
      GradientFn fn;
    };
    const VarianceTerms potec = PotecVarianceClosedForm(env, OverallPolicy(s.first, s.second), *s.f);
    const VarianceTerms dr = DrVarianceClosedForm(env, policy, *q_hat);
    const VarianceTerms ips = DrVarianceClosedForm(env, policy, *zero);
    const std::vector<Case> cases{
        {"potec", potec.total(), potec.hypothesis_holds,
         PotecEstimatorFn(env, s.first, s.second, s.f, cm)},
        {"dr", dr.total(), dr.hypothesis_holds,
         [&](const LoggedDataset& d) { return DrGradient(d, policy, *q_hat); }},
        {"ips", ips.total(), ips.hypothesis_holds,
         [&](const LoggedDataset& d) { return IpsGradient(d, policy); }},
    };
    out.passed = true;
    std::uint64_t tag = 50;
    for (const Case& c : cases) {
      const Moments m = EnumerateSingleRecord(env, c.fn);
      const double exact_gap = RelDiff(c.closed, m.variance_trace);
      const BiasVarianceReport report =
          MonteCarloMoments(env, c.fn, o.mc_records, o.mc_replications, Sub(o.seed, ++tag));
      const double rel = std::abs(report.mc_variance_trace - c.closed) / c.closed;
      const bool ok = c.hypothesis && exact_gap <= 1e-10 && rel <= 0.05;
      out.passed = out.passed && ok;
      if (!out.detail.empty()) out.detail += "; ";
      out.detail += std::string(c.name) + ": closed " + Fmt("%.5g", c.closed) + ", exact gap " +
                    Fmt("%.2g", exact_gap) + ", MC " + Fmt("%.5g", report.mc_variance_trace) +
                    " (" + Fmt("%.2f", 100 * rel) + "%)";
    }
  });
}

CheckResult CheckFixtures() {
  return Timed(6, "fixture tables", [&](CheckResult& out) {
    ContextSet contexts;
    contexts.dim = 1;
    contexts.values = {0.0};
    contexts.weights = {1.0};
    const ClusterMap cm({0, 0, 1, 1}, 2);
    auto make_env = [&](std::vector<double> q) {
      return std::make_shared<TabularEnvironment>(contexts, cm, std::move(q),
                                                  std::vector<double>(4, 0.25),
                                                  std::vector<double>(4, 1.0));
    };
    const auto env1 = make_env({4, 1, 3, 2});
    out.passed = true;
    const std::vector<std::vector<double>> models{{3, 0, 1, 0}, {50, 47, -30, -31}, {4, 1, 3, 2}};
    for (std::size_t k = 0; k < models.size(); ++k) {
      RegressorPtr f = Table(models[k]);
      const double residual = LocalCorrectnessResidual(*f, *env1, contexts, cm);
      const std::vector<std::size_t> choices = SecondStagePolicy(f, cm).Choices(contexts[0]);
      const bool ok = residual == 0.0 && choices == std::vector<std::size_t>{0, 2};
      out.passed = out.passed && ok;
      out.detail += "f" + std::to_string(k + 1) + ": residual " + Fmt("%g", residual) +
                    ", argmax (a" + std::to_string(choices[0]) + ", a" +
                    std::to_string(choices[1]) + "); ";
    }
    const auto env2 = make_env({4, 2, 5, 0});
    const SecondStagePolicy optimal(ExactModel(env2), cm);
    const UniformSecondStage uniform(cm);
    const double o0 = ClusterValue(*env2, optimal, contexts[0], 0);
    const double o1 = ClusterValue(*env2, optimal, contexts[0], 1);
    const double u0 = ClusterValue(*env2, uniform, contexts[0], 0);
    const double u1 = ClusterValue(*env2, uniform, contexts[0], 1);
    out.passed = out.passed && o0 == 4.0 && o1 == 5.0 && u0 == 3.0 && u1 == 2.5;
    out.detail += "cluster values optimal (" + Fmt("%g", o0) + ", " + Fmt("%g", o1) +
                  "), uniform (" + Fmt("%g", u0) + ", " + Fmt("%g", u1) + ")";
  });
}

CheckResult CheckVarianceOrdering(const VerifyOptions& o) {
  return Timed(7, "variance ordering", [&](CheckResult& out) {
    EnvConfig config;
    config.n_actions = 500;
    config.n_clusters = 10;
    config.reward_shift = 3.0;
    auto env = BuildSyntheticEnv(config, Sub(o.seed, 70));
    const ClusterMap& cm = env->cluster_map();
    RegressorPtr f = MakeNoisyRegressionModel(env, 0.5, 0.0, Sub(o.seed, 71));
    const SoftmaxPolicy first = SoftmaxPolicy::Initialized(
        config.context_dim, {}, config.n_clusters, OutcomeSpace::kClusters, Sub(o.seed, 72));
    const SecondStagePolicy second(f, cm);

    // All three estimate the gradient of V(pi) for pi = (first, argmax second)
    // with respect to the first-stage parameters. IPS and DR weight by
    // pi(a|x) / pi_0(a|x); POTEC by pi_1(c|x) / pi_0(c|x).
    const std::size_t n_params = first.n_params();
    const std::size_t reps = o.ordering_replications;
    const std::size_t nc = cm.n_clusters();
    std::vector<std::vector<double>> grads(3, std::vector<double>(reps * n_params, 0.0));
    std::vector<double> probs(nc), f_all(env->n_actions()), coeff(nc);
    for (std::size_t r = 0; r < reps; ++r) {
      const LoggedDataset data =
          SampleLoggedData(*env, o.ordering_records, MakeRng({o.seed, r, 0x6f7264})());
      const std::vector<double> cp = ClusterPropensities(*env, data, cm);
      std::span<double> g_ips(grads[0].data() + r * n_params, n_params);
      std::span<double> g_dr(grads[1].data() + r * n_params, n_params);
      std::span<double> g_potec(grads[2].data() + r * n_params, n_params);
      const double scale = 1.0 / static_cast<double>(data.size());
      Mlp::Trace trace;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.context(i);
        const std::size_t a = data.action(i);
        const std::size_t c = cm.cluster_of(a);
        first.Probs(x, trace, probs);
        f->PredictAll(x, f_all);
        const std::vector<std::size_t> choice = second.Choices(x);
        const double pi_a = choice[c] == a ? probs[c] : 0.0;
        const double w_action = pi_a / data.propensity(i);
        const double w_cluster = probs[c] / cp[i];
        const double r_i = data.reward(i);

        std::fill(coeff.begin(), coeff.end(), 0.0);
        coeff[c] = w_action * r_i;
        first.AccumulateWeightedScore(trace, probs, coeff, g_ips, scale);

        for (std::size_t k = 0; k < nc; ++k) coeff[k] = probs[k] * f_all[choice[k]];
        std::vector<double> model = coeff;
        coeff[c] += w_action * (r_i - f_all[a]);
        first.AccumulateWeightedScore(trace, probs, coeff, g_dr, scale);
        model[c] += w_cluster * (r_i - f_all[a]);
        first.AccumulateWeightedScore(trace, probs, model, g_potec, scale);
      }
    }
    const double n = static_cast<double>(o.ordering_records);
    auto trace_cov = [&](const std::vector<double>& g, const std::vector<std::size_t>& idx) {
      double total = 0.0;
      const double m = static_cast<double>(idx.size());
      for (std::size_t j = 0; j < n_params; ++j) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t r : idx) {
          const double v = g[r * n_params + j];
          s += v;
          s2 += v * v;
        }
        const double mean = s / m;
        total += (s2 - m * mean * mean) / (m - 1.0);
      }
      return n * total;
    };
    std::vector<std::size_t> all(reps);
    for (std::size_t r = 0; r < reps; ++r) all[r] = r;
    const double v_ips = trace_cov(grads[0], all);
    const double v_dr = trace_cov(grads[1], all);
    const double v_potec = trace_cov(grads[2], all);

    // paired bootstrap over replications
    Rng rng = MakeRng({o.seed, 0x626f6f74});
    std::uniform_int_distribution<std::size_t> pick(0, reps - 1);
    double s1 = 0, s1q = 0, s2 = 0, s2q = 0;
    std::vector<std::size_t> idx(reps);
    for (std::size_t b = 0; b < o.bootstrap_resamples; ++b) {
      for (std::size_t& k : idx) k = pick(rng);
      const double d1 = trace_cov(grads[0], idx) - trace_cov(grads[1], idx);
      const double d2 = trace_cov(grads[1], idx) - trace_cov(grads[2], idx);
      s1 += d1;
      s1q += d1 * d1;
      s2 += d2;
      s2q += d2 * d2;
    }
    const double bn = static_cast<double>(o.bootstrap_resamples);
    const double se1 = std::sqrt(std::max(0.0, (s1q - s1 * s1 / bn) / (bn - 1)));
    const double se2 = std::sqrt(std::max(0.0, (s2q - s2 * s2 / bn) / (bn - 1)));
    const double gap1 = v_ips - v_dr;
    const double gap2 = v_dr - v_potec;
    out.passed = gap1 >= 2 * se1 && gap2 >= 2 * se2 && gap1 > 0 && gap2 > 0;
    out.detail = "n tr Cov: ips " + Fmt("%.5g", v_ips) + ", dr " + Fmt("%.5g", v_dr) +
                 ", potec " + Fmt("%.5g", v_potec) + "; gaps " + Fmt("%.4g", gap1) + " (se " +
                 Fmt("%.3g", se1) + "), " + Fmt("%.4g", gap2) + " (se " + Fmt("%.3g", se2) + ")";
  });
}

CheckResult CheckSupportDeficiency(const VerifyOptions& o) {
  return Timed(11, "support deficiency", [&](CheckResult& out) {
    auto full = OracleEnvironment(Sub(o.seed, 110));
    EnvironmentPtr env = RestrictSupport(*full, full->n_actions() / 5, Sub(o.seed, 111));
    const ClusterMap& cm = env->cluster_map();
    const ContextSet& contexts = env->contexts();

    const SoftmaxPolicy policy = SoftmaxPolicy::Initialized(
        env->context_dim(), {}, env->n_actions(), OutcomeSpace::kActions, Sub(o.seed, 112));
    const GradientVector ips_truth = TrueActionGradient(*env, policy, contexts);
    const GradientFn ips_fn = [&](const LoggedDataset& d) { return IpsGradient(d, policy); };
    const BiasVarianceReport ips = MonteCarloMoments(*env, ips_fn, o.mc_records,
                                                     o.mc_replications, Sub(o.seed, 113), ips_truth);

    RegressorPtr f = MakeNoisyRegressionModel(env, 1.0, 0.0, Sub(o.seed, 114));
    const SoftmaxPolicy first = SoftmaxPolicy::Initialized(
        env->context_dim(), {}, cm.n_clusters(), OutcomeSpace::kClusters, Sub(o.seed, 115));
    SecondStagePtr second = std::make_shared<SecondStagePolicy>(f, cm);
    const GradientVector potec_truth = TrueFirstStageGradient(*env, first, *second, contexts);
    const BiasVarianceReport potec =
        MonteCarloMoments(*env, PotecEstimatorFn(*env, first, second, f, cm), o.mc_records,
                          o.mc_replications, Sub(o.seed, 116), potec_truth);

    const double z_ips = MaxStandardizedDeviation(ips, std::vector<double>(ips_truth.size(), 0.0));
    const double z_potec =
        MaxStandardizedDeviation(potec, std::vector<double>(potec_truth.size(), 0.0));
    out.passed = z_ips > 3.0 && z_potec <= 3.0;
    out.detail = std::to_string(full->n_actions() / 5) + " unsupported actions; ips max |z| " +
                 Fmt("%.2f", z_ips) + " (needs > 3), potec max |z| " + Fmt("%.3f", z_potec) +
                 " (limit 3)";
  });
}

std::vector<CheckResult> RunOracleSuite(const VerifyOptions& options,
                                        const CheckCallback& on_result) {
  std::vector<CheckResult> results;
  auto add = [&](CheckResult r) {
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  };
  add(CheckReductionIdentities(options.seed));
  add(CheckGradients(options.seed));
  add(CheckUnbiasedness(options));
  add(CheckBiasOracle(options));
  add(CheckVarianceOracles(options));
  add(CheckFixtures());
  add(CheckVarianceOrdering(options));
  add(CheckSupportDeficiency(options));
  return results;
}

}  // namespace potec
