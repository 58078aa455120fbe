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

// potec: experiment runner.
//
//   potec init [--config FILE]
//   potec run --config FILE [--out DIR] [--seeds N] [--jobs N] [--method LIST]
//   potec summarize [--out DIR] [--results FILE] [--summary FILE]
//   potec verify [--quick] [--seed N]
//   potec gradcheck [--cases N] [--seed N]
//
// The output directory defaults to $POTEC_OUT_DIR, then ./potec_out.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "potec/potec.h"

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitError = 2;

int Report(potec_status status) {
  std::fprintf(stderr, "potec: %s error: %s\n", potec_status_name(status), potec_last_error());
  return kExitError;
}

std::string DefaultOutDir() {
  const char* env = std::getenv("POTEC_OUT_DIR");
  return env && *env ? env : "potec_out";
}

int Init(const std::string& path) {
  char* text = nullptr;
  if (potec_status s = potec_config_template(&text); s != POTEC_OK) return Report(s);
  int code = 0;
  if (path.empty() || path == "-") {
    std::fputs(text, stdout);
  } else {
    std::ofstream out(path);
    if (out << text) {
      std::fprintf(stderr, "wrote %s\n", path.c_str());
    } else {
      std::fprintf(stderr, "potec: cannot write %s\n", path.c_str());
      code = kExitError;
    }
  }
  potec_string_free(text);
  return code;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::size_t seeds = 0;
  std::size_t jobs = 0;
  std::string methods;
  bool quiet = false;
};

int Run(const RunArgs& args) {
  potec_config* config = nullptr;
  if (potec_status s = potec_config_load(args.config.c_str(), &config); s != POTEC_OK) {
    return Report(s);
  }
  potec_status s = POTEC_OK;
  if (args.seeds > 0) s = potec_config_set_seeds(config, args.seeds);
  if (s == POTEC_OK && args.jobs > 0) s = potec_config_set_jobs(config, args.jobs);
  if (s == POTEC_OK && !args.methods.empty()) {
    s = potec_config_set_methods(config, args.methods.c_str());
  }
  std::size_t n_rows = 0, n_failed = 0;
  if (s == POTEC_OK) {
    auto progress = [](const char* line, void*) { std::fprintf(stderr, "%s\n", line); };
    s = potec_sweep_run(config, args.out.c_str(), args.quiet ? nullptr : +progress, nullptr,
                        &n_rows, &n_failed);
  }
  potec_config_destroy(config);
  if (s != POTEC_OK) return Report(s);
  std::printf("%zu rows written to %s/results.csv; %zu failed\n", n_rows, args.out.c_str(),
              n_failed);
  return n_failed > 0 ? kExitFailed : 0;
}

int Summarize(const std::string& results, const std::string& summary, double confidence,
              std::size_t resamples, std::uint64_t seed) {
  std::size_t groups = 0;
  if (potec_status s =
          potec_summarize_file(results.c_str(), summary.c_str(), confidence, resamples, seed, &groups);
      s != POTEC_OK) {
    return Report(s);
  }
  std::printf("%zu groups written to %s\n", groups, summary.c_str());
  return 0;
}

int Verify(bool quick, std::uint64_t seed) {
  std::size_t failed = 0;
  auto print = [](const potec_check* c, void*) {
    std::printf("[%s] %2d %s (%.1fs): %s\n", c->passed ? "PASS" : "FAIL", c->id, c->name,
                c->seconds, c->detail);
    std::fflush(stdout);
  };
  if (potec_status s = potec_verify(quick ? 1 : 0, seed, print, nullptr, &failed); s != POTEC_OK) {
    return Report(s);
  }
  return failed > 0 ? kExitFailed : 0;
}

int Gradcheck(std::size_t cases, std::uint64_t seed) {
  std::size_t checked = 0, failed = 0;
  double worst = 0.0;
  if (potec_status s = potec_gradcheck(cases, seed, &checked, &failed, &worst); s != POTEC_OK) {
    return Report(s);
  }
  std::printf("%zu checks, %zu above 1e-5, max relative error %.3g\n", checked, failed, worst);
  return failed > 0 ? kExitFailed : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage off-policy learning experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", potec_version());

  std::string init_path;
  CLI::App* init = app.add_subcommand("init", "Print or write the commented config template");
  init->add_option("--config", init_path, "File to write (default: stdout)");

  RunArgs run_args;
  run_args.out = DefaultOutDir();
  CLI::App* run = app.add_subcommand("run", "Run a sweep and write results.csv");
  run->add_option("--config", run_args.config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_args.out, "Output directory (default: $POTEC_OUT_DIR or potec_out)");
  run->add_option("--seeds", run_args.seeds, "Override sweep.n_seeds")->check(CLI::PositiveNumber);
  run->add_option("--jobs", run_args.jobs, "Override sweep.jobs")->check(CLI::PositiveNumber);
  run->add_option("--method", run_args.methods, "Comma-separated methods to run");
  run->add_flag("--quiet", run_args.quiet, "No per-cell progress");

  std::string sum_out = DefaultOutDir(), results, summary;
  double confidence = 0.95;
  std::size_t resamples = 10000;
  std::uint64_t sum_seed = 0;
  CLI::App* sum = app.add_subcommand("summarize", "Bootstrap summary of results.csv");
  sum->add_option("--out", sum_out, "Directory holding results.csv");
  sum->add_option("--results", results, "Results file (default: OUT/results.csv)");
  sum->add_option("--summary", summary, "Summary file (default: OUT/summary.csv)");
  sum->add_option("--confidence", confidence, "Interval level")->check(CLI::Range(0.0, 1.0));
  sum->add_option("--resamples", resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
  sum->add_option("--seed", sum_seed, "Bootstrap seed");

  bool quick = false;
  std::uint64_t verify_seed = 7;
  CLI::App* verify = app.add_subcommand("verify", "Check estimators against exact oracles");
  verify->add_flag("--quick", quick, "Fewer Monte-Carlo replications");
  verify->add_option("--seed", verify_seed, "Seed");

  std::size_t cases = 100;
  std::uint64_t grad_seed = 7;
  CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  grad->add_option("--cases", cases, "Random cases")->check(CLI::PositiveNumber);
  grad->add_option("--seed", grad_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  if (*init) return Init(init_path);
  if (*run) return Run(run_args);
  if (*sum) {
    if (results.empty()) results = sum_out + "/results.csv";
    if (summary.empty()) summary = sum_out + "/summary.csv";
    return Summarize(results, summary, confidence, resamples, sum_seed);
  }
  if (*verify) return Verify(quick, verify_seed);
  if (*grad) return Gradcheck(cases, grad_seed);
  return kExitError;
}
