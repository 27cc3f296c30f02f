#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cmabgfn/config.hpp"
#include "cmabgfn/protocol.hpp"

namespace cmabgfn {

struct RunSummary {
  std::string config_hash;
  std::string strategy;
  long epochs = 0;
  long rounds = 0;
  long modes = 0;
  double topk_mean = 0.0;
  std::optional<double> topk_similarity;
  double cumulative_regret = 0.0;
  double final_loss = 0.0;
  double log_z = 0.0;
  std::vector<double> final_means;   // per-arm mu_hat at the end
  std::vector<ArmId> final_super_arm;
  ProvenanceCounters counters;
  std::vector<std::pair<long, ElboEstimate>> elbo;
  double wall_seconds = 0.0;
};

// Column header of metrics.csv.
std::string metrics_header();
std::string metrics_row(const Protocol& p, const EpochRecord& rec);

// Executes a full run. With a non-empty `out`, writes the run directory:
// config.yaml, env.txt, metrics.csv, arms.csv, cooccurrence_*.csv,
// summary.json and (optionally) model.txt.
RunSummary run_experiment(
    const RunConfig& cfg, const std::filesystem::path& out = {},
    const std::function<void(const Protocol&, const EpochRecord&)>& on_epoch = {});

std::string summary_json(const RunSummary& s);

enum class SweepAxis { kK, kAlpha, kLambda, kWindow, kBeta, kStrategy, kSeed };
SweepAxis parse_axis(std::string_view name);
std::string_view axis_name(SweepAxis a);

// Returns a copy of `base` with the axis set to `value` (text form).
RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const std::string& value);

struct SweepPoint {
  std::string value;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  RunSummary summary;
};

// Cartesian product values x seeds, one run directory per point, plus
// aggregate.csv with per-value medians across seeds.
std::vector<SweepPoint> run_sweep(const RunConfig& base, SweepAxis axis,
                                  const std::vector<std::string>& values,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::filesystem::path& out);

double median(std::vector<double> xs);

}  // namespace cmabgfn
