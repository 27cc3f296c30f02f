#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cmabgfn/bandit.hpp"
#include "cmabgfn/gfn.hpp"
#include "cmabgfn/metrics.hpp"

namespace cmabgfn {

struct ProtocolConfig {
  int total_rounds = 2000;
  int interval = 20;        // gradient rounds per super-arm epoch
  int eval_samples = 64;    // unrestricted samples per epoch
  Strategy strategy = Strategy::kCucbGreedy;
  int k = 4;
  int window = 50;          // H
  double alpha = 0.05;
  double lambda = 0.0;
  int composite_length = 1;
  UcbCount ucb_count = UcbCount::kWindow;
  Feedback feedback = Feedback::kAll;
  std::vector<ArmId> hard_prune_exclude;
  int warmup_cap = 50;
  double norm_eps = 1e-8;
  int elbo_every = 0;       // epochs; 0 disables
  int elbo_samples = 64;
  int topk_capacity = 100;
  std::uint64_t seed = 0;
};

void validate(const ProtocolConfig& cfg, const Environment& env);

struct EpochRecord {
  long epoch = 0;
  long t = 0;               // UCB clock at this epoch's selection
  bool warmup = false;
  SuperArm super_arm;
  int rounds = 0;
  std::vector<double> losses;
  std::map<ArmId, double> arm_rewards;
  double mean_loss = 0.0;
  double log_z = 0.0;
  long modes = 0;
  double topk_mean = 0.0;
  std::optional<double> regret_term;
  double cumulative_regret = 0.0;
  std::optional<ElboEstimate> elbo;
  double wall_seconds = 0.0;
};

// Drives constrained training and unrestricted evaluation epoch by epoch.
// Bandit state only changes between epochs; the epoch loop is sequential and
// the batch kernels inside an epoch may fan out.
class Protocol {
 public:
  Protocol(const Environment& env, std::unique_ptr<Policy> model,
           TrainConfig train, ProtocolConfig cfg);

  // Cold start: unrestricted epochs until every arm has an observation.
  // No-op once warm (and for plain TB). Throws kWarmupStall at the cap.
  void initialize();

  // One epoch; returns false once the round budget is spent.
  std::optional<EpochRecord> step();

  // initialize() then step() until the budget is spent.
  std::vector<EpochRecord> run(
      const std::function<void(const Protocol&, const EpochRecord&)>& on_epoch = {});

  // t for the next selection: completed epochs + 1.
  long round_clock() const { return epochs_done_ + 1; }
  long epochs_done() const { return epochs_done_; }
  long rounds_done() const { return rounds_done_; }
  bool finished() const { return rounds_done_ >= cfg_.total_rounds; }
  bool warm() const;

  const Environment& env() const { return *env_; }
  const Policy& model() const { return *model_; }
  Policy& model() { return *model_; }
  const ArmSpace& arm_space() const { return arms_; }
  const ArmStats& stats() const { return stats_; }
  const CoOccurrence& cooccurrence() const { return w_; }
  const RewardNormalizer& normalizer() const { return normalizer_; }
  const ModeLedger& ledger() const { return ledger_; }
  const TopKTracker& topk() const { return topk_; }
  const RegretTracker& regret() const { return regret_; }
  const ProvenanceCounters& counters() const { return counters_; }
  const ProtocolConfig& config() const { return cfg_; }
  const TrainConfig& train_config() const { return train_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  const SuperArm& current_super_arm() const { return current_; }

  // Applies one unrestricted evaluation batch to the bandit state. Exposed
  // for tests; returns X_i.
  std::map<ArmId, double> absorb_feedback(std::span<const Trajectory> eval,
                                          const SuperArm& active);

 private:
  EpochRecord run_epoch(const SuperArm& s, bool warmup,
                        std::optional<double> regret_term);
  bool uses_bandit() const { return cfg_.strategy != Strategy::kPlainTb; }

  const Environment* env_;
  std::unique_ptr<Policy> model_;
  TrainConfig train_;
  ProtocolConfig cfg_;
  ArmSpace arms_;
  Adam opt_;
  ArmStats stats_;
  CoOccurrence w_;
  RewardNormalizer normalizer_;
  ModeLedger ledger_;
  TopKTracker topk_;
  RegretTracker regret_;
  ProvenanceCounters counters_;
  Rng select_rng_;
  SuperArm current_;
  long epochs_done_ = 0;
  long rounds_done_ = 0;
  long warmup_epochs_ = 0;
  std::vector<EpochRecord> history_;
};

}  // namespace cmabgfn
