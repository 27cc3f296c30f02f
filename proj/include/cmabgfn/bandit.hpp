#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmabgfn/env.hpp"
#include "cmabgfn/rng.hpp"

namespace cmabgfn {

enum class Strategy {
  kCucbGreedy,
  kRandom,
  kProportional,
  kHardPrune,
  kCts,
  kPlainTb,
};

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

// What the UCB bonus divides by: cumulative pushes or current window size.
enum class UcbCount { kWindow, kCumulative };

// Which arms receive feedback from an evaluation batch: every arm present
// in it, or only members of the active super arm.
enum class Feedback { kAll, kSelected };

// Global running min-max normalisation into [0, 1].
class RewardNormalizer {
 public:
  explicit RewardNormalizer(double eps_norm = 1e-8) : eps_(eps_norm) {}

  void observe(double reward);
  bool ready() const { return seen_; }
  double min() const { return min_; }
  double max() const { return max_; }
  double eps() const { return eps_; }

  // clip((R - R_min) / (R_max - R_min + eps), 0, 1). Needs ready().
  double normalize(double reward) const;

 private:
  double eps_;
  bool seen_ = false;
  double min_ = 0.0;
  double max_ = 0.0;
};

// FIFO window of recent arm rewards for one arm.
struct ArmWindow {
  std::deque<double> buffer;
  long pushes = 0;
  double mean = 0.0;

  // Throws kOutOfRange unless 0 <= x <= 1.
  void push(double x, int window);
};

class ArmStats {
 public:
  ArmStats(int num_arms, int window, UcbCount count = UcbCount::kWindow);

  int num_arms() const { return static_cast<int>(arms_.size()); }
  int window() const { return window_; }
  UcbCount ucb_count_mode() const { return count_; }

  void push(ArmId arm, double x) { arms_.at(arm).push(x, window_); }
  const ArmWindow& arm(ArmId a) const { return arms_.at(a); }
  double mean(ArmId a) const { return arms_.at(a).mean; }
  long pushes(ArmId a) const { return arms_.at(a).pushes; }
  // T_i used by the bonus.
  long ucb_count(ArmId a) const;
  bool warm(ArmId a) const { return arms_.at(a).pushes > 0; }
  std::vector<ArmId> cold_arms() const;
  std::vector<double> means() const;

  double ucb(ArmId a, long t) const;

 private:
  int window_;
  UcbCount count_;
  std::vector<ArmWindow> arms_;
};

// mu_hat + sqrt(3 ln t / (2 T)); throws kColdArm when T = 0.
double ucb_value(double mean, long count, long t);

// Reward-weighted co-occurrence EMA over arm pairs.
class CoOccurrence {
 public:
  explicit CoOccurrence(int num_arms);

  int size() const { return n_; }
  double operator()(ArmId i, ArmId j) const {
    return w_[static_cast<std::size_t>(i) * n_ + j];
  }
  void set(ArmId i, ArmId j, double v);

  // Every unordered pair decays by (1 - alpha); pairs present together in
  // the candidate additionally gain alpha * r.
  void update(std::span<const ArmId> present, double r, double alpha);

  std::string dump() const;

 private:
  int n_;
  std::vector<double> w_;
};

// X_i: mean normalised reward over candidates that contain arm i at least
// once. Arms contained in no candidate are absent.
std::map<ArmId, double> arm_rewards_from_batch(
    std::span<const std::vector<ArmId>> candidate_arms,
    std::span<const double> normalized_rewards);

struct SelectionConfig {
  Strategy strategy = Strategy::kCucbGreedy;
  int k = 4;
  double lambda = 0.0;
  // Arms removed permanently by the hard-prune strategy. Empty means the
  // highest N - K arm ids.
  std::vector<ArmId> hard_prune_exclude;
};

SuperArm select_super_arm(const ArmSpace& space, const ArmStats& stats,
                          const CoOccurrence& w, const SelectionConfig& cfg,
                          long t, Rng& rng);

// Thompson-style alternative: per-arm Beta posterior moment-matched to the
// window, top-K of one sample per arm. Zero-variance windows are point masses.
SuperArm cts_select(const ArmSpace& space, const ArmStats& stats,
                    const SelectionConfig& cfg, Rng& rng);

}  // namespace cmabgfn
