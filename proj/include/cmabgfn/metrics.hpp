#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cmabgfn/env.hpp"

namespace cmabgfn {

struct ModeHit {
  int id = 0;
  long epoch = 0;
  State candidate;
  double reward = 0.0;
};

// Discovered modes under the environment's rule. Each id is recorded once.
class ModeLedger {
 public:
  explicit ModeLedger(const Environment& env) : env_(&env) {}

  // Returns the id of a newly recorded mode, or nothing.
  std::optional<int> record(const State& x, double reward, long epoch);

  std::size_t size() const { return hits_.size(); }
  const std::vector<ModeHit>& hits() const { return hits_; }

 private:
  const Environment* env_;
  std::set<int> fixed_ids_;
  std::vector<ModeHit> hits_;
};

struct ScoredCandidate {
  State candidate;
  std::string key;
  double reward = 0.0;
};

// Best distinct candidates by reward, sorted descending (ties by key).
class TopKTracker {
 public:
  explicit TopKTracker(std::size_t capacity) : capacity_(capacity) {}

  void offer(const Environment& env, const State& x, double reward);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<ScoredCandidate>& items() const { return items_; }
  double mean_reward() const;

 private:
  std::size_t capacity_;
  std::vector<ScoredCandidate> items_;
  std::unordered_set<std::string> keys_;
};

// Mean similarity over all unordered pairs; throws kTooFew below two items.
double topk_similarity(const TopKTracker& tracker, const Environment& env);

struct CandidateBatchView {
  std::span<const State* const> candidates;
  std::span<const double> rewards;
};

void record_candidates(ModeLedger& ledger, TopKTracker& tracker,
                       const Environment& env, const CandidateBatchView& batch,
                       long epoch);

// Empirical cumulative regret: per epoch, the mean of the K largest arm means
// minus the mean over the chosen super arm's members.
class RegretTracker {
 public:
  double update(std::span<const double> means, const SuperArm& chosen);

  double cumulative() const { return cumulative_; }
  const std::vector<double>& terms() const { return terms_; }

 private:
  std::vector<double> terms_;
  double cumulative_ = 0.0;
};

}  // namespace cmabgfn
