#include "cmabgfn/metrics.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace cmabgfn {

std::optional<int> ModeLedger::record(const State& x, double reward, long epoch) {
  if (env_->mode_rule() == ModeRule::kFixedSet) {
    const auto id = env_->fixed_mode(x);
    if (!id || !fixed_ids_.insert(*id).second) return std::nullopt;
    hits_.push_back({*id, epoch, x, reward});
    return id;
  }
  if (!(reward > env_->mode_reward_threshold())) return std::nullopt;
  const double limit = env_->mode_similarity_threshold();
  for (const auto& h : hits_) {
    if (env_->similarity(x, h.candidate) > limit) return std::nullopt;
  }
  const int id = static_cast<int>(hits_.size());
  hits_.push_back({id, epoch, x, reward});
  return id;
}

void TopKTracker::offer(const Environment& env, const State& x, double reward) {
  if (capacity_ == 0) return;
  if (items_.size() == capacity_ && !(reward > items_.back().reward)) return;
  std::string key = env.render(x);
  if (keys_.count(key)) return;
  ScoredCandidate item{x, key, reward};
  const auto pos = std::upper_bound(
      items_.begin(), items_.end(), item,
      [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.reward != b.reward) return a.reward > b.reward;
        return a.key < b.key;
      });
  items_.insert(pos, std::move(item));
  keys_.insert(std::move(key));
  if (items_.size() > capacity_) {
    keys_.erase(items_.back().key);
    items_.pop_back();
  }
}

double TopKTracker::mean_reward() const {
  if (items_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& it : items_) s += it.reward;
  return s / static_cast<double>(items_.size());
}

double topk_similarity(const TopKTracker& tracker, const Environment& env) {
  const auto& items = tracker.items();
  require(items.size() >= 2, ErrorKind::kTooFew,
          "similarity needs at least two candidates");
  double sum = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      sum += env.similarity(items[i].candidate, items[j].candidate);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

void record_candidates(ModeLedger& ledger, TopKTracker& tracker,
                       const Environment& env, const CandidateBatchView& batch,
                       long epoch) {
  for (std::size_t i = 0; i < batch.candidates.size(); ++i) {
    ledger.record(*batch.candidates[i], batch.rewards[i], epoch);
    tracker.offer(env, *batch.candidates[i], batch.rewards[i]);
  }
}

double RegretTracker::update(std::span<const double> means,
                             const SuperArm& chosen) {
  require(!chosen.is_all(), ErrorKind::kPrecondition,
          "regret needs an explicit super arm");
  const int k = chosen.size();
  std::vector<double> sorted(means.begin(), means.end());
  std::partial_sort(sorted.begin(), sorted.begin() + k, sorted.end(),
                    std::greater<>());
  const double best =
      std::accumulate(sorted.begin(), sorted.begin() + k, 0.0) / k;
  // Same summation order as `best`, so choosing the top-K set gives exactly 0.
  std::vector<double> picked;
  for (ArmId a : chosen.members()) picked.push_back(means[a]);
  std::sort(picked.begin(), picked.end(), std::greater<>());
  const double mine = std::accumulate(picked.begin(), picked.end(), 0.0) / k;
  const double term = std::max(0.0, best - mine);
  terms_.push_back(term);
  cumulative_ += term;
  return term;
}

}  // namespace cmabgfn
