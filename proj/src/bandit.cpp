#include "cmabgfn/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cmabgfn {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kCucbGreedy: return "cucb-greedy";
    case Strategy::kRandom: return "random";
    case Strategy::kProportional: return "proportional";
    case Strategy::kHardPrune: return "hard-prune";
    case Strategy::kCts: return "cts";
    case Strategy::kPlainTb: return "plain-tb";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kCucbGreedy, Strategy::kRandom,
                     Strategy::kProportional, Strategy::kHardPrune,
                     Strategy::kCts, Strategy::kPlainTb}) {
    if (strategy_name(s) == name) return s;
  }
  fail(ErrorKind::kConfig, "unknown strategy '" + std::string(name) + "'");
}

// -- Normalizer ----------------------------------------------------------------

void RewardNormalizer::observe(double reward) {
  if (!seen_) {
    min_ = max_ = reward;
    seen_ = true;
    return;
  }
  min_ = std::min(min_, reward);
  max_ = std::max(max_, reward);
}

double RewardNormalizer::normalize(double reward) const {
  require(seen_, ErrorKind::kPrecondition,
          "normalizer has not observed any reward");
  const double r = (reward - min_) / (max_ - min_ + eps_);
  return std::clamp(r, 0.0, 1.0);
}

// -- Arm statistics ------------------------------------------------------------

void ArmWindow::push(double x, int window) {
  require(x >= 0.0 && x <= 1.0, ErrorKind::kOutOfRange,
          "arm reward outside [0, 1]: " + std::to_string(x));
  buffer.push_back(x);
  while (static_cast<int>(buffer.size()) > window) buffer.pop_front();
  ++pushes;
  // Recomputed from the buffer so the mean never drifts from its contents.
  mean = std::accumulate(buffer.begin(), buffer.end(), 0.0) /
         static_cast<double>(buffer.size());
}

ArmStats::ArmStats(int num_arms, int window, UcbCount count)
    : window_(window), count_(count), arms_(num_arms) {
  require(num_arms >= 1, ErrorKind::kConfig, "need at least one arm");
  require(window >= 1, ErrorKind::kConfig, "window H must be >= 1");
}

long ArmStats::ucb_count(ArmId a) const {
  const auto& w = arms_.at(a);
  return count_ == UcbCount::kWindow ? static_cast<long>(w.buffer.size())
                                     : w.pushes;
}

std::vector<ArmId> ArmStats::cold_arms() const {
  std::vector<ArmId> out;
  for (int i = 0; i < num_arms(); ++i) {
    if (!warm(i)) out.push_back(i);
  }
  return out;
}

std::vector<double> ArmStats::means() const {
  std::vector<double> out(arms_.size());
  for (std::size_t i = 0; i < arms_.size(); ++i) out[i] = arms_[i].mean;
  return out;
}

double ucb_value(double mean, long count, long t) {
  require(count >= 1, ErrorKind::kColdArm, "UCB of an arm with T_i = 0");
  require(t >= 1, ErrorKind::kPrecondition, "round index must be >= 1");
  return mean + std::sqrt(3.0 * std::log(static_cast<double>(t)) /
                          (2.0 * static_cast<double>(count)));
}

double ArmStats::ucb(ArmId a, long t) const {
  if (!warm(a)) {
    fail(ErrorKind::kColdArm, "arm " + std::to_string(a) + " has no observation");
  }
  return ucb_value(mean(a), ucb_count(a), t);
}

// -- Co-occurrence -------------------------------------------------------------

CoOccurrence::CoOccurrence(int num_arms)
    : n_(num_arms), w_(static_cast<std::size_t>(num_arms) * num_arms, 0.0) {}

void CoOccurrence::set(ArmId i, ArmId j, double v) {
  w_[static_cast<std::size_t>(i) * n_ + j] = v;
  w_[static_cast<std::size_t>(j) * n_ + i] = v;
}

void CoOccurrence::update(std::span<const ArmId> present, double r,
                          double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::kOutOfRange,
          "co-occurrence rate must be in [0, 1]");
  if (alpha == 0.0) return;
  const double keep = 1.0 - alpha;
  for (double& v : w_) v *= keep;
  std::vector<ArmId> arms(present.begin(), present.end());
  std::sort(arms.begin(), arms.end());
  arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
  const double gain = alpha * r;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    for (std::size_t b = a + 1; b < arms.size(); ++b) {
      w_[static_cast<std::size_t>(arms[a]) * n_ + arms[b]] += gain;
      w_[static_cast<std::size_t>(arms[b]) * n_ + arms[a]] += gain;
    }
  }
}

std::string CoOccurrence::dump() const {
  std::ostringstream os;
  os.precision(10);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      if (j) os << ',';
      os << (*this)(i, j);
    }
    os << '\n';
  }
  return os.str();
}

std::map<ArmId, double> arm_rewards_from_batch(
    std::span<const std::vector<ArmId>> candidate_arms,
    std::span<const double> normalized_rewards) {
  require(!candidate_arms.empty(), ErrorKind::kPrecondition,
          "arm rewards need a non-empty batch");
  require(candidate_arms.size() == normalized_rewards.size(),
          ErrorKind::kLengthMismatch, "one reward per candidate");
  std::map<ArmId, std::pair<double, int>> acc;
  for (std::size_t c = 0; c < candidate_arms.size(); ++c) {
    std::vector<ArmId> arms = candidate_arms[c];
    std::sort(arms.begin(), arms.end());
    arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
    for (ArmId a : arms) {
      auto& [sum, count] = acc[a];
      sum += normalized_rewards[c];
      ++count;
    }
  }
  std::map<ArmId, double> out;
  for (const auto& [arm, sc] : acc) out[arm] = sc.first / sc.second;
  return out;
}

// -- Selection -----------------------------------------------------------------

namespace {

SuperArm greedy(const ArmSpace& space, const ArmStats& stats,
                const CoOccurrence& w, const SelectionConfig& cfg, long t) {
  const int n = stats.num_arms();
  std::vector<double> ucb(n);
  for (int a = 0; a < n; ++a) ucb[a] = stats.ucb(a, t);

  std::vector<char> chosen(n, 0);
  std::vector<ArmId> members;
  members.push_back(static_cast<ArmId>(
      std::max_element(ucb.begin(), ucb.end()) - ucb.begin()));
  chosen[members[0]] = 1;
  // synergy[a] = sum over members b of W_ab
  std::vector<double> synergy(n, 0.0);
  while (static_cast<int>(members.size()) < cfg.k) {
    const ArmId last = members.back();
    for (int a = 0; a < n; ++a) synergy[a] += w(a, last);
    const double inv = 1.0 / static_cast<double>(members.size());
    ArmId best = -1;
    double best_score = 0.0;
    for (int a = 0; a < n; ++a) {
      if (chosen[a]) continue;
      const double score = ucb[a] + cfg.lambda * inv * synergy[a];
      if (best < 0 || score > best_score) {
        best = a;
        best_score = score;
      }
    }
    chosen[best] = 1;
    members.push_back(best);
  }
  return SuperArm(space, std::move(members));
}

SuperArm uniform_subset(const ArmSpace& space, int n, int k, Rng& rng) {
  std::vector<ArmId> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(uniform_index(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return SuperArm(space, std::move(pool));
}

SuperArm proportional(const ArmSpace& space, const ArmStats& stats, int k,
                      Rng& rng) {
  const int n = stats.num_arms();
  std::vector<double> weight = stats.means();
  std::vector<char> taken(n, 0);
  std::vector<ArmId> members;
  for (int draw = 0; draw < k; ++draw) {
    double total = 0.0;
    int remaining = 0;
    for (int a = 0; a < n; ++a) {
      if (!taken[a]) {
        total += weight[a];
        ++remaining;
      }
    }
    const double u = uniform01(rng);
    ArmId pick = -1;
    if (total > 0.0) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a) {
        if (taken[a] || weight[a] <= 0.0) continue;
        acc += weight[a] / total;
        pick = a;
        if (u < acc) break;
      }
    } else {
      int target = std::min(static_cast<int>(u * remaining), remaining - 1);
      for (int a = 0; a < n; ++a) {
        if (taken[a]) continue;
        if (target-- == 0) {
          pick = a;
          break;
        }
      }
    }
    taken[pick] = 1;
    members.push_back(pick);
  }
  return SuperArm(space, std::move(members));
}

SuperArm hard_prune(const ArmSpace& space, int n, const SelectionConfig& cfg) {
  std::vector<char> excluded(n, 0);
  if (cfg.hard_prune_exclude.empty()) {
    for (int a = cfg.k; a < n; ++a) excluded[a] = 1;
  } else {
    for (ArmId a : cfg.hard_prune_exclude) {
      require(a >= 0 && a < n, ErrorKind::kOutOfRange,
              "hard-prune exclusion outside the arm space");
      excluded[a] = 1;
    }
  }
  std::vector<ArmId> members;
  for (int a = 0; a < n; ++a) {
    if (!excluded[a]) members.push_back(a);
  }
  require(static_cast<int>(members.size()) == cfg.k, ErrorKind::kConfig,
          "hard-prune keeps " + std::to_string(members.size()) +
              " arms but K = " + std::to_string(cfg.k));
  return SuperArm(space, std::move(members));
}

}  // namespace

SuperArm select_super_arm(const ArmSpace& space, const ArmStats& stats,
                          const CoOccurrence& w, const SelectionConfig& cfg,
                          long t, Rng& rng) {
  const int n = stats.num_arms();
  require(cfg.k >= 1, ErrorKind::kConfig, "K must be >= 1");
  if (cfg.k > n) {
    fail(ErrorKind::kKTooLarge, "K = " + std::to_string(cfg.k) +
                                    " exceeds the number of arms " +
                                    std::to_string(n));
  }
  switch (cfg.strategy) {
    case Strategy::kCucbGreedy: {
      const auto cold = stats.cold_arms();
      if (!cold.empty()) {
        fail(ErrorKind::kColdArm,
             std::to_string(cold.size()) + " arm(s) have no observation");
      }
      return greedy(space, stats, w, cfg, t);
    }
    case Strategy::kRandom: return uniform_subset(space, n, cfg.k, rng);
    case Strategy::kProportional: return proportional(space, stats, cfg.k, rng);
    case Strategy::kHardPrune: return hard_prune(space, n, cfg);
    case Strategy::kCts: return cts_select(space, stats, cfg, rng);
    case Strategy::kPlainTb: return SuperArm::all();
  }
  return SuperArm::all();
}

SuperArm cts_select(const ArmSpace& space, const ArmStats& stats,
                    const SelectionConfig& cfg, Rng& rng) {
  const int n = stats.num_arms();
  if (cfg.k > n) fail(ErrorKind::kKTooLarge, "K exceeds the number of arms");
  const auto cold = stats.cold_arms();
  if (!cold.empty()) fail(ErrorKind::kColdArm, "CTS needs every arm warm");
  std::vector<double> draw(n);
  for (int a = 0; a < n; ++a) {
    const auto& buf = stats.arm(a).buffer;
    const double m = stats.mean(a);
    double var = 0.0;
    for (double x : buf) var += (x - m) * (x - m);
    if (buf.size() > 1) var /= static_cast<double>(buf.size() - 1);
    const double common = var > 0.0 ? m * (1.0 - m) / var - 1.0 : 0.0;
    if (common <= 0.0 || m <= 0.0 || m >= 1.0) {
      draw[a] = m;
    } else {
      const double x = gamma_sample(rng, m * common);
      const double y = gamma_sample(rng, (1.0 - m) * common);
      draw[a] = x / (x + y);
    }
  }
  std::vector<ArmId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](ArmId a, ArmId b) { return draw[a] > draw[b]; });
  order.resize(cfg.k);
  return SuperArm(space, std::move(order));
}

}  // namespace cmabgfn
