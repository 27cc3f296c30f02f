#include "cmabgfn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace cmabgfn {
namespace {

double log_sum_exp(const std::vector<double>& xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// States grouped by depth. Every environment here has a fixed horizon, so
// depth layers give a topological order.
std::vector<std::vector<State>> layers(const Environment& env, std::size_t limit) {
  std::vector<std::vector<State>> out{{env.initial_state()}};
  std::size_t total = 1;
  while (true) {
    std::vector<State> next;
    std::unordered_map<State, char, StateHash> seen;
    for (const State& s : out.back()) {
      if (env.is_terminal(s)) continue;
      for (const Action& a : env.legal_actions(s)) {
        State c = env.apply(s, a);
        if (seen.emplace(c, 1).second) next.push_back(std::move(c));
      }
    }
    if (next.empty()) break;
    total += next.size();
    if (total > 4 * limit) {
      fail(ErrorKind::kTooLarge, "state graph exceeds the enumeration limit");
    }
    out.push_back(std::move(next));
  }
  return out;
}

void check_size(const Environment& env, std::size_t limit) {
  if (auto n = env.terminal_count(); n && *n > static_cast<double>(limit)) {
    fail(ErrorKind::kTooLarge, env.name().data() + std::string(" has ") +
                                   std::to_string(static_cast<long double>(*n)) +
                                   " terminals, above the enumeration limit");
  }
}

}  // namespace

OracleTable oracle_enumerate(const Environment& env, double beta, std::size_t limit) {
  check_size(env, limit);
  OracleTable t;
  std::vector<double> logw;
  for (const auto& layer : layers(env, limit)) {
    for (const State& s : layer) {
      if (!env.is_terminal(s) || t.index.count(s)) continue;
      const double r = env.reward(s);
      require(r > 0.0 && std::isfinite(r), ErrorKind::kNonPositiveReward,
              "reward must be positive and finite");
      t.index.emplace(s, t.terminals.size());
      t.terminals.push_back(s);
      t.rewards.push_back(r);
      logw.push_back(beta * std::log(r));
      if (t.terminals.size() > limit) {
        fail(ErrorKind::kTooLarge, "terminal count exceeds the enumeration limit");
      }
    }
  }
  t.log_z = log_sum_exp(logw);
  t.pi.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) t.pi[i] = std::exp(logw[i] - t.log_z);
  return t;
}

std::unordered_map<State, double, StateHash> exact_terminal_distribution(
    const Policy& model, std::size_t limit) {
  const Environment& env = model.env();
  check_size(env, limit);
  std::unordered_map<State, double, StateHash> mass{{env.initial_state(), 1.0}};
  std::unordered_map<State, double, StateHash> terminal;
  std::vector<double> logits(env.action_space_size());
  for (const auto& layer : layers(env, limit)) {
    for (const State& s : layer) {
      const auto it = mass.find(s);
      if (it == mass.end()) continue;
      const double p = it->second;
      if (env.is_terminal(s)) {
        terminal[s] += p;
        continue;
      }
      const auto actions = env.legal_actions(s);
      std::vector<int> legal(actions.size());
      for (std::size_t i = 0; i < actions.size(); ++i) legal[i] = env.action_index(actions[i]);
      model.logits(s, logits);
      const auto lp = masked_log_softmax(logits, legal);
      for (std::size_t i = 0; i < actions.size(); ++i) {
        mass[env.apply(s, actions[i])] += p * std::exp(lp[i]);
      }
    }
  }
  return terminal;
}

double l1_to_target(const OracleTable& table,
                    const std::unordered_map<State, double, StateHash>& dist) {
  double l1 = 0.0;
  for (std::size_t i = 0; i < table.terminals.size(); ++i) {
    const auto it = dist.find(table.terminals[i]);
    l1 += std::abs((it == dist.end() ? 0.0 : it->second) - table.pi[i]);
  }
  for (const auto& [x, p] : dist) {
    if (!table.index.count(x)) l1 += std::abs(p);
  }
  return l1;
}

std::unique_ptr<TabularPolicy> exact_flow_policy(const Environment& env, double beta,
                                                 std::size_t limit) {
  check_size(env, limit);
  const auto ls = layers(env, limit);
  std::unordered_map<State, double, StateHash> log_flow;
  auto policy = std::make_unique<TabularPolicy>(env);
  std::vector<double> logits(env.action_space_size());
  for (auto layer = ls.rbegin(); layer != ls.rend(); ++layer) {
    for (const State& s : *layer) {
      if (env.is_terminal(s)) {
        log_flow[s] = beta * std::log(env.reward(s));
        continue;
      }
      const auto actions = env.legal_actions(s);
      std::vector<double> terms(actions.size());
      for (std::size_t i = 0; i < actions.size(); ++i) {
        const State c = env.apply(s, actions[i]);
        terms[i] = log_flow.at(c) - std::log(static_cast<double>(env.num_parents(c)));
      }
      const double f = log_sum_exp(terms);
      log_flow[s] = f;
      std::fill(logits.begin(), logits.end(), 0.0);
      for (std::size_t i = 0; i < actions.size(); ++i) {
        logits[env.action_index(actions[i])] = terms[i] - f;
      }
      policy->set_logits(s, logits);
    }
  }
  policy->log_z = log_flow.at(env.initial_state());
  return policy;
}

OracleBanditResult oracle_bandit(const OracleBanditConfig& cfg) {
  const int n = static_cast<int>(cfg.means.size());
  require(n >= 1, ErrorKind::kPrecondition, "oracle bandit needs arms");
  for (double m : cfg.means) {
    require(m >= 0.0 && m <= 1.0, ErrorKind::kOutOfRange, "planted means must lie in [0, 1]");
  }
  const ArmSpace space(n, 1);
  ArmStats stats(n, cfg.window, cfg.ucb_count);
  CoOccurrence w(n);
  Rng select_rng = make_rng(cfg.seed, "bandit");
  Rng noise_rng = make_rng(cfg.seed, "noise");
  const double half_width = cfg.noise * std::sqrt(3.0);

  std::vector<double> sorted = cfg.means;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double kth = sorted[std::min(cfg.k, n) - 1];
  const double best =
      std::accumulate(sorted.begin(), sorted.begin() + std::min(cfg.k, n), 0.0) /
      std::min(cfg.k, n);

  SelectionConfig sel{cfg.strategy, cfg.k, cfg.lambda, cfg.hard_prune_exclude};
  OracleBanditResult res;
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool warm = stats.cold_arms().empty();
    SuperArm chosen;
    if (warm) {
      chosen = select_super_arm(space, stats, w, sel, epoch + 1, select_rng);
      res.empirical.update(stats.means(), chosen);
    } else {
      ++res.warmup_epochs;
    }
    // One noisy observation per arm; feedback scope decides who hears it.
    std::vector<double> x(n);
    for (int a = 0; a < n; ++a) {
      const double u = uniform01(noise_rng);
      x[a] = std::clamp(cfg.means[a] + (2.0 * u - 1.0) * half_width, 0.0, 1.0);
    }
    std::vector<ArmId> present;
    double r = 0.0;
    for (int a = 0; a < n; ++a) {
      if (!warm || cfg.feedback == Feedback::kAll || chosen.contains(a)) {
        stats.push(a, x[a]);
      }
      if (chosen.contains(a)) {
        present.push_back(a);
        r += x[a];
      }
    }
    if (!present.empty()) w.update(present, r / present.size(), cfg.alpha);
    if (!warm) continue;

    double got = 0.0;
    bool optimal = true;
    for (ArmId a : chosen.members()) {
      got += cfg.means[a];
      optimal = optimal && cfg.means[a] >= kth;
    }
    got /= static_cast<double>(chosen.size());
    res.selections.push_back(chosen);
    res.true_regret.push_back(std::max(0.0, best - got));
    res.optimal.push_back(optimal ? 1 : 0);
  }
  return res;
}

}  // namespace cmabgfn
