#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "cmabgfn/bandit.hpp"
#include "cmabgfn/metrics.hpp"
#include "cmabgfn/policy.hpp"

namespace cmabgfn {

inline constexpr std::size_t kEnumerationLimit = 1'000'000;

// All terminals of an environment with the exact target R^beta / Z.
struct OracleTable {
  std::vector<State> terminals;  // discovery order (deterministic)
  std::vector<double> rewards;
  std::vector<double> pi;
  double log_z = 0.0;            // log sum R^beta
  std::unordered_map<State, std::size_t, StateHash> index;
};

// Breadth-first walk over the full DAG. Throws kTooLarge past `limit`
// terminals (or states).
OracleTable oracle_enumerate(const Environment& env, double beta,
                             std::size_t limit = kEnumerationLimit);

// Terminal distribution induced by rolling out the policy with epsilon = 0
// and no restriction, computed exactly by forward propagation over the DAG.
std::unordered_map<State, double, StateHash> exact_terminal_distribution(
    const Policy& model, std::size_t limit = kEnumerationLimit);

// L1 distance between a terminal distribution and the oracle target.
double l1_to_target(const OracleTable& table,
                    const std::unordered_map<State, double, StateHash>& dist);

// Tabular policy whose forward probabilities are the exact flow solution
// under uniform backward probabilities: P_F(s'|s) = F(s') / (npar(s') F(s)),
// with log_z = log F(s0). Its TB residual is zero on every trajectory.
std::unique_ptr<TabularPolicy> exact_flow_policy(const Environment& env, double beta,
                                                 std::size_t limit = kEnumerationLimit);

// Stationary semi-bandit with planted arm means, driving the bandit layer
// exactly as the protocol does but without a sampler.
struct OracleBanditConfig {
  std::vector<double> means;
  Strategy strategy = Strategy::kCucbGreedy;
  int k = 3;
  double lambda = 0.0;
  double alpha = 0.05;
  int window = 50;
  UcbCount ucb_count = UcbCount::kWindow;
  Feedback feedback = Feedback::kSelected;
  std::vector<ArmId> hard_prune_exclude;
  long epochs = 5000;    // including the warmup epoch
  double noise = 0.05;   // std dev of zero-mean uniform noise on X_i
  std::uint64_t seed = 0;
};

struct OracleBanditResult {
  std::vector<SuperArm> selections;     // one per post-warmup epoch
  std::vector<double> true_regret;      // top-K planted mean minus chosen
  std::vector<char> optimal;            // chosen set is a planted top-K set
  RegretTracker empirical;
  long warmup_epochs = 0;
};

OracleBanditResult oracle_bandit(const OracleBanditConfig& cfg);

}  // namespace cmabgfn
