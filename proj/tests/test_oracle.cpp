#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"

#include "cmabgfn/oracle.hpp"

using namespace cmabgfn;
using namespace testutil;

namespace {

// Depth-first walk over every trajectory; terminals keyed by rendering.
void collect(const Environment& env, const State& s, std::map<std::string, State>& out) {
  if (env.is_terminal(s)) {
    out.emplace(env.render(s), s);
    return;
  }
  for (const auto& a : env.legal_actions(s)) collect(env, env.apply(s, a), out);
}

}  // namespace

TEST_CASE("beta = 0 gives the uniform target") {
  const auto env = small_seq(3, 4, {"ACGA"});
  const auto t = oracle_enumerate(*env, 0.0);
  REQUIRE(t.terminals.size() == 81);
  for (double p : t.pi) CHECK(std::abs(p - 1.0 / 81.0) < 1e-15);
  CHECK(std::abs(t.log_z - std::log(81.0)) < 1e-12);
}

TEST_CASE("enumeration matches a brute-force walk") {
  const auto env = small_bitseq(4, 2, {"0000", "1100"}, 1);
  const double beta = 2.0;
  std::map<std::string, State> all;
  collect(*env, env->initial_state(), all);
  CHECK(all.size() == 16);
  double z = 0.0;
  for (const auto& [key, x] : all) z += std::pow(env->reward(x), beta);

  const auto t = oracle_enumerate(*env, beta);
  REQUIRE(t.terminals.size() == all.size());
  CHECK(std::abs(t.log_z - std::log(z)) < 1e-12);
  double mass = 0.0;
  for (std::size_t i = 0; i < t.terminals.size(); ++i) {
    const std::string key = env->render(t.terminals[i]);
    REQUIRE(all.count(key));
    CHECK(t.rewards[i] == env->reward(all.at(key)));
    CHECK(std::abs(t.pi[i] - std::pow(t.rewards[i], beta) / z) < 1e-14);
    mass += t.pi[i];
  }
  CHECK(std::abs(mass - 1.0) < 1e-12);
}

TEST_CASE("large beta concentrates on the best terminal") {
  const auto env = small_seq(2, 4, {"ACCA"});
  const auto t = oracle_enumerate(*env, 60.0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < t.rewards.size(); ++i) {
    if (t.rewards[i] > t.rewards[best]) best = i;
  }
  CHECK(env->render(t.terminals[best]) == "ACCA");
  CHECK(t.pi[best] > 0.99);
}

TEST_CASE("enumeration refuses oversized spaces") {
  const auto env = small_seq(4, 3, {"ACG"});
  try {
    oracle_enumerate(*env, 1.0, 10);
    FAIL("expected kTooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTooLarge);
  }
}

TEST_CASE("exact flow policy has zero TB residual and hits the target") {
  const double beta = 2.0;
  std::vector<std::unique_ptr<Environment>> envs;
  envs.push_back(small_seq(3, 3, {"ACG", "GGA"}));
  envs.push_back(small_bitseq(6, 2, {"000000", "110011"}));
  envs.push_back(small_fragment(3, 3));
  for (const auto& env : envs) {
    const auto table = oracle_enumerate(*env, beta);
    const auto model = exact_flow_policy(*env, beta);
    CHECK(std::abs(model->log_z - table.log_z) < 1e-10);
    const ArmSpace arms(env->alphabet_size(), 1);
    const auto batch =
        sample_batch_serial(*model, arms, SuperArm::all(), 0.0, 4, 64, Provenance::kTrain);
    for (const auto& traj : batch) CHECK(std::abs(tb_residual(*model, traj, beta)) < 1e-9);
    CHECK(l1_to_target(table, exact_terminal_distribution(*model)) < 1e-10);
  }
}

TEST_CASE("uniform policy distribution differs from a peaked target") {
  const auto env = small_seq(2, 3, {"AAA"});
  const TabularPolicy model(*env);
  const auto dist = exact_terminal_distribution(model);
  CHECK(dist.size() == 8);
  for (const auto& [x, p] : dist) CHECK(std::abs(p - 0.125) < 1e-15);
  const auto table = oracle_enumerate(*env, 4.0);
  CHECK(l1_to_target(table, dist) > 0.5);
}

TEST_CASE("noise-free planted bandit locks onto the top set") {
  OracleBanditConfig c;
  c.means = {0.2, 0.9, 0.4, 0.8, 0.3, 0.7, 0.1};
  c.k = 3;
  c.noise = 0.0;
  c.epochs = 600;
  const auto res = oracle_bandit(c);
  CHECK(res.warmup_epochs == 1);
  REQUIRE(res.selections.size() == 599);
  for (std::size_t i = res.selections.size() - 100; i < res.selections.size(); ++i) {
    CHECK(res.selections[i].members() == std::vector<ArmId>{1, 3, 5});
    CHECK(res.true_regret[i] == 0.0);
  }
}

TEST_CASE("equal planted means spread selections under cumulative counts") {
  OracleBanditConfig c;
  c.means.assign(6, 0.5);
  c.ucb_count = UcbCount::kCumulative;
  c.k = 2;
  c.epochs = 3000;
  const auto res = oracle_bandit(c);
  std::vector<int> count(6, 0);
  for (const auto& s : res.selections) {
    for (ArmId a : s.members()) ++count[a];
  }
  const double share = 2.0 / 6.0 * res.selections.size();
  for (int n : count) {
    CHECK(n > 0.5 * share);
    CHECK(n < 1.5 * share);
  }
  for (double r : res.true_regret) CHECK(r == 0.0);
  for (char o : res.optimal) CHECK(o == 1);
}

TEST_CASE("hard prune without the best arm pays the gap every epoch") {
  OracleBanditConfig c;
  c.means = {0.9, 0.5, 0.5, 0.5, 0.5, 0.5};
  c.strategy = Strategy::kHardPrune;
  c.k = 2;
  c.hard_prune_exclude = {0, 3, 4, 5};
  c.epochs = 200;
  const auto res = oracle_bandit(c);
  const double gap = (0.9 + 0.5) / 2.0 - 0.5;
  double cum = 0.0;
  for (std::size_t i = 0; i < res.true_regret.size(); ++i) {
    CHECK(res.selections[i].members() == std::vector<ArmId>{1, 2});
    CHECK(std::abs(res.true_regret[i] - gap) < 1e-15);
    cum += res.true_regret[i];
  }
  CHECK(std::abs(cum / res.true_regret.size() - gap) < 1e-12);
}

TEST_CASE("planted bandit switches less once it has explored") {
  OracleBanditConfig c;
  c.means = {0.7, 0.7, 0.7, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6};
  c.k = 3;
  c.epochs = 3000;
  const auto res = oracle_bandit(c);
  const auto& picks = res.selections;
  const std::size_t n = picks.size(), third = n / 3;
  auto switches = [&](std::size_t from, std::size_t to) {
    int s = 0;
    for (std::size_t i = from + 1; i < to; ++i) s += !(picks[i] == picks[i - 1]);
    return s;
  };
  const int early = switches(0, third), late = switches(n - third, n);
  MESSAGE("early switches " << early << " late switches " << late);
  CHECK(early > 0);
  CHECK(late < early);
}

TEST_CASE("oracle bandit rejects means outside [0, 1]") {
  OracleBanditConfig c;
  c.means = {0.5, 1.2};
  c.k = 1;
  CHECK_THROWS_AS(oracle_bandit(c), Error);
}
