#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"

#include "cmabgfn/distance.hpp"
#include "cmabgfn/oracle.hpp"

using namespace cmabgfn;
using namespace testutil;

namespace {

FragmentConfig hand_fragment() {
  FragmentConfig c;
  c.vocab = 4;
  c.max_blocks = 3;
  c.stems = {2, 2, 2, 2};
  c.scores = {0.0, 1.0, 1.0, 0.0};
  c.interactions.assign(16, 0.0);
  c.interactions[1 * 4 + 2] = c.interactions[2 * 4 + 1] = 2.0;
  return c;
}

State fill_bits(const BitSeqEnv& env, const std::string& bits) {
  State s = env.initial_state();
  const int k = env.config().k;
  for (int slot = 0; slot < env.slots(); ++slot) {
    const int w = std::stoi(bits.substr(slot * k, k), nullptr, 2);
    s = env.apply(s, Action{slot, w});
  }
  return s;
}

}  // namespace

TEST_CASE("bitseq reward") {
  const auto env = small_bitseq(8, 4, {"00001111", "11110000"});
  CHECK(env->reward(fill_bits(*env, "00001111")) == 1.0);
  // "00111111" is two substitutions from "00001111"
  CHECK(env->reward(fill_bits(*env, "00111111")) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  BitSeqConfig zeros;
  zeros.n = 8;
  zeros.k = 4;
  zeros.modes = {"00000000"};
  CHECK(bitseq_reward("11111111", zeros) == doctest::Approx(std::exp(-8.0)));
  State partial = env->apply(env->initial_state(), Action{0, 0});
  try {
    env->reward(partial);
    FAIL("expected IncompleteState");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIncompleteState);
  }
}

TEST_CASE("bitseq reward ignores the order of the mode set") {
  const auto a = small_bitseq(8, 4, {"00001111", "11110000", "00111100"});
  const auto b = small_bitseq(8, 4, {"00111100", "00001111", "11110000"});
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const State x = random_walk(*a, rng).back();
    CHECK(a->reward(x) == b->reward(x));
  }
}

TEST_CASE("bitseq modes use a strict distance threshold") {
  const auto env = small_bitseq(8, 4, {"00000000"}, 2);
  CHECK(env->fixed_mode(fill_bits(*env, "00000001")) == 0);  // dist 1 = delta-1
  CHECK_FALSE(env->fixed_mode(fill_bits(*env, "00000011")).has_value());
}

TEST_CASE("bitseq parents are the filled slots") {
  const auto env = small_bitseq(16, 4, {"0000000000000000"});
  State s = env->initial_state();
  s = env->apply(s, Action{0, 1});
  s = env->apply(s, Action{2, 1});
  s = env->apply(s, Action{3, 1});
  CHECK(env->num_parents(s) == 3);
  CHECK(backward_logprob(*env, s) == doctest::Approx(-std::log(3.0)).epsilon(1e-15));
}

TEST_CASE("seq reward") {
  const auto env = small_seq(4, 3, {"ACG", "UUU"}, 2.5);
  CHECK(env->reward(env->parse("ACG")) == 2.5);
  CHECK(env->reward(env->parse("ACU")) == doctest::Approx(2.5 * std::exp(-1.0)));
  SeqDesignConfig c;
  c.alphabet = 2;
  c.length = 2;
  c.peaks = {"AA"};
  CHECK(seq_reward("AA", c) == 1.0);
  CHECK(seq_reward("AC", c) == doctest::Approx(std::exp(-1.0)));
  CHECK(seq_reward("CA", c) == doctest::Approx(std::exp(-1.0)));
  CHECK(seq_reward("CC", c) == doctest::Approx(std::exp(-2.0)));
  try {
    seq_reward("A", c);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kLengthMismatch);
  }
}

TEST_CASE("seq modes are Hamming balls around the peaks") {
  const auto env = small_seq(4, 4, {"AAAA", "UUUU"});
  CHECK(env->fixed_mode(env->parse("AAAC")) == 0);
  CHECK_FALSE(env->fixed_mode(env->parse("AACC")).has_value());
  CHECK(env->similarity(env->parse("AAAA"), env->parse("AACC")) ==
        doctest::Approx(0.5));
}

TEST_CASE("prepend-append parent counts") {
  const auto env = small_seq(2, 4, {"AAAA"});
  const State s0 = env->initial_state();
  const State a = env->apply(s0, Action{SeqDesignEnv::kAppend, 0});
  CHECK(env->num_parents(a) == 1);
  CHECK(backward_logprob(*env, a) == 0.0);
  const State ac = env->apply(a, Action{SeqDesignEnv::kAppend, 1});
  CHECK(env->num_parents(ac) == 2);
  CHECK(backward_logprob(*env, ac) == doctest::Approx(-std::log(2.0)));
  // Homopolymer "AA": removing either end yields "A", still two edges.
  const State aa = env->apply(a, Action{SeqDesignEnv::kPrepend, 0});
  CHECK(env->num_parents(aa) == 2);
}

TEST_CASE("parent counts match the enumerated DAG") {
  // Count incoming edges by brute force over every reachable state.
  const auto seq = small_seq(2, 4, {"AAAA"});
  const auto bits = small_bitseq(6, 2, {"000000"});
  const auto frag = small_fragment(3, 3);
  for (const Environment* env : {static_cast<const Environment*>(seq.get()),
                                 static_cast<const Environment*>(bits.get()),
                                 static_cast<const Environment*>(frag.get())}) {
    std::unordered_map<State, int, StateHash> incoming;
    std::vector<State> frontier{env->initial_state()};
    std::unordered_set<State, StateHash> seen{env->initial_state()};
    while (!frontier.empty()) {
      std::vector<State> next;
      for (const State& s : frontier) {
        if (env->is_terminal(s)) continue;
        for (const Action& a : env->legal_actions(s)) {
          State c = env->apply(s, a);
          ++incoming[c];
          if (seen.insert(c).second) next.push_back(c);
        }
      }
      frontier = std::move(next);
    }
    for (const auto& [s, n] : incoming) {
      INFO(env->name(), " ", env->render(s));
      CHECK(env->num_parents(s) == n);
    }
  }
}

TEST_CASE("fragment reward") {
  const FragmentEnv env(hand_fragment());
  const State root0 = env.apply(env.initial_state(), Action{0, 0});
  CHECK(env.reward(root0) == doctest::Approx(5.0).epsilon(1e-15));
  State g = env.apply(env.initial_state(), Action{0, 1});
  g = env.apply(g, Action{0, 2});
  CHECK(env.reward(g) == doctest::Approx(10.0 * logistic(4.0)).epsilon(1e-15));
  CHECK(env.reward(g) == doctest::Approx(9.8201).epsilon(1e-4));
  FragmentConfig t = hand_fragment();
  // Transposing a symmetric table changes nothing.
  std::vector<double> tr(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) tr[i * 4 + j] = t.interactions[j * 4 + i];
  t.interactions = tr;
  CHECK(fragment_reward(g, t) == env.reward(g));
  try {
    fragment_reward(State{}, hand_fragment());
    FAIL("expected EmptyGraph");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyGraph);
  }
  FragmentConfig bad = hand_fragment();
  bad.interactions[1] = 0.5;
  CHECK_THROWS_AS(FragmentEnv{bad}, Error);
}

TEST_CASE("fragment similarity is multiset Jaccard") {
  const FragmentEnv env(hand_fragment());
  auto build = [&](std::vector<int> blocks) {
    State s = env.apply(env.initial_state(), Action{0, blocks[0]});
    for (std::size_t i = 1; i < blocks.size(); ++i) s = env.apply(s, Action{0, blocks[i]});
    return s;
  };
  CHECK(env.similarity(build({1, 2}), build({2, 3})) == doctest::Approx(1.0 / 3.0));
  CHECK(env.similarity(build({1, 2}), build({2, 1})) == 1.0);
  CHECK(env.similarity(build({0, 1}), build({2, 3})) == 0.0);
}

TEST_CASE("fragment states never run out of stems") {
  const auto env = small_fragment(6, 8, 11);
  const ArmSpace arms(6, 1);
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const SuperArm r(arms, {static_cast<ArmId>(uniform_index(rng, 6))});
    State s = env->initial_state();
    while (!env->is_terminal(s)) {
      const auto acts = available_actions(*env, s, r);
      REQUIRE_FALSE(acts.empty());
      s = env->apply(s, acts[uniform_index(rng, acts.size())]);
    }
  }
}

TEST_CASE("rewards are positive and finite on enumerable instances") {
  const auto seq = small_seq(2, 5, {"AACCA"});
  const auto bits = small_bitseq(6, 2, {"010101"});
  const auto frag = small_fragment(3, 3);
  for (const Environment* env : {static_cast<const Environment*>(seq.get()),
                                 static_cast<const Environment*>(bits.get()),
                                 static_cast<const Environment*>(frag.get())}) {
    const auto table = oracle_enumerate(*env, 1.0);
    for (double r : table.rewards) {
      CHECK(r > 0.0);
      CHECK(std::isfinite(r));
    }
  }
}

TEST_CASE("terminal counts match closed forms") {
  const auto seq = small_seq(2, 5, {"AACCA"});
  CHECK(oracle_enumerate(*seq, 1.0).terminals.size() == 32);
  CHECK(*seq->terminal_count() == 32.0);
  const auto bits = small_bitseq(6, 2, {"010101"});
  CHECK(oracle_enumerate(*bits, 1.0).terminals.size() == 64);
  CHECK(*bits->terminal_count() == 64.0);
}

TEST_CASE("generated mode and peak sets are deterministic and well formed") {
  const std::vector<std::string> pats{"00000000", "11111111", "11110000",
                                      "00001111", "00111100"};
  const auto m1 = make_pattern_modes(16, pats, 10, 0);
  CHECK(m1 == make_pattern_modes(16, pats, 10, 0));
  CHECK(m1.size() == 10);
  CHECK(std::set<std::string>(m1.begin(), m1.end()).size() == 10);
  for (const auto& m : m1) CHECK(m.size() == 16);
  const auto p = make_random_peaks(4, 8, 20, 1);
  CHECK(p.size() == 20);
  for (const auto& x : p) CHECK(x.find_first_not_of("ACGU") == std::string::npos);
}

TEST_CASE("config validation of environments") {
  BitSeqConfig b;
  b.n = 10;
  b.k = 4;
  b.modes = {"0000000000"};
  CHECK_THROWS_AS(validate(b), Error);
  SeqDesignConfig s;
  s.length = 3;
  s.peaks = {"AC"};
  CHECK_THROWS_AS(validate(s), Error);
}
