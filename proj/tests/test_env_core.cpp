#include <algorithm>
#include <functional>
#include <map>

#include "doctest.h"
#include "helpers.hpp"

#include "cmabgfn/distance.hpp"

using namespace cmabgfn;
using namespace testutil;

namespace {

// Plain recursive edit distance with memoisation, independent of the DP in
// the library.
int edit_oracle(const std::string& a, const std::string& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int best = go(i + 1, j + 1) + (a[i] != b[j]);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    return memo[key] = best;
  };
  return go(0, 0);
}

std::vector<std::string> all_bit_strings(int max_len) {
  std::vector<std::string> out{""};
  for (int len = 1; len <= max_len; ++len) {
    for (int v = 0; v < (1 << len); ++v) {
      std::string s;
      for (int b = len - 1; b >= 0; --b) s += ((v >> b) & 1) ? '1' : '0';
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein("0000", "0000") == 0);
  CHECK(levenshtein("0011", "0101") == edit_oracle("0011", "0101"));
  CHECK(levenshtein("0011", "0101") == 2);
  CHECK(levenshtein("", "101") == 3);
}

TEST_CASE("levenshtein is a metric on all bit strings up to length 4") {
  const auto xs = all_bit_strings(4);
  for (const auto& a : xs) {
    for (const auto& b : xs) {
      const int ab = levenshtein(a, b);
      REQUIRE(ab == edit_oracle(a, b));
      CHECK(ab == levenshtein(b, a));
      CHECK((ab == 0) == (a == b));
    }
  }
  for (const auto& a : xs) {
    for (const auto& b : xs) {
      for (const auto& c : xs) {
        CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
      }
    }
  }
}

TEST_CASE("hamming and jaccard") {
  CHECK(hamming("ACGU", "ACGA") == 1);
  CHECK_THROWS_AS(hamming("AC", "ACG"), Error);
  const std::vector<int> a{1, 2}, b{2, 3}, c{4, 5};
  CHECK(multiset_jaccard(a, b, 8) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(multiset_jaccard(a, a, 8) == 1.0);
  CHECK(multiset_jaccard(a, c, 8) == 0.0);
  const std::vector<int> m1{1, 1, 2}, m2{1, 2, 2};
  // |min| = 1+1 = 2, |max| = 2+2 = 4
  CHECK(multiset_jaccard(m1, m2, 8) == doctest::Approx(0.5));
  CHECK(multiset_jaccard_sorted(m1, m2) == doctest::Approx(0.5));
}

TEST_CASE("arm space encodes composites big-endian") {
  const ArmSpace s(2, 3);
  CHECK(s.num_arms() == 8);
  const std::vector<int> c{1, 0, 1};
  CHECK(s.encode(c) == 5);
  CHECK(s.decode(5) == c);
  const std::vector<int> hist{1, 1, 0, 0, 0, 1, 1};
  CHECK(s.project(hist) == std::vector<ArmId>{6, 1});
  const ArmSpace p(4, 1);
  const std::vector<int> h2{3, 1, 3};
  CHECK(p.project(h2) == std::vector<ArmId>{3, 1, 3});
}

TEST_CASE("super arm validation") {
  const ArmSpace s(4, 1);
  CHECK_THROWS_AS(SuperArm(s, {0, 0}), Error);
  CHECK_THROWS_AS(SuperArm(s, {4}), Error);
  const SuperArm a(s, {2, 0});
  CHECK(a.members() == std::vector<ArmId>{0, 2});
  CHECK(a.contains(2));
  CHECK_FALSE(a.contains(1));
  CHECK(SuperArm::all().is_all());
}

TEST_CASE("available actions under a restriction") {
  const auto env = small_bitseq(16, 4, {"0000000000000000"});
  const ArmSpace arms(16, 1);
  State s = env->initial_state();
  s = env->apply(s, Action{1, 5});
  s = env->apply(s, Action{3, 9});
  const SuperArm r(arms, {0, 15});
  const auto acts = available_actions(*env, s, r);
  // Oracle: open slots times permitted words, sorted by (slot, word).
  std::vector<Action> expect;
  for (int slot = 0; slot < 4; ++slot) {
    if (s.cells[slot] != -1) continue;
    for (int w : {0, 15}) expect.push_back(Action{slot, w});
  }
  CHECK(acts.size() == 4);
  CHECK(acts == expect);
  CHECK(available_actions(*env, s, SuperArm::all()) == env->legal_actions(s));
}

TEST_CASE("terminal states have no actions and illegal actions are rejected") {
  const auto env = small_seq(2, 2, {"AA"});
  State x = env->parse("AC");
  CHECK(env->is_terminal(x));
  CHECK_THROWS_AS(env->legal_actions(x), Error);
  CHECK_THROWS_AS(available_actions(*env, x, SuperArm::all()), Error);
  const State s0 = env->initial_state();
  try {
    env->apply(s0, Action{SeqDesignEnv::kAppend, 7});
    FAIL("expected InvalidAction");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidAction);
  }
}

TEST_CASE("restriction that removes every action raises EmptyActionSet") {
  const auto env = small_bitseq(8, 4, {"00000000"});
  const ArmSpace arms(16, 2);
  // Composite arm (0, 0): after choosing 15 first, no completion is legal.
  const SuperArm r(arms, {0});
  State s = env->apply(env->initial_state(), Action{0, 15});
  const std::vector<int> prefix{15};
  try {
    available_actions(*env, s, r, prefix);
    FAIL("expected EmptyActionSet");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyActionSet);
  }
}

TEST_CASE("composite restriction filters by prefix") {
  const auto env = small_seq(2, 4, {"AAAA"});
  const ArmSpace arms(2, 2);
  const SuperArm r(arms, {arms.encode(std::vector<int>{0, 1})});
  const State s0 = env->initial_state();
  const auto first = available_actions(*env, s0, r);
  REQUIRE(first.size() == 1);
  CHECK(first[0].choice == 0);
  const State s1 = env->apply(s0, first[0]);
  const std::vector<int> prefix{0};
  for (const auto& a : available_actions(*env, s1, r, prefix)) CHECK(a.choice == 1);
}

TEST_CASE("trajectory choices follow the action record") {
  Trajectory t;
  t.actions = {Action{0, 3}, Action{1, 2}};
  CHECK(t.choices() == std::vector<int>{3, 2});
}
