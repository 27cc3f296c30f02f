#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cmabgfn/env.hpp"

namespace cmabgfn {

// ---------------------------------------------------------------------------
// Bit sequences built by inserting k-bit words into n/k slots in any order.
// State cells: one per slot, -1 when empty, else the word id (big-endian bits).

struct BitSeqConfig {
  int n = 16;
  int k = 4;
  std::vector<std::string> modes;
  int delta = 2;
};

void validate(const BitSeqConfig& cfg);

// Modes made by concatenating randomly chosen base patterns until length n.
// Duplicates are skipped; returns fewer than `count` modes only if the
// pattern combinations are exhausted.
std::vector<std::string> make_pattern_modes(
    int n, const std::vector<std::string>& patterns, int count,
    std::uint64_t seed);

double bitseq_reward(std::string_view x, const BitSeqConfig& cfg);

class BitSeqEnv final : public Environment {
 public:
  explicit BitSeqEnv(BitSeqConfig cfg);

  const BitSeqConfig& config() const { return cfg_; }
  int slots() const { return slots_; }
  std::string word_string(int word) const;

  std::string_view name() const override { return "bitseq"; }
  State initial_state() const override;
  bool is_terminal(const State& s) const override;
  int horizon() const override { return slots_; }
  std::vector<Action> legal_actions(const State& s) const override;
  State apply(const State& s, const Action& a) const override;
  int num_parents(const State& s) const override;
  double reward(const State& x) const override;
  int alphabet_size() const override { return words_; }
  int action_space_size() const override { return slots_ * words_; }
  int action_index(const Action& a) const override;
  int feature_size() const override { return slots_ * (words_ + 1); }
  void encode(const State& s, std::span<double> out) const override;
  std::string render(const State& s) const override;
  ModeRule mode_rule() const override { return ModeRule::kFixedSet; }
  std::optional<int> fixed_mode(const State& x) const override;
  int num_fixed_modes() const override {
    return static_cast<int>(cfg_.modes.size());
  }
  double similarity(const State& a, const State& b) const override;
  std::optional<double> terminal_count() const override;
  std::string artifact() const override;

 private:
  BitSeqConfig cfg_;
  int slots_;
  int words_;
};

// ---------------------------------------------------------------------------
// Prepend/append token strings of fixed length L. State cells: the tokens.
// Locator 0 appends, locator 1 prepends; the empty state only appends so that
// every length-1 string has a single incoming edge.

struct SeqDesignConfig {
  int alphabet = 4;
  int length = 8;
  std::vector<std::string> peaks;
  double scale = 1.0;
  int mode_radius = 1;
};

inline constexpr std::string_view kTokenTable = "ACGU";

void validate(const SeqDesignConfig& cfg);
std::vector<std::string> make_random_peaks(int alphabet, int length, int count,
                                           std::uint64_t seed);
double seq_reward(std::string_view x, const SeqDesignConfig& cfg);

class SeqDesignEnv final : public Environment {
 public:
  static constexpr int kAppend = 0;
  static constexpr int kPrepend = 1;

  explicit SeqDesignEnv(SeqDesignConfig cfg);

  const SeqDesignConfig& config() const { return cfg_; }

  std::string_view name() const override { return "seq"; }
  State initial_state() const override { return {}; }
  bool is_terminal(const State& s) const override;
  int horizon() const override { return cfg_.length; }
  std::vector<Action> legal_actions(const State& s) const override;
  State apply(const State& s, const Action& a) const override;
  int num_parents(const State& s) const override;
  double reward(const State& x) const override;
  int alphabet_size() const override { return cfg_.alphabet; }
  int action_space_size() const override { return 2 * cfg_.alphabet; }
  int action_index(const Action& a) const override;
  int feature_size() const override;
  void encode(const State& s, std::span<double> out) const override;
  std::string render(const State& s) const override;
  State parse(std::string_view tokens) const;
  ModeRule mode_rule() const override { return ModeRule::kFixedSet; }
  std::optional<int> fixed_mode(const State& x) const override;
  int num_fixed_modes() const override {
    return static_cast<int>(cfg_.peaks.size());
  }
  double similarity(const State& a, const State& b) const override;
  std::optional<double> terminal_count() const override;
  std::string artifact() const override;

 private:
  SeqDesignConfig cfg_;
};

// ---------------------------------------------------------------------------
// Fragment assembly: a rooted tree of blocks. Every block exposes
// stems[block] attachment points; attaching a child consumes one open stem of
// the parent and adds the child's own stems, so a non-terminal state always
// has an open stem. The first action places the root (locator 0).
//
// State cells: triples (block, parent node, parent stem) in canonical
// preorder, children visited by stem index; the root has parent -1, stem -1.

struct FragmentConfig {
  int vocab = 32;
  int max_blocks = 8;
  std::vector<int> stems;                 // per block, 1..3
  std::vector<double> scores;             // per block
  std::vector<double> interactions;       // vocab x vocab, symmetric
  double reward_low = 0.0;
  double reward_high = 10.0;
  double mode_threshold = 7.5;
  double similarity_threshold = 0.7;

  double interaction(int a, int b) const {
    return interactions[static_cast<std::size_t>(a) * vocab + b];
  }
};

// Parameters of the seeded synthetic reward table.
struct SyntheticFragmentSpec {
  int vocab = 32;
  int max_blocks = 8;
  int planted = 8;              // number of high-scoring blocks
  double planted_score = 0.45;
  double base_mean = -0.35;
  double base_std = 0.15;
  double interaction_density = 0.05;
  double interaction_scale = 0.3;
  double reward_low = 0.0;
  double reward_high = 10.0;
  double mode_threshold = 7.5;
  double similarity_threshold = 0.7;
  std::uint64_t seed = 0;
};

FragmentConfig make_synthetic_fragment_config(const SyntheticFragmentSpec& spec);
void validate(const FragmentConfig& cfg);

struct FragmentNode {
  int block = 0;
  int parent = -1;
  int parent_stem = -1;
};

class FragmentEnv final : public Environment {
 public:
  explicit FragmentEnv(FragmentConfig cfg);

  const FragmentConfig& config() const { return cfg_; }
  int max_open_stems() const { return max_open_; }

  static std::vector<FragmentNode> nodes(const State& s);
  static State from_nodes(const std::vector<FragmentNode>& nodes);
  // Open stems as (node index, stem index) in canonical order.
  std::vector<std::pair<int, int>> open_stems(const State& s) const;
  std::vector<int> blocks(const State& s) const;

  std::string_view name() const override { return "fragment"; }
  State initial_state() const override { return {}; }
  bool is_terminal(const State& s) const override;
  int horizon() const override { return cfg_.max_blocks; }
  std::vector<Action> legal_actions(const State& s) const override;
  State apply(const State& s, const Action& a) const override;
  int num_parents(const State& s) const override;
  double reward(const State& x) const override;
  int alphabet_size() const override { return cfg_.vocab; }
  int action_space_size() const override { return max_open_ * cfg_.vocab; }
  int action_index(const Action& a) const override;
  int feature_size() const override;
  void encode(const State& s, std::span<double> out) const override;
  std::string render(const State& s) const override;
  ModeRule mode_rule() const override {
    return ModeRule::kSimilaritySeparated;
  }
  std::optional<int> fixed_mode(const State&) const override {
    return std::nullopt;
  }
  double mode_reward_threshold() const override { return cfg_.mode_threshold; }
  double mode_similarity_threshold() const override {
    return cfg_.similarity_threshold;
  }
  double similarity(const State& a, const State& b) const override;
  std::string artifact() const override;

 private:
  FragmentConfig cfg_;
  int max_open_;
};

double fragment_reward(const State& g, const FragmentConfig& cfg);

}  // namespace cmabgfn
