#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmabgfn/errors.hpp"

namespace cmabgfn {

using ArmId = int;

// Environment-specific cell encoding of a DAG node. Each environment documents
// its own layout; equality is structural.
struct State {
  std::vector<int> cells;

  friend bool operator==(const State&, const State&) = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept;
};

// (where, what): a state-dependent locator and a state-independent primitive
// choice. The choice id is what the bandit sees.
struct Action {
  int locator = 0;
  int choice = 0;

  friend auto operator<=>(const Action&, const Action&) = default;
};

// Bandit arm alphabet: primitive choices (composite length 1) or ordered
// tuples of `composite_length` consecutive choices, numbered big-endian.
class ArmSpace {
 public:
  ArmSpace(int alphabet_size, int composite_length);

  int alphabet_size() const { return alphabet_; }
  int composite_length() const { return length_; }
  int num_arms() const { return num_arms_; }

  ArmId encode(std::span<const int> choices) const;
  std::vector<int> decode(ArmId arm) const;

  // Completed arms of a choice history, in order. A trailing partial group
  // is dropped.
  std::vector<ArmId> project(std::span<const int> choices) const;

 private:
  int alphabet_;
  int length_;
  int num_arms_;
};

// A restriction over the arm space. The default-constructed value is the
// ALL sentinel (no restriction).
class SuperArm {
 public:
  SuperArm() = default;
  SuperArm(const ArmSpace& space, std::vector<ArmId> members);

  static SuperArm all() { return SuperArm(); }

  bool is_all() const { return all_; }
  int size() const { return static_cast<int>(members_.size()); }
  const std::vector<ArmId>& members() const { return members_; }
  bool contains(ArmId arm) const;

  // True if `prefix` followed by `choice` extends at least one member.
  // `prefix` holds the choices already made inside the current group.
  bool allows(std::span<const int> prefix, int choice) const;

  std::string to_string() const;

  friend bool operator==(const SuperArm& a, const SuperArm& b) {
    return a.all_ == b.all_ && a.members_ == b.members_;
  }

 private:
  bool all_ = true;
  int alphabet_ = 0;
  std::vector<ArmId> members_;
  // legal_[p][code] for prefixes of length p + 1.
  std::vector<std::vector<char>> legal_;
};

// The arm an action contributes to given the partial group preceding it, or
// nothing when the action does not complete a group.
std::optional<ArmId> arm_projection(const ArmSpace& space,
                                    std::span<const int> prefix,
                                    const Action& action);

enum class ModeRule {
  kFixedSet,          // environment-declared mode identities
  kSimilaritySeparated  // reward threshold plus similarity separation
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view name() const = 0;

  virtual State initial_state() const = 0;
  virtual bool is_terminal(const State& s) const = 0;
  // Fixed trajectory length (all environments terminate at a fixed horizon).
  virtual int horizon() const = 0;

  // Full A_s, sorted by (locator, choice). Throws kPrecondition on terminals.
  virtual std::vector<Action> legal_actions(const State& s) const = 0;
  virtual State apply(const State& s, const Action& a) const = 0;
  // Number of incoming edges of `s` in the unrestricted DAG.
  virtual int num_parents(const State& s) const = 0;

  virtual double reward(const State& x) const = 0;

  virtual int alphabet_size() const = 0;
  virtual int action_space_size() const = 0;
  virtual int action_index(const Action& a) const = 0;

  virtual int feature_size() const = 0;
  virtual void encode(const State& s, std::span<double> out) const = 0;

  virtual std::string render(const State& s) const = 0;

  virtual ModeRule mode_rule() const = 0;
  virtual std::optional<int> fixed_mode(const State& x) const = 0;
  virtual int num_fixed_modes() const { return 0; }
  virtual double mode_reward_threshold() const { return 0.0; }
  virtual double mode_similarity_threshold() const { return 1.0; }
  virtual double similarity(const State& a, const State& b) const = 0;

  // Smallest super-arm size that keeps every reachable state non-empty.
  virtual int k_min() const { return 1; }

  // Number of terminal objects, if cheap to compute; used for enumeration
  // guards.
  virtual std::optional<double> terminal_count() const { return std::nullopt; }

  // Plain-text key = value dump of everything that defines the instance.
  virtual std::string artifact() const = 0;

  void check_action(const State& s, const Action& a) const;
};

// A_s filtered to actions whose arm projection is permitted by the
// restriction. `prefix` is the partial composite group (empty when the
// composite length is 1). Throws kEmptyActionSet if nothing survives.
std::vector<Action> available_actions(const Environment& env, const State& s,
                                      const SuperArm& restriction,
                                      std::span<const int> prefix = {});

enum class Provenance : std::uint8_t { kTrain, kEval };

struct Trajectory {
  std::vector<State> states;     // s_0 .. x
  std::vector<Action> actions;   // |states| - 1
  std::vector<double> log_pf;    // policy log-probabilities of taken steps
  std::vector<double> log_pb;    // uniform backward log-probabilities
  // Legal action-space indices at each step under the sampling restriction.
  std::vector<std::vector<int>> legal;
  double reward = 0.0;
  Provenance provenance = Provenance::kTrain;

  const State& terminal() const { return states.back(); }
  std::vector<int> choices() const;
};

}  // namespace cmabgfn
