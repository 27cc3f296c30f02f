#include "cmabgfn/env.hpp"

#include <algorithm>
#include <sstream>

namespace cmabgfn {

std::size_t StateHash::operator()(const State& s) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ s.cells.size();
  for (int c : s.cells) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

ArmSpace::ArmSpace(int alphabet_size, int composite_length)
    : alphabet_(alphabet_size), length_(composite_length), num_arms_(1) {
  require(alphabet_size >= 1, ErrorKind::kConfig, "alphabet size must be >= 1");
  require(composite_length >= 1, ErrorKind::kConfig,
          "composite arm length must be >= 1");
  for (int i = 0; i < composite_length; ++i) {
    require(num_arms_ <= (1 << 24) / alphabet_size, ErrorKind::kConfig,
            "composite arm alphabet too large");
    num_arms_ *= alphabet_size;
  }
}

ArmId ArmSpace::encode(std::span<const int> choices) const {
  ArmId id = 0;
  for (int c : choices) id = id * alphabet_ + c;
  return id;
}

std::vector<int> ArmSpace::decode(ArmId arm) const {
  std::vector<int> out(length_);
  for (int i = length_ - 1; i >= 0; --i) {
    out[i] = arm % alphabet_;
    arm /= alphabet_;
  }
  return out;
}

std::vector<ArmId> ArmSpace::project(std::span<const int> choices) const {
  std::vector<ArmId> arms;
  const std::size_t groups = choices.size() / length_;
  arms.reserve(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    arms.push_back(encode(choices.subspan(g * length_, length_)));
  }
  return arms;
}

SuperArm::SuperArm(const ArmSpace& space, std::vector<ArmId> members)
    : all_(false), alphabet_(space.alphabet_size()), members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  require(!members_.empty(), ErrorKind::kConfig, "super arm must be non-empty");
  require(std::adjacent_find(members_.begin(), members_.end()) == members_.end(),
          ErrorKind::kConfig, "super arm members must be distinct");
  require(members_.front() >= 0 && members_.back() < space.num_arms(),
          ErrorKind::kOutOfRange, "super arm member outside arm space");
  const int t = space.composite_length();
  legal_.resize(t);
  int width = 1;
  for (int p = 0; p < t; ++p) {
    width *= alphabet_;
    legal_[p].assign(width, 0);
  }
  for (ArmId arm : members_) {
    const auto choices = space.decode(arm);
    int code = 0;
    for (int p = 0; p < t; ++p) {
      code = code * alphabet_ + choices[p];
      legal_[p][code] = 1;
    }
  }
}

bool SuperArm::contains(ArmId arm) const {
  if (all_) return true;
  return std::binary_search(members_.begin(), members_.end(), arm);
}

bool SuperArm::allows(std::span<const int> prefix, int choice) const {
  if (all_) return true;
  const std::size_t p = prefix.size();
  if (p >= legal_.size() || choice < 0 || choice >= alphabet_) return false;
  int code = 0;
  for (int c : prefix) code = code * alphabet_ + c;
  code = code * alphabet_ + choice;
  return legal_[p][code] != 0;
}

std::string SuperArm::to_string() const {
  if (all_) return "ALL";
  std::ostringstream os;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i) os << ' ';
    os << members_[i];
  }
  return os.str();
}

std::optional<ArmId> arm_projection(const ArmSpace& space,
                                    std::span<const int> prefix,
                                    const Action& action) {
  if (static_cast<int>(prefix.size()) + 1 != space.composite_length()) {
    return std::nullopt;
  }
  ArmId id = space.encode(prefix);
  return id * space.alphabet_size() + action.choice;
}

void Environment::check_action(const State& s, const Action& a) const {
  const auto legal = legal_actions(s);
  if (!std::binary_search(legal.begin(), legal.end(), a)) {
    fail(ErrorKind::kInvalidAction,
         std::string(name()) + ": action (" + std::to_string(a.locator) + ", " +
             std::to_string(a.choice) + ") is not legal in state " + render(s));
  }
}

std::vector<Action> available_actions(const Environment& env, const State& s,
                                      const SuperArm& restriction,
                                      std::span<const int> prefix) {
  std::vector<Action> actions = env.legal_actions(s);
  if (restriction.is_all()) return actions;
  std::erase_if(actions, [&](const Action& a) {
    return !restriction.allows(prefix, a.choice);
  });
  if (actions.empty()) {
    fail(ErrorKind::kEmptyActionSet,
         "restriction {" + restriction.to_string() +
             "} removes every action at state " + env.render(s));
  }
  return actions;
}

std::vector<int> Trajectory::choices() const {
  std::vector<int> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(a.choice);
  return out;
}

}  // namespace cmabgfn
