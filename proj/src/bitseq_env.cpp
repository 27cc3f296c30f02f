#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "cmabgfn/distance.hpp"
#include "cmabgfn/envs.hpp"
#include "cmabgfn/rng.hpp"

namespace cmabgfn {

void validate(const BitSeqConfig& cfg) {
  require(cfg.k >= 1 && cfg.k <= 16, ErrorKind::kConfig, "bitseq: k must be in [1, 16]");
  require(cfg.n >= cfg.k && cfg.n % cfg.k == 0, ErrorKind::kConfig,
          "bitseq: k must divide n");
  require(cfg.delta >= 0, ErrorKind::kConfig, "bitseq: delta must be >= 0");
  require(!cfg.modes.empty(), ErrorKind::kConfig, "bitseq: mode set is empty");
  for (const auto& m : cfg.modes) {
    require(static_cast<int>(m.size()) == cfg.n, ErrorKind::kConfig,
            "bitseq: mode '" + m + "' does not have length n");
    require(m.find_first_not_of("01") == std::string::npos, ErrorKind::kConfig,
            "bitseq: mode '" + m + "' is not a bit string");
  }
}

std::vector<std::string> make_pattern_modes(
    int n, const std::vector<std::string>& patterns, int count,
    std::uint64_t seed) {
  require(!patterns.empty(), ErrorKind::kConfig, "no base patterns");
  Rng rng = make_rng(seed, "bitseq-modes");
  std::vector<std::string> modes;
  std::set<std::string> seen;
  for (int attempt = 0; attempt < 1000 * count && static_cast<int>(modes.size()) < count;
       ++attempt) {
    std::string m;
    while (static_cast<int>(m.size()) < n) {
      m += patterns[uniform_index(rng, patterns.size())];
    }
    m.resize(n);
    if (seen.insert(m).second) modes.push_back(m);
  }
  return modes;
}

double bitseq_reward(std::string_view x, const BitSeqConfig& cfg) {
  require(static_cast<int>(x.size()) == cfg.n &&
              x.find_first_not_of("01") == std::string_view::npos,
          ErrorKind::kIncompleteState, "bitseq reward needs a full bit string");
  int best = std::numeric_limits<int>::max();
  for (const auto& m : cfg.modes) best = std::min(best, levenshtein(x, m));
  return std::exp(-static_cast<double>(best));
}

BitSeqEnv::BitSeqEnv(BitSeqConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  slots_ = cfg_.n / cfg_.k;
  words_ = 1 << cfg_.k;
}

std::string BitSeqEnv::word_string(int word) const {
  std::string s(cfg_.k, '0');
  for (int b = 0; b < cfg_.k; ++b) {
    if (word & (1 << (cfg_.k - 1 - b))) s[b] = '1';
  }
  return s;
}

State BitSeqEnv::initial_state() const {
  return State{std::vector<int>(slots_, -1)};
}

bool BitSeqEnv::is_terminal(const State& s) const {
  return std::none_of(s.cells.begin(), s.cells.end(),
                      [](int c) { return c < 0; });
}

std::vector<Action> BitSeqEnv::legal_actions(const State& s) const {
  require(!is_terminal(s), ErrorKind::kPrecondition,
          "bitseq: no actions at a terminal state");
  std::vector<Action> out;
  for (int p = 0; p < slots_; ++p) {
    if (s.cells[p] >= 0) continue;
    for (int w = 0; w < words_; ++w) out.push_back({p, w});
  }
  return out;
}

State BitSeqEnv::apply(const State& s, const Action& a) const {
  if (a.locator < 0 || a.locator >= slots_ || a.choice < 0 ||
      a.choice >= words_ || s.cells.at(a.locator) >= 0) {
    fail(ErrorKind::kInvalidAction, "bitseq: illegal insertion at slot " +
                                        std::to_string(a.locator));
  }
  State next = s;
  next.cells[a.locator] = a.choice;
  return next;
}

int BitSeqEnv::num_parents(const State& s) const {
  return static_cast<int>(std::count_if(s.cells.begin(), s.cells.end(),
                                        [](int c) { return c >= 0; }));
}

double BitSeqEnv::reward(const State& x) const {
  require(is_terminal(x), ErrorKind::kIncompleteState,
          "bitseq: reward of an unfilled state");
  return bitseq_reward(render(x), cfg_);
}

int BitSeqEnv::action_index(const Action& a) const {
  return a.locator * words_ + a.choice;
}

void BitSeqEnv::encode(const State& s, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (int p = 0; p < slots_; ++p) {
    const int c = s.cells[p];
    out[p * (words_ + 1) + (c < 0 ? words_ : c)] = 1.0;
  }
}

std::string BitSeqEnv::render(const State& s) const {
  std::string out;
  out.reserve(cfg_.n);
  for (int c : s.cells) {
    out += c < 0 ? std::string(cfg_.k, '_') : word_string(c);
  }
  return out;
}

std::optional<int> BitSeqEnv::fixed_mode(const State& x) const {
  const std::string bits = render(x);
  std::optional<int> best;
  int best_d = std::numeric_limits<int>::max();
  for (int i = 0; i < static_cast<int>(cfg_.modes.size()); ++i) {
    const int d = levenshtein(bits, cfg_.modes[i]);
    if (d < cfg_.delta && d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

double BitSeqEnv::similarity(const State& a, const State& b) const {
  require(a.cells.size() == b.cells.size(), ErrorKind::kEnvMismatch,
          "bitseq: similarity across different shapes");
  return 1.0 - static_cast<double>(hamming(render(a), render(b))) / cfg_.n;
}

std::optional<double> BitSeqEnv::terminal_count() const {
  return std::pow(2.0, cfg_.n);
}

std::string BitSeqEnv::artifact() const {
  std::ostringstream os;
  os << "env = bitseq\n"
     << "n = " << cfg_.n << "\n"
     << "k = " << cfg_.k << "\n"
     << "delta = " << cfg_.delta << "\n"
     << "num_modes = " << cfg_.modes.size() << "\n";
  for (std::size_t i = 0; i < cfg_.modes.size(); ++i) {
    os << "mode." << i << " = " << cfg_.modes[i] << "\n";
  }
  return os.str();
}

}  // namespace cmabgfn
