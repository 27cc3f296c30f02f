#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "cmabgfn/distance.hpp"
#include "cmabgfn/envs.hpp"
#include "cmabgfn/rng.hpp"

namespace cmabgfn {

void validate(const SeqDesignConfig& cfg) {
  require(cfg.alphabet >= 1 && cfg.alphabet <= static_cast<int>(kTokenTable.size()),
          ErrorKind::kConfig, "seq: alphabet must be in [1, 4]");
  require(cfg.length >= 1, ErrorKind::kConfig, "seq: length must be >= 1");
  require(!cfg.peaks.empty(), ErrorKind::kConfig, "seq: peak set is empty");
  require(cfg.scale > 0.0 && std::isfinite(cfg.scale), ErrorKind::kConfig,
          "seq: scale must be positive");
  require(cfg.mode_radius >= 0, ErrorKind::kConfig, "seq: mode radius must be >= 0");
  const auto tokens = kTokenTable.substr(0, cfg.alphabet);
  for (const auto& p : cfg.peaks) {
    require(static_cast<int>(p.size()) == cfg.length, ErrorKind::kConfig,
            "seq: peak '" + p + "' does not have length L");
    require(p.find_first_not_of(tokens) == std::string::npos, ErrorKind::kConfig,
            "seq: peak '" + p + "' uses tokens outside the alphabet");
  }
}

std::vector<std::string> make_random_peaks(int alphabet, int length, int count,
                                           std::uint64_t seed) {
  Rng rng = make_rng(seed, "seq-peaks");
  std::vector<std::string> peaks;
  std::set<std::string> seen;
  const double space = std::pow(static_cast<double>(alphabet), length);
  const int target = static_cast<int>(std::min<double>(count, space));
  while (static_cast<int>(peaks.size()) < target) {
    std::string p(length, 'A');
    for (auto& c : p) c = kTokenTable[uniform_index(rng, alphabet)];
    if (seen.insert(p).second) peaks.push_back(p);
  }
  return peaks;
}

double seq_reward(std::string_view x, const SeqDesignConfig& cfg) {
  require(static_cast<int>(x.size()) == cfg.length, ErrorKind::kLengthMismatch,
          "seq: reward needs a length-L string");
  int best = std::numeric_limits<int>::max();
  for (const auto& p : cfg.peaks) best = std::min(best, hamming(x, p));
  return cfg.scale * std::exp(-static_cast<double>(best));
}

SeqDesignEnv::SeqDesignEnv(SeqDesignConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
}

bool SeqDesignEnv::is_terminal(const State& s) const {
  return static_cast<int>(s.cells.size()) >= cfg_.length;
}

std::vector<Action> SeqDesignEnv::legal_actions(const State& s) const {
  require(!is_terminal(s), ErrorKind::kPrecondition,
          "seq: no actions at a terminal state");
  std::vector<Action> out;
  const int locators = s.cells.empty() ? 1 : 2;
  for (int loc = 0; loc < locators; ++loc) {
    for (int c = 0; c < cfg_.alphabet; ++c) out.push_back({loc, c});
  }
  return out;
}

State SeqDesignEnv::apply(const State& s, const Action& a) const {
  const int locators = s.cells.empty() ? 1 : 2;
  if (is_terminal(s) || a.locator < 0 || a.locator >= locators ||
      a.choice < 0 || a.choice >= cfg_.alphabet) {
    fail(ErrorKind::kInvalidAction, "seq: illegal action at " + render(s));
  }
  State next;
  next.cells.reserve(s.cells.size() + 1);
  if (a.locator == kPrepend) next.cells.push_back(a.choice);
  next.cells.insert(next.cells.end(), s.cells.begin(), s.cells.end());
  if (a.locator == kAppend) next.cells.push_back(a.choice);
  return next;
}

int SeqDesignEnv::num_parents(const State& s) const {
  return std::min<int>(static_cast<int>(s.cells.size()), 2);
}

double SeqDesignEnv::reward(const State& x) const {
  return seq_reward(render(x), cfg_);
}

int SeqDesignEnv::action_index(const Action& a) const {
  return a.locator * cfg_.alphabet + a.choice;
}

int SeqDesignEnv::feature_size() const {
  return cfg_.length * (cfg_.alphabet + 1) + cfg_.length + 1;
}

void SeqDesignEnv::encode(const State& s, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const int width = cfg_.alphabet + 1;
  const int len = static_cast<int>(s.cells.size());
  for (int p = 0; p < cfg_.length; ++p) {
    out[p * width + (p < len ? s.cells[p] : cfg_.alphabet)] = 1.0;
  }
  out[cfg_.length * width + len] = 1.0;
}

std::string SeqDesignEnv::render(const State& s) const {
  std::string out;
  out.reserve(s.cells.size());
  for (int c : s.cells) out += kTokenTable[c];
  return out;
}

State SeqDesignEnv::parse(std::string_view tokens) const {
  State s;
  for (char ch : tokens) {
    const auto pos = kTokenTable.substr(0, cfg_.alphabet).find(ch);
    require(pos != std::string_view::npos, ErrorKind::kConfig,
            std::string("seq: unknown token '") + ch + "'");
    s.cells.push_back(static_cast<int>(pos));
  }
  return s;
}

std::optional<int> SeqDesignEnv::fixed_mode(const State& x) const {
  const std::string str = render(x);
  if (static_cast<int>(str.size()) != cfg_.length) return std::nullopt;
  std::optional<int> best;
  int best_d = std::numeric_limits<int>::max();
  for (int i = 0; i < static_cast<int>(cfg_.peaks.size()); ++i) {
    const int d = hamming(str, cfg_.peaks[i]);
    if (d <= cfg_.mode_radius && d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

double SeqDesignEnv::similarity(const State& a, const State& b) const {
  require(a.cells.size() == b.cells.size(), ErrorKind::kEnvMismatch,
          "seq: similarity across different lengths");
  if (a.cells.empty()) return 1.0;
  return 1.0 - static_cast<double>(hamming(render(a), render(b))) /
                   static_cast<double>(a.cells.size());
}

std::optional<double> SeqDesignEnv::terminal_count() const {
  return std::pow(static_cast<double>(cfg_.alphabet), cfg_.length);
}

std::string SeqDesignEnv::artifact() const {
  std::ostringstream os;
  os.precision(17);
  os << "env = seq\n"
     << "alphabet = " << cfg_.alphabet << "\n"
     << "length = " << cfg_.length << "\n"
     << "scale = " << cfg_.scale << "\n"
     << "mode_radius = " << cfg_.mode_radius << "\n"
     << "num_peaks = " << cfg_.peaks.size() << "\n";
  for (std::size_t i = 0; i < cfg_.peaks.size(); ++i) {
    os << "peak." << i << " = " << cfg_.peaks[i] << "\n";
  }
  return os.str();
}

}  // namespace cmabgfn
