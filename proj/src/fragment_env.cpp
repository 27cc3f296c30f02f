#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "cmabgfn/distance.hpp"
#include "cmabgfn/envs.hpp"
#include "cmabgfn/rng.hpp"

namespace cmabgfn {

namespace {

double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }

// Preorder with children ordered by parent stem; parents are remapped.
std::vector<FragmentNode> canonicalize(const std::vector<FragmentNode>& in) {
  if (in.empty()) return {};
  std::vector<std::vector<int>> children(in.size());
  int root = -1;
  for (int i = 0; i < static_cast<int>(in.size()); ++i) {
    if (in[i].parent < 0) {
      root = i;
    } else {
      children[in[i].parent].push_back(i);
    }
  }
  for (auto& c : children) {
    std::sort(c.begin(), c.end(), [&](int a, int b) {
      return in[a].parent_stem < in[b].parent_stem;
    });
  }
  std::vector<FragmentNode> out;
  out.reserve(in.size());
  std::function<void(int, int)> visit = [&](int v, int new_parent) {
    const int me = static_cast<int>(out.size());
    out.push_back({in[v].block, new_parent, in[v].parent_stem});
    for (int c : children[v]) visit(c, me);
  };
  visit(root, -1);
  return out;
}

}  // namespace

FragmentConfig make_synthetic_fragment_config(const SyntheticFragmentSpec& spec) {
  require(spec.vocab >= 1 && spec.planted >= 0 && spec.planted <= spec.vocab,
          ErrorKind::kConfig, "fragment: planted count must be in [0, vocab]");
  FragmentConfig cfg;
  cfg.vocab = spec.vocab;
  cfg.max_blocks = spec.max_blocks;
  cfg.reward_low = spec.reward_low;
  cfg.reward_high = spec.reward_high;
  cfg.mode_threshold = spec.mode_threshold;
  cfg.similarity_threshold = spec.similarity_threshold;

  Rng rng = make_rng(spec.seed, "fragment-table");
  std::vector<int> order(spec.vocab);
  std::iota(order.begin(), order.end(), 0);
  for (int i = spec.vocab - 1; i > 0; --i) {
    std::swap(order[i], order[uniform_index(rng, i + 1)]);
  }
  std::vector<char> planted(spec.vocab, 0);
  for (int i = 0; i < spec.planted; ++i) planted[order[i]] = 1;

  cfg.stems.resize(spec.vocab);
  cfg.scores.resize(spec.vocab);
  for (int b = 0; b < spec.vocab; ++b) {
    cfg.stems[b] = 1 + static_cast<int>(uniform_index(rng, 3));
    if (planted[b]) {
      cfg.scores[b] = spec.planted_score + 0.1 * (uniform01(rng) - 0.5);
    } else {
      cfg.scores[b] = spec.base_mean + spec.base_std * normal01(rng);
    }
  }
  cfg.interactions.assign(static_cast<std::size_t>(spec.vocab) * spec.vocab, 0.0);
  for (int i = 0; i < spec.vocab; ++i) {
    for (int j = i; j < spec.vocab; ++j) {
      if (uniform01(rng) < spec.interaction_density) {
        const double v = spec.interaction_scale * (2.0 * uniform01(rng) - 1.0);
        cfg.interactions[static_cast<std::size_t>(i) * spec.vocab + j] = v;
        cfg.interactions[static_cast<std::size_t>(j) * spec.vocab + i] = v;
      }
    }
  }
  return cfg;
}

void validate(const FragmentConfig& cfg) {
  require(cfg.vocab >= 1, ErrorKind::kConfig, "fragment: vocab must be >= 1");
  require(cfg.max_blocks >= 1, ErrorKind::kConfig,
          "fragment: max fragments must be >= 1");
  require(static_cast<int>(cfg.stems.size()) == cfg.vocab &&
              static_cast<int>(cfg.scores.size()) == cfg.vocab &&
              cfg.interactions.size() ==
                  static_cast<std::size_t>(cfg.vocab) * cfg.vocab,
          ErrorKind::kConfig, "fragment: table sizes do not match vocab");
  for (int b = 0; b < cfg.vocab; ++b) {
    require(cfg.stems[b] >= 1 && cfg.stems[b] <= 3, ErrorKind::kConfig,
            "fragment: stem counts must be in [1, 3]");
    require(std::isfinite(cfg.scores[b]), ErrorKind::kConfig,
            "fragment: non-finite block score");
    for (int c = 0; c < cfg.vocab; ++c) {
      require(std::isfinite(cfg.interaction(b, c)) &&
                  cfg.interaction(b, c) == cfg.interaction(c, b),
              ErrorKind::kConfig, "fragment: interaction table must be symmetric");
    }
  }
  require(cfg.reward_low >= 0.0 && cfg.reward_high > cfg.reward_low,
          ErrorKind::kConfig, "fragment: reward range must satisfy 0 <= low < high");
  require(cfg.similarity_threshold >= 0.0 && cfg.similarity_threshold <= 1.0,
          ErrorKind::kConfig, "fragment: similarity threshold must be in [0, 1]");
}

double fragment_reward(const State& g, const FragmentConfig& cfg) {
  const auto nodes = FragmentEnv::nodes(g);
  require(!nodes.empty(), ErrorKind::kEmptyGraph, "fragment: empty graph");
  double s = 0.0;
  for (const auto& n : nodes) {
    s += cfg.scores.at(n.block);
    if (n.parent >= 0) s += cfg.interaction(nodes[n.parent].block, n.block);
  }
  return cfg.reward_low + (cfg.reward_high - cfg.reward_low) * logistic(s);
}

FragmentEnv::FragmentEnv(FragmentConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  const int s_max = *std::max_element(cfg_.stems.begin(), cfg_.stems.end());
  max_open_ = cfg_.max_blocks <= 1
                  ? 1
                  : s_max + (cfg_.max_blocks - 2) * (s_max - 1);
  max_open_ = std::max(max_open_, 1);
}

std::vector<FragmentNode> FragmentEnv::nodes(const State& s) {
  std::vector<FragmentNode> out(s.cells.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {s.cells[3 * i], s.cells[3 * i + 1], s.cells[3 * i + 2]};
  }
  return out;
}

State FragmentEnv::from_nodes(const std::vector<FragmentNode>& nodes) {
  State s;
  s.cells.reserve(nodes.size() * 3);
  for (const auto& n : nodes) {
    s.cells.push_back(n.block);
    s.cells.push_back(n.parent);
    s.cells.push_back(n.parent_stem);
  }
  return s;
}

std::vector<std::pair<int, int>> FragmentEnv::open_stems(const State& s) const {
  const auto ns = nodes(s);
  std::vector<std::vector<char>> used(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    used[i].assign(cfg_.stems[ns[i].block], 0);
  }
  for (const auto& n : ns) {
    if (n.parent >= 0) used[n.parent][n.parent_stem] = 1;
  }
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    for (int st = 0; st < static_cast<int>(used[i].size()); ++st) {
      if (!used[i][st]) out.emplace_back(static_cast<int>(i), st);
    }
  }
  return out;
}

std::vector<int> FragmentEnv::blocks(const State& s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < s.cells.size(); i += 3) out.push_back(s.cells[i]);
  return out;
}

bool FragmentEnv::is_terminal(const State& s) const {
  return static_cast<int>(s.cells.size() / 3) >= cfg_.max_blocks;
}

std::vector<Action> FragmentEnv::legal_actions(const State& s) const {
  require(!is_terminal(s), ErrorKind::kPrecondition,
          "fragment: no actions at a terminal state");
  std::vector<Action> out;
  const int locators =
      s.cells.empty() ? 1 : static_cast<int>(open_stems(s).size());
  out.reserve(static_cast<std::size_t>(locators) * cfg_.vocab);
  for (int loc = 0; loc < locators; ++loc) {
    for (int b = 0; b < cfg_.vocab; ++b) out.push_back({loc, b});
  }
  return out;
}

State FragmentEnv::apply(const State& s, const Action& a) const {
  if (is_terminal(s) || a.choice < 0 || a.choice >= cfg_.vocab) {
    fail(ErrorKind::kInvalidAction, "fragment: illegal action at " + render(s));
  }
  if (s.cells.empty()) {
    require(a.locator == 0, ErrorKind::kInvalidAction,
            "fragment: the root is placed with locator 0");
    return from_nodes({{a.choice, -1, -1}});
  }
  const auto open = open_stems(s);
  require(a.locator >= 0 && a.locator < static_cast<int>(open.size()),
          ErrorKind::kInvalidAction,
          "fragment: stem " + std::to_string(a.locator) + " is not open");
  auto ns = nodes(s);
  ns.push_back({a.choice, open[a.locator].first, open[a.locator].second});
  return from_nodes(canonicalize(ns));
}

int FragmentEnv::num_parents(const State& s) const {
  const auto ns = nodes(s);
  if (ns.size() <= 1) return static_cast<int>(ns.size());
  std::vector<char> has_child(ns.size(), 0);
  for (const auto& n : ns) {
    if (n.parent >= 0) has_child[n.parent] = 1;
  }
  int leaves = 0;
  for (std::size_t i = 1; i < ns.size(); ++i) leaves += !has_child[i];
  return leaves;
}

double FragmentEnv::reward(const State& x) const {
  return fragment_reward(x, cfg_);
}

int FragmentEnv::action_index(const Action& a) const {
  return a.locator * cfg_.vocab + a.choice;
}

int FragmentEnv::feature_size() const {
  return cfg_.max_blocks * cfg_.vocab + max_open_ * cfg_.max_blocks +
         cfg_.max_blocks + 1;
}

void FragmentEnv::encode(const State& s, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const auto ns = nodes(s);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    out[i * cfg_.vocab + ns[i].block] = 1.0;
  }
  const std::size_t stem_base =
      static_cast<std::size_t>(cfg_.max_blocks) * cfg_.vocab;
  if (!is_terminal(s)) {
    const auto open = open_stems(s);
    for (std::size_t k = 0; k < open.size() && k < static_cast<std::size_t>(max_open_); ++k) {
      out[stem_base + k * cfg_.max_blocks + open[k].first] = 1.0;
    }
  }
  const std::size_t count_base =
      stem_base + static_cast<std::size_t>(max_open_) * cfg_.max_blocks;
  out[count_base + ns.size()] = 1.0;
}

std::string FragmentEnv::render(const State& s) const {
  std::ostringstream os;
  const auto ns = nodes(s);
  os << '[';
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (i) os << ' ';
    os << ns[i].block;
    if (ns[i].parent >= 0) os << '@' << ns[i].parent << '.' << ns[i].parent_stem;
  }
  os << ']';
  return os.str();
}

double FragmentEnv::similarity(const State& a, const State& b) const {
  require(a.cells.size() % 3 == 0 && b.cells.size() % 3 == 0,
          ErrorKind::kEnvMismatch, "fragment: similarity of non-fragment states");
  auto ba = blocks(a), bb = blocks(b);
  std::sort(ba.begin(), ba.end());
  std::sort(bb.begin(), bb.end());
  return multiset_jaccard_sorted(ba, bb);
}

std::string FragmentEnv::artifact() const {
  std::ostringstream os;
  os.precision(17);
  os << "env = fragment\n"
     << "vocab = " << cfg_.vocab << "\n"
     << "max_blocks = " << cfg_.max_blocks << "\n"
     << "reward_low = " << cfg_.reward_low << "\n"
     << "reward_high = " << cfg_.reward_high << "\n"
     << "mode_threshold = " << cfg_.mode_threshold << "\n"
     << "similarity_threshold = " << cfg_.similarity_threshold << "\n";
  for (int b = 0; b < cfg_.vocab; ++b) {
    os << "block." << b << " = " << cfg_.stems[b] << " " << cfg_.scores[b] << "\n";
  }
  for (int i = 0; i < cfg_.vocab; ++i) {
    for (int j = i; j < cfg_.vocab; ++j) {
      if (cfg_.interaction(i, j) != 0.0) {
        os << "interaction." << i << "." << j << " = " << cfg_.interaction(i, j)
           << "\n";
      }
    }
  }
  return os.str();
}

}  // namespace cmabgfn
