#include "cmabgfn/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cmabgfn {
namespace {

// Reads one mapping, remembering which keys were consumed so the rest can be
// rejected as unknown.
class Section {
 public:
  Section(const YAML::Node& node, std::string name)
      : node_(node), name_(std::move(name)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      fail(ErrorKind::kConfig, "section '" + name_ + "' must be a mapping");
    }
  }

  bool has(const std::string& key) const {
    return node_ && node_.IsMap() && node_[key];
  }

  std::string scalar(const std::string& key) {
    used_.insert(key);
    const YAML::Node v = node_[key];
    if (!v.IsScalar()) fail(ErrorKind::kConfig, where(key) + " must be a scalar");
    return v.Scalar();
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    if (!has(key)) return;
    const std::string s = scalar(key);
    T v{};
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) {
      fail(ErrorKind::kConfig, where(key) + ": cannot parse '" + s + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) fail(ErrorKind::kConfig, where(key) + " must be finite");
    }
    out = v;
  }

  void text(const std::string& key, std::string& out) {
    if (has(key)) out = scalar(key);
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const std::string s = scalar(key);
    if (s == "true") out = true;
    else if (s == "false") out = false;
    else fail(ErrorKind::kConfig, where(key) + ": expected true or false");
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& out) {
    if (!has(key)) return;
    used_.insert(key);
    const YAML::Node v = node_[key];
    if (!v.IsSequence()) fail(ErrorKind::kConfig, where(key) + " must be a list");
    out.clear();
    for (const auto& item : v) {
      if (!item.IsScalar()) fail(ErrorKind::kConfig, where(key) + " entries must be scalars");
      if constexpr (std::is_same_v<T, std::string>) {
        out.push_back(item.Scalar());
      } else {
        const std::string& s = item.Scalar();
        T x{};
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc() || p != s.data() + s.size()) {
          fail(ErrorKind::kConfig, where(key) + ": cannot parse '" + s + "'");
        }
        out.push_back(x);
      }
    }
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(ErrorKind::kConfig, "unknown key " + where(key));
    }
  }

 private:
  std::string where(const std::string& key) const { return name_ + "." + key; }

  YAML::Node node_;
  std::string name_;
  std::set<std::string> used_;
};

void parse_env(Section& s, EnvBlock& e) {
  s.text("kind", e.kind);
  s.number("table_seed", e.table_seed);
  if (e.kind == "bitseq") {
    s.number("n", e.n);
    s.number("k", e.k);
    s.list("modes", e.modes);
    s.list("mode_patterns", e.mode_patterns);
    s.number("num_modes", e.num_modes);
    e.delta = std::max(1, e.n / 8);
    s.number("delta", e.delta);
  } else if (e.kind == "seq") {
    s.number("alphabet", e.alphabet);
    s.number("length", e.length);
    s.list("peaks", e.peaks);
    s.number("num_peaks", e.num_peaks);
    s.number("scale", e.scale);
    s.number("mode_radius", e.mode_radius);
  } else if (e.kind == "fragment") {
    auto& f = e.fragment;
    s.number("vocab", f.vocab);
    s.number("max_blocks", f.max_blocks);
    s.number("planted", f.planted);
    s.number("planted_score", f.planted_score);
    s.number("base_mean", f.base_mean);
    s.number("base_std", f.base_std);
    s.number("interaction_density", f.interaction_density);
    s.number("interaction_scale", f.interaction_scale);
    s.number("reward_low", f.reward_low);
    s.number("reward_high", f.reward_high);
    s.number("mode_threshold", f.mode_threshold);
    s.number("similarity_threshold", f.similarity_threshold);
    f.seed = e.table_seed;
  } else {
    fail(ErrorKind::kConfig, "env.kind must be bitseq, seq or fragment, got '" +
                                 e.kind + "'");
  }
}

void parse_gfn(Section& s, GfnBlock& g) {
  if (s.has("backend")) {
    const auto b = s.scalar("backend");
    if (b == "tabular") g.backend = Backend::kTabular;
    else if (b == "mlp") g.backend = Backend::kMlp;
    else fail(ErrorKind::kConfig, "gfn.backend must be tabular or mlp");
  }
  s.number("hidden", g.hidden);
  s.number("init_scale", g.init_scale);
  auto& t = g.train;
  s.number("batch_size", t.batch_size);
  s.number("beta", t.beta);
  s.number("epsilon", t.epsilon);
  if (s.has("eval_epsilon")) {
    if (s.scalar("eval_epsilon") == "same") t.eval_epsilon = -1.0;
    else s.number("eval_epsilon", t.eval_epsilon);
  }
  s.number("steps_per_round", t.steps_per_round);
  s.number("lr", t.adam.lr);
  s.number("lr_log_z", t.adam.lr_log_z);
  s.number("adam_beta1", t.adam.beta1);
  s.number("adam_beta2", t.adam.beta2);
  s.number("adam_eps", t.adam.eps);
  s.boolean("parallel", t.parallel);
}

void parse_bandit(Section& s, ProtocolConfig& p) {
  if (s.has("strategy")) {
    const auto name = s.scalar("strategy");
    try {
      p.strategy = parse_strategy(name);
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, std::string("bandit.strategy: ") + e.what());
    }
  }
  s.number("k", p.k);
  s.number("window", p.window);
  s.number("alpha", p.alpha);
  s.number("lambda", p.lambda);
  if (s.has("ucb_count")) {
    const auto v = s.scalar("ucb_count");
    if (v == "window") p.ucb_count = UcbCount::kWindow;
    else if (v == "cumulative") p.ucb_count = UcbCount::kCumulative;
    else fail(ErrorKind::kConfig, "bandit.ucb_count must be window or cumulative");
  }
  if (s.has("feedback")) {
    const auto v = s.scalar("feedback");
    if (v == "all") p.feedback = Feedback::kAll;
    else if (v == "selected") p.feedback = Feedback::kSelected;
    else fail(ErrorKind::kConfig, "bandit.feedback must be all or selected");
  }
  s.list("hard_prune_exclude", p.hard_prune_exclude);
  s.number("composite_length", p.composite_length);
  s.number("norm_eps", p.norm_eps);
}

void parse_protocol(Section& s, ProtocolConfig& p) {
  s.number("total_rounds", p.total_rounds);
  s.number("interval", p.interval);
  if (s.has("aggregate_every")) {
    int every = 0;
    s.number("aggregate_every", every);
    if (every != 0 && every != p.interval) {
      fail(ErrorKind::kConfig,
           "protocol.aggregate_every must equal the decision interval (or 0)");
    }
  }
  s.number("eval_samples", p.eval_samples);
  s.number("warmup_cap", p.warmup_cap);
  s.number("elbo_every", p.elbo_every);
  s.number("elbo_samples", p.elbo_samples);
  s.number("topk_capacity", p.topk_capacity);
  s.number("seed", p.seed);
}

void check_ranges(const RunConfig& c) {
  const auto& e = c.env;
  if (e.kind == "bitseq") {
    require(e.num_modes >= 1 || !e.modes.empty(), ErrorKind::kConfig,
            "env.num_modes must be >= 1");
  } else if (e.kind == "seq") {
    require(e.num_peaks >= 1 || !e.peaks.empty(), ErrorKind::kConfig,
            "env.num_peaks must be >= 1");
  }
  require(c.gfn.hidden >= 1, ErrorKind::kConfig, "gfn.hidden must be >= 1");
  require(c.gfn.init_scale >= 0.0, ErrorKind::kConfig, "gfn.init_scale must be >= 0");
  const auto& a = c.gfn.train.adam;
  require(a.lr > 0.0 && a.lr_log_z >= 0.0, ErrorKind::kConfig,
          "learning rates must be positive");
  require(a.beta1 >= 0.0 && a.beta1 < 1.0 && a.beta2 >= 0.0 && a.beta2 < 1.0 &&
              a.eps > 0.0,
          ErrorKind::kConfig, "Adam moments must be in [0, 1) with eps > 0");
  require(c.output.w_snapshot_every >= 0, ErrorKind::kConfig,
          "output.w_snapshot_every must be >= 0");
  try {
    validate(c.gfn.train);
  } catch (const Error& err) {
    fail(ErrorKind::kConfig, err.what());
  }
}

void emit_reals(YAML::Emitter& out, const char* key, double v) {
  out << YAML::Key << key << YAML::Value << format_real(v);
}

template <typename T>
void emit_list(YAML::Emitter& out, const char* key, const std::vector<T>& xs) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& x : xs) {
    if constexpr (std::is_same_v<T, std::string>) {
      out << YAML::DoubleQuoted << x;
    } else {
      out << x;
    }
  }
  out << YAML::EndSeq;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  // Keep reals recognisable as reals.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::kConfig, std::string("malformed config: ") + e.what());
  }
  if (root && !root.IsNull() && !root.IsMap()) {
    fail(ErrorKind::kConfig, "config root must be a mapping");
  }
  static const std::set<std::string> kSections = {"env", "gfn", "bandit",
                                                  "protocol", "output"};
  if (root && root.IsMap()) {
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (!kSections.count(key)) fail(ErrorKind::kConfig, "unknown section '" + key + "'");
    }
  }
  RunConfig c;
  try {
    Section env(root["env"], "env");
    parse_env(env, c.env);
    env.finish();
    Section gfn(root["gfn"], "gfn");
    parse_gfn(gfn, c.gfn);
    gfn.finish();
    Section bandit(root["bandit"], "bandit");
    parse_bandit(bandit, c.protocol);
    bandit.finish();
    Section protocol(root["protocol"], "protocol");
    parse_protocol(protocol, c.protocol);
    protocol.finish();
    Section output(root["output"], "output");
    output.number("w_snapshot_every", c.output.w_snapshot_every);
    output.boolean("checkpoint", c.output.checkpoint);
    output.finish();
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::kConfig, std::string("malformed config: ") + e.what());
  }
  check_ranges(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;

  const auto& e = c.env;
  out << YAML::Key << "env" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << e.kind;
  out << YAML::Key << "table_seed" << YAML::Value << e.table_seed;
  if (e.kind == "bitseq") {
    out << YAML::Key << "n" << YAML::Value << e.n;
    out << YAML::Key << "k" << YAML::Value << e.k;
    emit_list(out, "modes", e.modes);
    emit_list(out, "mode_patterns", e.mode_patterns);
    out << YAML::Key << "num_modes" << YAML::Value << e.num_modes;
    out << YAML::Key << "delta" << YAML::Value << e.delta;
  } else if (e.kind == "seq") {
    out << YAML::Key << "alphabet" << YAML::Value << e.alphabet;
    out << YAML::Key << "length" << YAML::Value << e.length;
    emit_list(out, "peaks", e.peaks);
    out << YAML::Key << "num_peaks" << YAML::Value << e.num_peaks;
    emit_reals(out, "scale", e.scale);
    out << YAML::Key << "mode_radius" << YAML::Value << e.mode_radius;
  } else {
    const auto& f = e.fragment;
    out << YAML::Key << "vocab" << YAML::Value << f.vocab;
    out << YAML::Key << "max_blocks" << YAML::Value << f.max_blocks;
    out << YAML::Key << "planted" << YAML::Value << f.planted;
    emit_reals(out, "planted_score", f.planted_score);
    emit_reals(out, "base_mean", f.base_mean);
    emit_reals(out, "base_std", f.base_std);
    emit_reals(out, "interaction_density", f.interaction_density);
    emit_reals(out, "interaction_scale", f.interaction_scale);
    emit_reals(out, "reward_low", f.reward_low);
    emit_reals(out, "reward_high", f.reward_high);
    emit_reals(out, "mode_threshold", f.mode_threshold);
    emit_reals(out, "similarity_threshold", f.similarity_threshold);
  }
  out << YAML::EndMap;

  const auto& g = c.gfn;
  const auto& t = g.train;
  out << YAML::Key << "gfn" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "backend" << YAML::Value
      << (g.backend == Backend::kTabular ? "tabular" : "mlp");
  out << YAML::Key << "hidden" << YAML::Value << g.hidden;
  emit_reals(out, "init_scale", g.init_scale);
  out << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  emit_reals(out, "beta", t.beta);
  emit_reals(out, "epsilon", t.epsilon);
  if (t.eval_epsilon < 0.0) {
    out << YAML::Key << "eval_epsilon" << YAML::Value << "same";
  } else {
    emit_reals(out, "eval_epsilon", t.eval_epsilon);
  }
  out << YAML::Key << "steps_per_round" << YAML::Value << t.steps_per_round;
  emit_reals(out, "lr", t.adam.lr);
  emit_reals(out, "lr_log_z", t.adam.lr_log_z);
  emit_reals(out, "adam_beta1", t.adam.beta1);
  emit_reals(out, "adam_beta2", t.adam.beta2);
  emit_reals(out, "adam_eps", t.adam.eps);
  out << YAML::Key << "parallel" << YAML::Value << (t.parallel ? "true" : "false");
  out << YAML::EndMap;

  const auto& p = c.protocol;
  out << YAML::Key << "bandit" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "strategy" << YAML::Value
      << std::string(strategy_name(p.strategy));
  out << YAML::Key << "k" << YAML::Value << p.k;
  out << YAML::Key << "window" << YAML::Value << p.window;
  emit_reals(out, "alpha", p.alpha);
  emit_reals(out, "lambda", p.lambda);
  out << YAML::Key << "ucb_count" << YAML::Value
      << (p.ucb_count == UcbCount::kWindow ? "window" : "cumulative");
  out << YAML::Key << "feedback" << YAML::Value
      << (p.feedback == Feedback::kAll ? "all" : "selected");
  emit_list(out, "hard_prune_exclude", p.hard_prune_exclude);
  out << YAML::Key << "composite_length" << YAML::Value << p.composite_length;
  emit_reals(out, "norm_eps", p.norm_eps);
  out << YAML::EndMap;

  out << YAML::Key << "protocol" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "total_rounds" << YAML::Value << p.total_rounds;
  out << YAML::Key << "interval" << YAML::Value << p.interval;
  out << YAML::Key << "eval_samples" << YAML::Value << p.eval_samples;
  out << YAML::Key << "warmup_cap" << YAML::Value << p.warmup_cap;
  out << YAML::Key << "elbo_every" << YAML::Value << p.elbo_every;
  out << YAML::Key << "elbo_samples" << YAML::Value << p.elbo_samples;
  out << YAML::Key << "topk_capacity" << YAML::Value << p.topk_capacity;
  out << YAML::Key << "seed" << YAML::Value << p.seed;
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "w_snapshot_every" << YAML::Value << c.output.w_snapshot_every;
  out << YAML::Key << "checkpoint" << YAML::Value
      << (c.output.checkpoint ? "true" : "false");
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
  const auto h = fnv1a64(serialize_config(cfg));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::unique_ptr<Environment> make_environment(const EnvBlock& e) {
  if (e.kind == "bitseq") {
    BitSeqConfig b;
    b.n = e.n;
    b.k = e.k;
    b.delta = e.delta;
    b.modes = e.modes.empty()
                  ? make_pattern_modes(e.n, e.mode_patterns, e.num_modes, e.table_seed)
                  : e.modes;
    return std::make_unique<BitSeqEnv>(b);
  }
  if (e.kind == "seq") {
    SeqDesignConfig s;
    s.alphabet = e.alphabet;
    s.length = e.length;
    s.scale = e.scale;
    s.mode_radius = e.mode_radius;
    s.peaks = e.peaks.empty()
                  ? make_random_peaks(e.alphabet, e.length, e.num_peaks, e.table_seed)
                  : e.peaks;
    return std::make_unique<SeqDesignEnv>(s);
  }
  if (e.kind == "fragment") {
    auto spec = e.fragment;
    spec.seed = e.table_seed;
    return std::make_unique<FragmentEnv>(make_synthetic_fragment_config(spec));
  }
  fail(ErrorKind::kConfig, "unknown environment kind '" + e.kind + "'");
}

std::unique_ptr<Policy> make_policy(const Environment& env, const GfnBlock& g,
                                    std::uint64_t seed) {
  if (g.backend == Backend::kTabular) return std::make_unique<TabularPolicy>(env);
  Rng rng = make_rng(seed, "init");
  return std::make_unique<MlpPolicy>(env, g.hidden, g.init_scale, rng);
}

void validate(const RunConfig& cfg) {
  check_ranges(cfg);
  std::unique_ptr<Environment> env;
  try {
    env = make_environment(cfg.env);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    fail(ErrorKind::kConfig, std::string("env: ") + e.what());
  }
  validate(cfg.protocol, *env);
}

}  // namespace cmabgfn
