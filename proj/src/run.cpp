#include "cmabgfn/run.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json.hpp"

namespace cmabgfn {
namespace fs = std::filesystem;
namespace {

std::string opt_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write " + path.string());
  os << text;
}

std::string arm_label(const ArmSpace& space, ArmId a) {
  std::string s;
  for (int c : space.decode(a)) {
    if (!s.empty()) s += '-';
    s += std::to_string(c);
  }
  return s;
}

std::string arms_rows(const Protocol& p, const EpochRecord& rec) {
  std::ostringstream os;
  const auto& stats = p.stats();
  for (ArmId a = 0; a < stats.num_arms(); ++a) {
    os << rec.epoch << ',' << a << ',' << arm_label(p.arm_space(), a) << ',';
    if (stats.warm(a)) {
      os << format_real(stats.mean(a)) << ',' << stats.pushes(a) << ','
         << stats.ucb_count(a) << ',' << format_real(stats.ucb(a, p.round_clock()));
    } else {
      os << ",0,0,";
    }
    os << ',' << (rec.super_arm.contains(a) ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string cooccurrence_csv(const CoOccurrence& w) {
  std::ostringstream os;
  for (ArmId i = 0; i < w.size(); ++i) {
    for (ArmId j = 0; j < w.size(); ++j) {
      if (j) os << ',';
      os << format_real(w(i, j));
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace

std::string metrics_header() {
  return "epoch,t,phase,strategy,super_arm,rounds,mean_tb_loss,log_z,modes,"
         "topk_mean_reward,topk_similarity,regret_term,cum_regret,elbo,elbo_se";
}

std::string metrics_row(const Protocol& p, const EpochRecord& rec) {
  std::optional<double> sim;
  if (p.topk().size() >= 2) sim = topk_similarity(p.topk(), p.env());
  std::ostringstream os;
  os << rec.epoch << ',' << rec.t << ',' << (rec.warmup ? "warmup" : "main") << ','
     << strategy_name(p.config().strategy) << ',' << rec.super_arm.to_string() << ','
     << rec.rounds << ',' << format_real(rec.mean_loss) << ','
     << format_real(rec.log_z) << ',' << rec.modes << ','
     << format_real(rec.topk_mean) << ',' << opt_real(sim) << ','
     << opt_real(rec.regret_term) << ',' << format_real(rec.cumulative_regret) << ','
     << (rec.elbo ? format_real(rec.elbo->mean) : "") << ','
     << (rec.elbo ? format_real(rec.elbo->std_error) : "");
  return os.str();
}

RunSummary run_experiment(
    const RunConfig& cfg, const fs::path& out,
    const std::function<void(const Protocol&, const EpochRecord&)>& on_epoch) {
  const auto start = std::chrono::steady_clock::now();
  validate(cfg);
  const auto env = make_environment(cfg.env);
  Protocol proto(*env, make_policy(*env, cfg.gfn, cfg.protocol.seed), cfg.gfn.train,
                 cfg.protocol);
  const bool bandit = cfg.protocol.strategy != Strategy::kPlainTb;

  std::ofstream metrics, arms;
  if (!out.empty()) {
    fs::create_directories(out);
    write_file(out / "config.yaml", serialize_config(cfg));
    write_file(out / "env.txt", env->artifact());
    metrics.open(out / "metrics.csv", std::ios::binary);
    arms.open(out / "arms.csv", std::ios::binary);
    if (!metrics || !arms) fail(ErrorKind::kIo, "cannot write into " + out.string());
    metrics << metrics_header() << '\n';
    arms << "epoch,arm,label,mu_hat,pushes,T,ucb,in_S\n";
  }

  RunSummary s;
  proto.run([&](const Protocol& p, const EpochRecord& rec) {
    if (!out.empty()) {
      metrics << metrics_row(p, rec) << '\n';
      if (bandit) arms << arms_rows(p, rec);
      const int every = cfg.output.w_snapshot_every;
      if (bandit && every > 0 && (rec.epoch + 1) % every == 0) {
        write_file(out / ("cooccurrence_" + std::to_string(rec.epoch) + ".csv"),
                   cooccurrence_csv(p.cooccurrence()));
      }
    }
    if (rec.elbo) s.elbo.emplace_back(rec.epoch, *rec.elbo);
    if (on_epoch) on_epoch(p, rec);
  });

  s.config_hash = config_hash(cfg);
  s.strategy = std::string(strategy_name(cfg.protocol.strategy));
  s.epochs = proto.epochs_done();
  s.rounds = proto.rounds_done();
  s.modes = static_cast<long>(proto.ledger().size());
  s.topk_mean = proto.topk().mean_reward();
  if (proto.topk().size() >= 2) s.topk_similarity = topk_similarity(proto.topk(), *env);
  s.cumulative_regret = proto.regret().cumulative();
  if (!proto.history().empty()) s.final_loss = proto.history().back().mean_loss;
  s.log_z = proto.model().log_z;
  s.final_means = proto.stats().means();
  if (!proto.current_super_arm().is_all()) {
    s.final_super_arm = proto.current_super_arm().members();
  }
  s.counters = proto.counters();
  s.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!out.empty()) {
    metrics.close();
    arms.close();
    if (bandit) write_file(out / "cooccurrence_final.csv", cooccurrence_csv(proto.cooccurrence()));
    if (cfg.output.checkpoint) {
      std::ofstream os(out / "model.txt", std::ios::binary);
      proto.model().save(os);
    }
    write_file(out / "summary.json", summary_json(s));
  }
  return s;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["config_hash"] = s.config_hash;
  j["strategy"] = s.strategy;
  j["epochs"] = s.epochs;
  j["rounds"] = s.rounds;
  j["modes"] = s.modes;
  j["topk_mean_reward"] = s.topk_mean;
  j["topk_similarity"] = s.topk_similarity ? nlohmann::ordered_json(*s.topk_similarity)
                                           : nlohmann::ordered_json(nullptr);
  j["cumulative_regret"] = s.cumulative_regret;
  j["final_tb_loss"] = s.final_loss;
  j["log_z"] = s.log_z;
  j["final_arm_means"] = s.final_means;
  j["final_super_arm"] = s.final_super_arm;
  j["provenance"] = {{"train_sampled", s.counters.train_sampled},
                     {"eval_sampled", s.counters.eval_sampled},
                     {"gradient_train", s.counters.gradient_train},
                     {"gradient_eval", s.counters.gradient_eval}};
  auto elbo = nlohmann::ordered_json::array();
  for (const auto& [epoch, e] : s.elbo) {
    elbo.push_back({{"epoch", epoch}, {"mean", e.mean}, {"std_error", e.std_error},
                    {"samples", e.samples}});
  }
  j["elbo"] = elbo;
  j["wall_seconds"] = s.wall_seconds;
  return j.dump(2) + "\n";
}

SweepAxis parse_axis(std::string_view name) {
  if (name == "K" || name == "k") return SweepAxis::kK;
  if (name == "alpha") return SweepAxis::kAlpha;
  if (name == "lambda") return SweepAxis::kLambda;
  if (name == "H" || name == "window") return SweepAxis::kWindow;
  if (name == "beta") return SweepAxis::kBeta;
  if (name == "strategy") return SweepAxis::kStrategy;
  if (name == "seed") return SweepAxis::kSeed;
  fail(ErrorKind::kConfig, "unknown sweep axis '" + std::string(name) +
                               "' (K, alpha, lambda, H, beta, strategy, seed)");
}

std::string_view axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::kK: return "K";
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kLambda: return "lambda";
    case SweepAxis::kWindow: return "H";
    case SweepAxis::kBeta: return "beta";
    case SweepAxis::kStrategy: return "strategy";
    case SweepAxis::kSeed: return "seed";
  }
  return "?";
}

RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const std::string& value) {
  // Route through the config parser so sweep values obey the same rules.
  std::string section, key;
  switch (axis) {
    case SweepAxis::kK: section = "bandit"; key = "k"; break;
    case SweepAxis::kAlpha: section = "bandit"; key = "alpha"; break;
    case SweepAxis::kLambda: section = "bandit"; key = "lambda"; break;
    case SweepAxis::kWindow: section = "bandit"; key = "window"; break;
    case SweepAxis::kBeta: section = "gfn"; key = "beta"; break;
    case SweepAxis::kStrategy: section = "bandit"; key = "strategy"; break;
    case SweepAxis::kSeed: section = "protocol"; key = "seed"; break;
  }
  YAML::Node doc = YAML::Load(serialize_config(base));
  doc[section][key] = value;
  YAML::Emitter em;
  em << doc;
  return parse_config(em.c_str());
}

double median(std::vector<double> xs) {
  require(!xs.empty(), ErrorKind::kPrecondition, "median of an empty set");
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<SweepPoint> run_sweep(const RunConfig& base, SweepAxis axis,
                                  const std::vector<std::string>& values,
                                  const std::vector<std::uint64_t>& seeds,
                                  const fs::path& out) {
  require(!values.empty(), ErrorKind::kConfig, "sweep needs at least one value");
  std::vector<std::uint64_t> point_seeds = seeds;
  if (axis == SweepAxis::kSeed || point_seeds.empty()) {
    point_seeds = {base.protocol.seed};
  }
  // Validate every point before any training.
  std::vector<SweepPoint> points;
  std::vector<RunConfig> configs;
  for (const auto& v : values) {
    const RunConfig at = apply_axis(base, axis, v);
    for (auto seed : point_seeds) {
      RunConfig c = at;
      if (axis != SweepAxis::kSeed) c.protocol.seed = seed;
      validate(c);
      SweepPoint p;
      p.value = v;
      p.seed = c.protocol.seed;
      p.dir = out / (std::string(axis_name(axis)) + "_" + v) /
              ("seed_" + std::to_string(p.seed));
      points.push_back(std::move(p));
      configs.push_back(std::move(c));
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].summary = run_experiment(configs[i], points[i].dir);
  }

  fs::create_directories(out);
  std::ostringstream agg;
  agg << "axis,value,seeds,median_modes,median_topk_mean_reward,"
         "median_cum_regret,median_final_tb_loss\n";
  for (const auto& v : values) {
    std::vector<double> modes, topk, regret, loss;
    for (const auto& p : points) {
      if (p.value != v) continue;
      modes.push_back(static_cast<double>(p.summary.modes));
      topk.push_back(p.summary.topk_mean);
      regret.push_back(p.summary.cumulative_regret);
      loss.push_back(p.summary.final_loss);
    }
    agg << axis_name(axis) << ',' << v << ',' << modes.size() << ','
        << format_real(median(modes)) << ',' << format_real(median(topk)) << ','
        << format_real(median(regret)) << ',' << format_real(median(loss)) << '\n';
  }
  write_file(out / "aggregate.csv", agg.str());
  return points;
}

}  // namespace cmabgfn
