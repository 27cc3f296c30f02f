#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cmabgfn/config.hpp"
#include "cmabgfn/oracle.hpp"
#include "cmabgfn/run.hpp"

using namespace cmabgfn;
using nlohmann::ordered_json;

namespace {

int report_error(std::string_view kind, const std::string& message) {
  ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return 2;
}

RunConfig load_with_seed(const std::string& path, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_config(path);
  if (seed) cfg.protocol.seed = *seed;
  return cfg;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandit-restricted GFlowNet training harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, axis, values, seeds, oracle_kind = "enumerate";
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "train one configuration");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--seed", seed, "override protocol.seed");
  run->add_option("--out", out_dir, "run directory (default runs/<hash>)");
  run->add_flag("--quiet", quiet, "no per-epoch progress");

  auto* sweep = app.add_subcommand("sweep", "sweep one axis across seeds");
  sweep->add_option("--config", config_path, "base config file")->required();
  sweep->add_option("--axis", axis, "K, alpha, lambda, H, beta, strategy or seed")->required();
  sweep->add_option("--values", values, "comma-separated axis values")->required();
  sweep->add_option("--seeds", seeds, "comma-separated seeds");
  sweep->add_option("--out", out_dir, "sweep directory")->required();

  auto* oracle = app.add_subcommand("oracle", "brute-force references");
  oracle->add_option("--kind", oracle_kind, "enumerate or bandit")
      ->check(CLI::IsMember({"enumerate", "bandit"}));
  oracle->add_option("--config", config_path, "config file (enumerate)");
  std::string means_text = "0.7,0.7,0.7,0.6,0.6,0.6,0.6,0.6,0.6,0.6";
  OracleBanditConfig ob;
  std::string strategy_text = "cucb-greedy";
  oracle->add_option("--means", means_text, "planted arm means (bandit)");
  oracle->add_option("--strategy", strategy_text, "selection strategy (bandit)");
  oracle->add_option("--k", ob.k, "super-arm size (bandit)");
  oracle->add_option("--epochs", ob.epochs, "epochs (bandit)");
  oracle->add_option("--noise", ob.noise, "noise std dev (bandit)");
  oracle->add_option("--seed", seed, "seed");

  auto* validate_cmd = app.add_subcommand("validate", "check a config without running");
  validate_cmd->add_option("--config", config_path, "config file")->required();
  validate_cmd->add_option("--seed", seed, "override protocol.seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("Usage", e.what());
  }

  try {
    if (*validate_cmd) {
      const RunConfig cfg = load_with_seed(config_path, seed);
      validate(cfg);
      ordered_json j{{"ok", true}, {"config_hash", config_hash(cfg)}};
      std::cout << j.dump() << '\n';
      return 0;
    }
    if (*run) {
      const RunConfig cfg = load_with_seed(config_path, seed);
      validate(cfg);
      if (out_dir.empty()) {
        out_dir = "runs/" + config_hash(cfg);
      }
      const auto summary = run_experiment(
          cfg, out_dir, [&](const Protocol& p, const EpochRecord& rec) {
            if (quiet) return;
            std::fprintf(stderr, "epoch %ld  rounds %ld  loss %.4g  modes %ld  S {%s}\n",
                         rec.epoch, p.rounds_done(), rec.mean_loss, rec.modes,
                         rec.super_arm.to_string().c_str());
          });
      std::cout << summary_json(summary);
      return 0;
    }
    if (*sweep) {
      const RunConfig cfg = load_config(config_path);
      std::vector<std::uint64_t> seed_list;
      for (const auto& s : split(seeds)) seed_list.push_back(std::stoull(s));
      const auto points = run_sweep(cfg, parse_axis(axis), split(values), seed_list, out_dir);
      std::cout << "wrote " << points.size() << " runs and "
                << (std::filesystem::path(out_dir) / "aggregate.csv").string() << '\n';
      return 0;
    }
    if (*oracle) {
      if (oracle_kind == "enumerate") {
        if (config_path.empty()) return report_error("Usage", "--config is required");
        const RunConfig cfg = load_config(config_path);
        const auto env = make_environment(cfg.env);
        const auto table = oracle_enumerate(*env, cfg.gfn.train.beta);
        std::vector<std::size_t> order(table.terminals.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return table.pi[a] > table.pi[b]; });
        ordered_json top = ordered_json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
          const auto t = order[i];
          top.push_back({{"x", env->render(table.terminals[t])},
                         {"reward", table.rewards[t]},
                         {"pi", table.pi[t]}});
        }
        ordered_json j{{"terminals", table.terminals.size()},
                       {"log_z", table.log_z},
                       {"beta", cfg.gfn.train.beta},
                       {"top", top}};
        std::cout << j.dump(2) << '\n';
        return 0;
      }
      ob.means.clear();
      for (const auto& m : split(means_text)) ob.means.push_back(std::stod(m));
      ob.strategy = parse_strategy(strategy_text);
      if (seed) ob.seed = *seed;
      const auto res = oracle_bandit(ob);
      double optimal = 0.0, cum = 0.0;
      for (char c : res.optimal) optimal += c;
      for (double r : res.true_regret) cum += r;
      ordered_json j{
          {"epochs", ob.epochs},
          {"warmup_epochs", res.warmup_epochs},
          {"optimal_rate", res.optimal.empty() ? 0.0 : optimal / res.optimal.size()},
          {"true_cumulative_regret", cum},
          {"empirical_cumulative_regret", res.empirical.cumulative()},
          {"final_super_arm", res.selections.empty() ? std::string()
                                                     : res.selections.back().to_string()}};
      std::cout << j.dump(2) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    return report_error(error_kind_name(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error("Internal", e.what());
  }
  return 0;
}
