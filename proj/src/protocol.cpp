#include "cmabgfn/protocol.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace cmabgfn {

void validate(const ProtocolConfig& cfg, const Environment& env) {
  require(cfg.interval >= 1, ErrorKind::kConfig, "decision interval must be >= 1");
  require(cfg.total_rounds >= cfg.interval, ErrorKind::kConfig,
          "total rounds must be >= the decision interval");
  require(cfg.strategy == Strategy::kPlainTb || cfg.eval_samples >= 1,
          ErrorKind::kConfig, "bandit strategies need eval samples >= 1");
  require(cfg.composite_length >= 1, ErrorKind::kConfig,
          "composite arm length must be >= 1");
  const ArmSpace space(env.alphabet_size(), cfg.composite_length);
  if (cfg.strategy != Strategy::kPlainTb) {
    require(cfg.k >= std::max(1, env.k_min()), ErrorKind::kConfig,
            "K below the environment minimum " + std::to_string(env.k_min()));
    if (cfg.k > space.num_arms()) {
      fail(ErrorKind::kKTooLarge, "K = " + std::to_string(cfg.k) +
                                      " exceeds the number of arms " +
                                      std::to_string(space.num_arms()));
    }
  }
  require(cfg.window >= 1, ErrorKind::kConfig, "window H must be >= 1");
  require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, ErrorKind::kConfig,
          "alpha must be in [0, 1]");
  require(cfg.lambda >= 0.0, ErrorKind::kConfig, "lambda must be >= 0");
  require(cfg.warmup_cap >= 1, ErrorKind::kConfig, "warmup cap must be >= 1");
  require(cfg.norm_eps > 0.0, ErrorKind::kConfig, "normalizer eps must be > 0");
  require(cfg.elbo_every >= 0 && cfg.elbo_samples >= 1, ErrorKind::kConfig,
          "ELBO schedule must be >= 0 with >= 1 sample");
  require(cfg.topk_capacity >= 0, ErrorKind::kConfig, "top-K capacity must be >= 0");
  for (ArmId a : cfg.hard_prune_exclude) {
    require(a >= 0 && a < space.num_arms(), ErrorKind::kConfig,
            "hard-prune exclusion outside the arm space");
  }
  if (cfg.strategy == Strategy::kHardPrune && !cfg.hard_prune_exclude.empty()) {
    require(space.num_arms() - static_cast<int>(cfg.hard_prune_exclude.size()) ==
                cfg.k,
            ErrorKind::kConfig, "hard-prune exclusion must leave exactly K arms");
  }
}

Protocol::Protocol(const Environment& env, std::unique_ptr<Policy> model,
                   TrainConfig train, ProtocolConfig cfg)
    : env_(&env),
      model_(std::move(model)),
      train_(train),
      cfg_(std::move(cfg)),
      arms_(env.alphabet_size(), cfg_.composite_length),
      opt_(train_.adam),
      stats_(arms_.num_arms(), cfg_.window, cfg_.ucb_count),
      w_(arms_.num_arms()),
      normalizer_(cfg_.norm_eps),
      ledger_(env),
      topk_(static_cast<std::size_t>(cfg_.topk_capacity)),
      select_rng_(make_rng(cfg_.seed, "bandit")) {
  validate(train_);
  validate(cfg_, env);
  require(&model_->env() == env_, ErrorKind::kEnvMismatch,
          "policy was built for a different environment");
}

bool Protocol::warm() const { return stats_.cold_arms().empty(); }

void Protocol::initialize() {
  while (uses_bandit() && !warm() && !finished()) step();
}

std::optional<EpochRecord> Protocol::step() {
  if (finished()) return std::nullopt;
  if (!uses_bandit()) return run_epoch(SuperArm::all(), false, std::nullopt);
  if (!warm()) {
    if (warmup_epochs_ >= cfg_.warmup_cap) {
      std::string list;
      for (ArmId a : stats_.cold_arms()) list += " " + std::to_string(a);
      fail(ErrorKind::kWarmupStall,
           "arms still unobserved after " + std::to_string(warmup_epochs_) +
               " warmup epochs:" + list);
    }
    ++warmup_epochs_;
    return run_epoch(SuperArm::all(), true, std::nullopt);
  }
  SelectionConfig sel;
  sel.strategy = cfg_.strategy;
  sel.k = cfg_.k;
  sel.lambda = cfg_.lambda;
  sel.hard_prune_exclude = cfg_.hard_prune_exclude;
  const SuperArm chosen =
      select_super_arm(arms_, stats_, w_, sel, round_clock(), select_rng_);
  const double term = regret_.update(stats_.means(), chosen);
  return run_epoch(chosen, false, term);
}

std::vector<EpochRecord> Protocol::run(
    const std::function<void(const Protocol&, const EpochRecord&)>& on_epoch) {
  std::vector<EpochRecord> out;
  while (auto rec = step()) {
    if (on_epoch) on_epoch(*this, *rec);
    out.push_back(std::move(*rec));
  }
  return out;
}

std::map<ArmId, double> Protocol::absorb_feedback(std::span<const Trajectory> eval,
                                                  const SuperArm& active) {
  for (const auto& t : eval) {
    require(t.provenance == Provenance::kEval, ErrorKind::kPrecondition,
            "bandit feedback must come from evaluation samples");
    normalizer_.observe(t.reward);
  }
  std::vector<std::vector<ArmId>> present(eval.size());
  std::vector<double> r(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto choices = eval[i].choices();
    present[i] = arms_.project(choices);
    r[i] = normalizer_.normalize(eval[i].reward);
  }
  auto x = arm_rewards_from_batch(present, r);
  for (const auto& [arm, value] : x) {
    if (cfg_.feedback == Feedback::kAll || active.contains(arm)) {
      stats_.push(arm, value);
    }
  }
  for (std::size_t i = 0; i < eval.size(); ++i) {
    w_.update(present[i], r[i], cfg_.alpha);
  }
  return x;
}

EpochRecord Protocol::run_epoch(const SuperArm& s, bool warmup,
                                std::optional<double> regret_term) {
  const auto start = std::chrono::steady_clock::now();
  EpochRecord rec;
  rec.epoch = epochs_done_;
  rec.t = round_clock();
  rec.warmup = warmup;
  rec.super_arm = s;
  rec.regret_term = regret_term;
  rec.rounds = static_cast<int>(
      std::min<long>(cfg_.interval, cfg_.total_rounds - rounds_done_));

  for (int r = 0; r < rec.rounds; ++r) {
    const auto seed = derive_seed(cfg_.seed, "round", rounds_done_);
    auto result = train_round(*model_, opt_, arms_, s, train_, seed, counters_);
    rec.losses.push_back(result.report.loss);
    for (const auto& t : result.batch) {
      ledger_.record(t.terminal(), t.reward, rec.epoch);
      topk_.offer(*env_, t.terminal(), t.reward);
    }
    ++rounds_done_;
  }

  if (uses_bandit()) {
    const auto eval = evaluate_batch(*model_, arms_, cfg_.eval_samples, train_,
                                     derive_seed(cfg_.seed, "eval", rec.epoch),
                                     counters_);
    rec.arm_rewards = absorb_feedback(eval, s);
  }
  if (cfg_.elbo_every > 0 && (rec.epoch + 1) % cfg_.elbo_every == 0) {
    rec.elbo = elbo_estimate(*model_, arms_, cfg_.elbo_samples, train_.beta,
                             derive_seed(cfg_.seed, "elbo", rec.epoch),
                             train_.parallel);
  }

  rec.mean_loss = rec.losses.empty()
                      ? 0.0
                      : std::accumulate(rec.losses.begin(), rec.losses.end(), 0.0) /
                            static_cast<double>(rec.losses.size());
  rec.log_z = model_->log_z;
  rec.modes = static_cast<long>(ledger_.size());
  rec.topk_mean = topk_.mean_reward();
  rec.cumulative_regret = regret_.cumulative();
  current_ = s;
  ++epochs_done_;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  history_.push_back(rec);
  return rec;
}

}  // namespace cmabgfn
