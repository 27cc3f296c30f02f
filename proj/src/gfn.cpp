#include "cmabgfn/gfn.hpp"

#include <cmath>
#include <numeric>

#include "cmabgfn/kernels_detail.hpp"

namespace cmabgfn {

void validate(const TrainConfig& cfg) {
  require(cfg.batch_size >= 1, ErrorKind::kConfig, "batch size must be >= 1");
  require(cfg.beta >= 1.0 && std::isfinite(cfg.beta), ErrorKind::kConfig,
          "reward exponent beta must be >= 1");
  require(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0, ErrorKind::kConfig,
          "epsilon must be in [0, 1]");
  require(cfg.eval_epsilon <= 1.0, ErrorKind::kConfig,
          "eval epsilon must be <= 1");
  require(cfg.steps_per_round >= 1, ErrorKind::kConfig,
          "steps per round must be >= 1");
  require(cfg.adam.lr > 0.0 && cfg.adam.lr_log_z > 0.0, ErrorKind::kConfig,
          "learning rates must be positive");
}

Trajectory sample_trajectory(const Policy& model, const ArmSpace& arms,
                             const SuperArm& restriction, double epsilon,
                             Rng& rng, Provenance provenance) {
  const Environment& env = model.env();
  Trajectory traj;
  traj.provenance = provenance;
  traj.states.reserve(env.horizon() + 1);
  traj.states.push_back(env.initial_state());
  std::vector<int> prefix;
  std::vector<double> logits(env.action_space_size());
  while (!env.is_terminal(traj.states.back())) {
    const State& s = traj.states.back();
    const auto actions = available_actions(env, s, restriction, prefix);
    std::vector<int> legal(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
      legal[i] = env.action_index(actions[i]);
    }
    model.logits(s, logits);
    const auto log_probs = masked_log_softmax(logits, legal);
    const int pick = sample_legal_index(log_probs, epsilon, rng);
    const Action a = actions[pick];
    State next = env.apply(s, a);
    traj.log_pf.push_back(log_probs[pick]);
    traj.log_pb.push_back(backward_logprob(env, next));
    traj.actions.push_back(a);
    traj.legal.push_back(std::move(legal));
    traj.states.push_back(std::move(next));
    prefix.push_back(a.choice);
    if (static_cast<int>(prefix.size()) == arms.composite_length()) prefix.clear();
  }
  traj.reward = env.reward(traj.states.back());
  return traj;
}

double tb_residual(const Policy& model, const Trajectory& traj, double beta) {
  return detail::trajectory_gradient(model, traj, beta, 0.0, {});
}

TBLossReport tb_loss(const Policy& model, std::span<const Trajectory> batch,
                     double beta) {
  require(!batch.empty(), ErrorKind::kPrecondition, "empty trajectory batch");
  TBLossReport report;
  report.log_z = model.log_z;
  report.residuals.reserve(batch.size());
  double sum = 0.0;
  for (const auto& t : batch) {
    const double r = tb_residual(model, t, beta);
    report.residuals.push_back(r);
    sum += r * r;
  }
  report.loss = sum / static_cast<double>(batch.size());
  return report;
}

RoundResult train_round(Policy& model, Adam& opt, const ArmSpace& arms,
                        const SuperArm& restriction, const TrainConfig& cfg,
                        std::uint64_t seed, ProvenanceCounters& counters) {
  RoundResult result;
  for (int step = 0; step < cfg.steps_per_round; ++step) {
    const std::uint64_t step_seed = derive_seed(seed, "step", step);
    auto batch = cfg.parallel
                     ? sample_batch_parallel(model, arms, restriction, cfg.epsilon,
                                             step_seed, cfg.batch_size,
                                             Provenance::kTrain)
                     : sample_batch_serial(model, arms, restriction, cfg.epsilon,
                                           step_seed, cfg.batch_size,
                                           Provenance::kTrain);
    counters.train_sampled += static_cast<long>(batch.size());

    std::vector<const State*> visited;
    for (const auto& t : batch) {
      for (const auto& s : t.states) visited.push_back(&s);
    }
    model.register_states(visited);

    Gradient grad;
    grad.params.assign(model.num_params(), 0.0);
    result.report = cfg.parallel
                        ? tb_gradient_parallel(model, batch, cfg.beta, grad, &counters)
                        : tb_gradient_serial(model, batch, cfg.beta, grad, &counters);
    opt.step(model, grad);
    result.batch.insert(result.batch.end(), std::make_move_iterator(batch.begin()),
                        std::make_move_iterator(batch.end()));
  }
  return result;
}

std::vector<Trajectory> evaluate_batch(const Policy& model, const ArmSpace& arms,
                                       int n_samples, const TrainConfig& cfg,
                                       std::uint64_t seed,
                                       ProvenanceCounters& counters) {
  require(n_samples >= 1, ErrorKind::kPrecondition,
          "evaluation batch needs at least one sample");
  const double eps = cfg.effective_eval_epsilon();
  auto batch = cfg.parallel
                   ? sample_batch_parallel(model, arms, SuperArm::all(), eps, seed,
                                           n_samples, Provenance::kEval)
                   : sample_batch_serial(model, arms, SuperArm::all(), eps, seed,
                                         n_samples, Provenance::kEval);
  counters.eval_sampled += static_cast<long>(batch.size());
  return batch;
}

double elbo_summand(const Trajectory& traj, double beta) {
  require(traj.reward > 0.0, ErrorKind::kNonPositiveReward,
          "ELBO needs a positive reward");
  const double pf = std::accumulate(traj.log_pf.begin(), traj.log_pf.end(), 0.0);
  const double pb = std::accumulate(traj.log_pb.begin(), traj.log_pb.end(), 0.0);
  return beta * std::log(traj.reward) + pb - pf;
}

ElboEstimate elbo_estimate(const Policy& model, const ArmSpace& arms,
                           int m_samples, double beta, std::uint64_t seed,
                           bool parallel) {
  require(m_samples >= 1, ErrorKind::kPrecondition, "ELBO needs M >= 1");
  const auto batch =
      parallel ? sample_batch_parallel(model, arms, SuperArm::all(), 0.0, seed,
                                       m_samples, Provenance::kEval)
               : sample_batch_serial(model, arms, SuperArm::all(), 0.0, seed,
                                     m_samples, Provenance::kEval);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& t : batch) {
    const double v = elbo_summand(t, beta);
    sum += v;
    sum_sq += v * v;
  }
  ElboEstimate est;
  est.samples = m_samples;
  est.mean = sum / m_samples;
  if (m_samples > 1) {
    const double var =
        std::max(0.0, (sum_sq - m_samples * est.mean * est.mean) / (m_samples - 1));
    est.std_error = std::sqrt(var / m_samples);
  }
  return est;
}

}  // namespace cmabgfn
