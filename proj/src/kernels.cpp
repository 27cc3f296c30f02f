#include <cmath>
#include <exception>
#include <numeric>

#include "cmabgfn/gfn.hpp"
#include "cmabgfn/kernels_detail.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cmabgfn {

namespace detail {

double trajectory_gradient(const Policy& model, const Trajectory& traj,
                           double beta, double scale, std::span<double> grad) {
  require(traj.reward > 0.0, ErrorKind::kNonPositiveReward,
          "TB loss needs R(x) > 0");
  const Environment& env = model.env();
  const std::size_t steps = traj.actions.size();
  std::vector<const State*> states(steps);
  for (std::size_t j = 0; j < steps; ++j) states[j] = &traj.states[j];

  Eigen::MatrixXd logits;
  model.logits_batch(states, logits);

  std::vector<std::vector<double>> log_probs(steps);
  std::vector<int> taken(steps, -1);
  double sum_pf = 0.0;
  for (std::size_t j = 0; j < steps; ++j) {
    const auto& legal = traj.legal[j];
    log_probs[j] = masked_log_softmax(
        std::span<const double>(logits.col(static_cast<Eigen::Index>(j)).data(),
                                static_cast<std::size_t>(logits.rows())),
        legal);
    const int idx = env.action_index(traj.actions[j]);
    for (std::size_t i = 0; i < legal.size(); ++i) {
      if (legal[i] == idx) taken[j] = static_cast<int>(i);
    }
    require(taken[j] >= 0, ErrorKind::kInvalidAction,
            "trajectory step is outside its recorded mask");
    sum_pf += log_probs[j][taken[j]];
  }
  const double sum_pb = std::accumulate(traj.log_pb.begin(), traj.log_pb.end(), 0.0);
  const double residual =
      model.log_z + sum_pf - beta * std::log(traj.reward) - sum_pb;

  if (!grad.empty() && steps > 0) {
    const double coef = scale * residual;
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
    for (std::size_t j = 0; j < steps; ++j) {
      const auto& legal = traj.legal[j];
      for (std::size_t i = 0; i < legal.size(); ++i) {
        const double onehot = static_cast<int>(i) == taken[j] ? 1.0 : 0.0;
        dlogits(legal[i], static_cast<Eigen::Index>(j)) =
            coef * (onehot - std::exp(log_probs[j][i]));
      }
    }
    model.backprop(states, dlogits, grad);
  }
  return residual;
}

}  // namespace detail

namespace {

constexpr int kGradientBlock = 4;

void count_gradient(const Trajectory& t, ProvenanceCounters* counters) {
  if (t.provenance == Provenance::kEval) {
    if (counters) ++counters->gradient_eval;
    fail(ErrorKind::kPrecondition, "eval-tagged sample reached the gradient");
  }
  if (counters) ++counters->gradient_train;
}

TBLossReport finish_report(const Policy& model, std::vector<double> residuals) {
  TBLossReport report;
  report.log_z = model.log_z;
  double sum = 0.0;
  for (double r : residuals) sum += r * r;
  report.loss = sum / static_cast<double>(residuals.size());
  report.residuals = std::move(residuals);
  return report;
}

}  // namespace

std::vector<Trajectory> sample_batch_serial(const Policy& model,
                                            const ArmSpace& arms,
                                            const SuperArm& restriction,
                                            double epsilon, std::uint64_t seed,
                                            int count, Provenance provenance) {
  std::vector<Trajectory> batch;
  batch.reserve(count);
  for (int b = 0; b < count; ++b) {
    Rng rng = make_rng(seed, "traj", b);
    batch.push_back(
        sample_trajectory(model, arms, restriction, epsilon, rng, provenance));
  }
  return batch;
}

std::vector<Trajectory> sample_batch_parallel(const Policy& model,
                                              const ArmSpace& arms,
                                              const SuperArm& restriction,
                                              double epsilon, std::uint64_t seed,
                                              int count, Provenance provenance) {
  std::vector<Trajectory> batch(count);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < count; ++b) {
    try {
      Rng rng = make_rng(seed, "traj", b);
      batch[b] =
          sample_trajectory(model, arms, restriction, epsilon, rng, provenance);
    } catch (...) {
#pragma omp critical(cmabgfn_sample_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return batch;
}

TBLossReport tb_gradient_serial(const Policy& model,
                                std::span<const Trajectory> batch, double beta,
                                Gradient& grad, ProvenanceCounters* counters) {
  require(!batch.empty(), ErrorKind::kPrecondition, "empty trajectory batch");
  grad.params.assign(model.num_params(), 0.0);
  grad.log_z = 0.0;
  for (const auto& t : batch) count_gradient(t, counters);
  const double scale = 2.0 / static_cast<double>(batch.size());
  std::vector<double> residuals;
  residuals.reserve(batch.size());
  for (const auto& t : batch) {
    const double r = detail::trajectory_gradient(model, t, beta, scale, grad.params);
    residuals.push_back(r);
    grad.log_z += scale * r;
  }
  return finish_report(model, std::move(residuals));
}

TBLossReport tb_gradient_parallel(const Policy& model,
                                  std::span<const Trajectory> batch, double beta,
                                  Gradient& grad, ProvenanceCounters* counters) {
  require(!batch.empty(), ErrorKind::kPrecondition, "empty trajectory batch");
  for (const auto& t : batch) count_gradient(t, counters);
  const int n = static_cast<int>(batch.size());
  const int blocks = (n + kGradientBlock - 1) / kGradientBlock;
  const double scale = 2.0 / static_cast<double>(n);
  const std::size_t p = model.num_params();
  std::vector<std::vector<double>> partial(blocks);
  std::vector<double> residuals(n, 0.0);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (int blk = 0; blk < blocks; ++blk) {
    try {
      partial[blk].assign(p, 0.0);
      const int end = std::min(n, (blk + 1) * kGradientBlock);
      for (int b = blk * kGradientBlock; b < end; ++b) {
        residuals[b] =
            detail::trajectory_gradient(model, batch[b], beta, scale, partial[blk]);
      }
    } catch (...) {
#pragma omp critical(cmabgfn_grad_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  grad.params.assign(p, 0.0);
  for (const auto& part : partial) {
    for (std::size_t i = 0; i < p; ++i) grad.params[i] += part[i];
  }
  grad.log_z = 0.0;
  for (double r : residuals) grad.log_z += scale * r;
  return finish_report(model, std::move(residuals));
}

}  // namespace cmabgfn
