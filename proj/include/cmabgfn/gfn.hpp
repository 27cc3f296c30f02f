#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmabgfn/env.hpp"
#include "cmabgfn/policy.hpp"

namespace cmabgfn {

struct TrainConfig {
  int batch_size = 16;
  double beta = 1.0;
  double epsilon = 0.01;
  // Exploration used for evaluation batches; negative means "same as
  // training".
  double eval_epsilon = -1.0;
  int steps_per_round = 1;
  AdamConfig adam;
  bool parallel = true;

  double effective_eval_epsilon() const {
    return eval_epsilon < 0.0 ? epsilon : eval_epsilon;
  }
};

void validate(const TrainConfig& cfg);

struct TBLossReport {
  double loss = 0.0;
  std::vector<double> residuals;
  double log_z = 0.0;
};

// Counts samples by provenance and by whether they entered a gradient.
struct ProvenanceCounters {
  long train_sampled = 0;
  long eval_sampled = 0;
  long gradient_train = 0;
  long gradient_eval = 0;
};

Trajectory sample_trajectory(const Policy& model, const ArmSpace& arms,
                             const SuperArm& restriction, double epsilon,
                             Rng& rng, Provenance provenance = Provenance::kTrain);

// TB residual of one trajectory under the current parameters:
// log Z + sum log P_F - beta log R - sum log P_B.
double tb_residual(const Policy& model, const Trajectory& traj, double beta);

TBLossReport tb_loss(const Policy& model, std::span<const Trajectory> batch,
                     double beta);

// -- Batch kernels -------------------------------------------------------------
// Trajectory b of a batch draws from make_rng(seed, "traj", b), so the serial
// and parallel samplers return identical batches. The parallel gradient sums
// fixed blocks of trajectories and then reduces blocks in order; the result is
// independent of the thread count and equal to the serial sum up to rounding.

std::vector<Trajectory> sample_batch_serial(const Policy& model,
                                            const ArmSpace& arms,
                                            const SuperArm& restriction,
                                            double epsilon, std::uint64_t seed,
                                            int count, Provenance provenance);
std::vector<Trajectory> sample_batch_parallel(const Policy& model,
                                              const ArmSpace& arms,
                                              const SuperArm& restriction,
                                              double epsilon, std::uint64_t seed,
                                              int count, Provenance provenance);

// Gradient of the mean squared TB residual. Refuses eval-tagged samples.
TBLossReport tb_gradient_serial(const Policy& model,
                                std::span<const Trajectory> batch, double beta,
                                Gradient& grad,
                                ProvenanceCounters* counters = nullptr);
TBLossReport tb_gradient_parallel(const Policy& model,
                                  std::span<const Trajectory> batch, double beta,
                                  Gradient& grad,
                                  ProvenanceCounters* counters = nullptr);

struct RoundResult {
  TBLossReport report;
  std::vector<Trajectory> batch;
};

// One constrained training round: sample, TB gradient, one optimizer step per
// `steps_per_round`. A non-finite gradient leaves the model untouched and
// throws kNonFiniteGradient.
RoundResult train_round(Policy& model, Adam& opt, const ArmSpace& arms,
                        const SuperArm& restriction, const TrainConfig& cfg,
                        std::uint64_t seed, ProvenanceCounters& counters);

// Unrestricted evaluation samples; never used for gradients.
std::vector<Trajectory> evaluate_batch(const Policy& model, const ArmSpace& arms,
                                       int n_samples, const TrainConfig& cfg,
                                       std::uint64_t seed,
                                       ProvenanceCounters& counters);

struct ElboEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

// Monte-Carlo average of beta*log R + sum log P_B - sum log P_F over on-policy
// (epsilon = 0) unrestricted samples.
ElboEstimate elbo_estimate(const Policy& model, const ArmSpace& arms,
                           int m_samples, double beta, std::uint64_t seed,
                           bool parallel = true);

double elbo_summand(const Trajectory& traj, double beta);

}  // namespace cmabgfn
