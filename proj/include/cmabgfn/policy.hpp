#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cmabgfn/env.hpp"
#include "cmabgfn/rng.hpp"

namespace cmabgfn {

enum class Backend { kTabular, kMlp };

struct Gradient {
  std::vector<double> params;
  double log_z = 0.0;

  bool finite() const;
  double norm() const;
};

// Forward policy P_F(.|s; theta) with a scalar log-partition parameter.
// Evaluation is const and safe to call concurrently; anything that mutates
// parameters belongs to the serialized update phase.
class Policy {
 public:
  explicit Policy(const Environment& env) : env_(&env) {}
  virtual ~Policy() = default;

  virtual Backend backend() const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;

  const Environment& env() const { return *env_; }

  // Raw logits over the full action space of the environment.
  virtual void logits(const State& s, std::span<double> out) const = 0;

  // Column i of `out` holds the raw logits of states[i].
  virtual void logits_batch(std::span<const State* const> states,
                            Eigen::MatrixXd& out) const;

  // Column i of `dlogits` is dL/dlogits for states[i]; accumulates into grad.
  virtual void backprop(std::span<const State* const> states,
                        const Eigen::MatrixXd& dlogits,
                        std::span<double> grad) const = 0;

  // Makes sure every non-terminal state of the batch has parameters. Only the
  // tabular backend grows; called in the serialized phase.
  virtual void register_states(std::span<const State* const>) {}

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  double log_z = 0.0;

  virtual void save(std::ostream& os) const = 0;

 protected:
  const Environment* env_;
  std::vector<double> params_;
};

class TabularPolicy final : public Policy {
 public:
  explicit TabularPolicy(const Environment& env);

  Backend backend() const override { return Backend::kTabular; }
  std::unique_ptr<Policy> clone() const override;
  void logits(const State& s, std::span<double> out) const override;
  void backprop(std::span<const State* const> states,
                const Eigen::MatrixXd& dlogits,
                std::span<double> grad) const override;
  void register_states(std::span<const State* const> states) override;

  void set_logits(const State& s, std::span<const double> logits);
  std::size_t num_states() const { return offsets_.size(); }

  void save(std::ostream& os) const override;
  void load_body(std::istream& is);

 private:
  std::size_t ensure(const State& s);

  int width_;
  std::unordered_map<State, std::size_t, StateHash> offsets_;
  std::vector<State> order_;  // insertion order, for stable checkpoints
};

// Two tanh hidden layers over the environment's one-hot state encoding.
class MlpPolicy final : public Policy {
 public:
  MlpPolicy(const Environment& env, int hidden, double init_scale, Rng& rng);

  Backend backend() const override { return Backend::kMlp; }
  std::unique_ptr<Policy> clone() const override;
  void logits(const State& s, std::span<double> out) const override;
  void logits_batch(std::span<const State* const> states,
                    Eigen::MatrixXd& out) const override;
  void backprop(std::span<const State* const> states,
                const Eigen::MatrixXd& dlogits,
                std::span<double> grad) const override;

  int input_size() const { return in_; }
  int hidden_size() const { return hidden_; }
  int output_size() const { return out_; }

  void save(std::ostream& os) const override;
  void load_body(std::istream& is);

 private:
  struct Layout {
    std::size_t w1, b1, w2, b2, w3, b3, total;
  };
  Layout layout() const;
  // Column j of each matrix is the activation of states[j].
  void forward(std::span<const std::vector<int>> active, Eigen::MatrixXd& h1,
               Eigen::MatrixXd& h2, Eigen::MatrixXd* out) const;
  std::vector<int> active_features(const State& s) const;

  int in_, hidden_, out_;
};

std::unique_ptr<Policy> load_policy(std::istream& is, const Environment& env);

// Log-softmax over `legal` entries of `logits`; throws kAllMasked if empty.
std::vector<double> masked_log_softmax(std::span<const double> logits,
                                       std::span<const int> legal);

// Picks an index into the legal list. Draws exactly two uniforms: the first
// decides exploration (u < epsilon), the second selects the action, either
// uniformly or by inverse CDF of the policy probabilities.
int sample_legal_index(std::span<const double> log_probs, double epsilon,
                       Rng& rng);

// Uniform backward policy: -log(#incoming edges of `child`).
double backward_logprob(const Environment& env, const State& child);

struct AdamConfig {
  double lr = 1e-3;
  double lr_log_z = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Rejects non-finite gradients before touching the model.
  void step(Policy& model, const Gradient& grad);

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  AdamConfig& config() { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  double mz_ = 0.0, vz_ = 0.0;
  long t_ = 0;
};

}  // namespace cmabgfn
