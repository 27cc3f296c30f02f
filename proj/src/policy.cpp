#include "cmabgfn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace cmabgfn {

namespace {

constexpr const char* kMagic = "cmabgfn-policy";
constexpr int kFormatVersion = 1;

}  // namespace

bool Gradient::finite() const {
  if (!std::isfinite(log_z)) return false;
  return std::all_of(params.begin(), params.end(),
                     [](double g) { return std::isfinite(g); });
}

double Gradient::norm() const {
  double s = log_z * log_z;
  for (double g : params) s += g * g;
  return std::sqrt(s);
}

void Policy::logits_batch(std::span<const State* const> states,
                          Eigen::MatrixXd& out) const {
  out.resize(env_->action_space_size(), static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) {
    logits(*states[i], std::span<double>(out.col(static_cast<Eigen::Index>(i)).data(),
                                         static_cast<std::size_t>(out.rows())));
  }
}

// -- Tabular -----------------------------------------------------------------

TabularPolicy::TabularPolicy(const Environment& env)
    : Policy(env), width_(env.action_space_size()) {}

std::unique_ptr<Policy> TabularPolicy::clone() const {
  return std::make_unique<TabularPolicy>(*this);
}

void TabularPolicy::logits(const State& s, std::span<double> out) const {
  const auto it = offsets_.find(s);
  if (it == offsets_.end()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(it->second), width_,
              out.begin());
}

std::size_t TabularPolicy::ensure(const State& s) {
  auto [it, inserted] = offsets_.try_emplace(s, params_.size());
  if (inserted) {
    params_.resize(params_.size() + width_, 0.0);
    order_.push_back(s);
  }
  return it->second;
}

void TabularPolicy::register_states(std::span<const State* const> states) {
  for (const State* s : states) {
    if (!env_->is_terminal(*s)) ensure(*s);
  }
}

void TabularPolicy::set_logits(const State& s, std::span<const double> logits) {
  require(static_cast<int>(logits.size()) == width_, ErrorKind::kLengthMismatch,
          "tabular: logit vector has the wrong width");
  const std::size_t off = ensure(s);
  std::copy(logits.begin(), logits.end(),
            params_.begin() + static_cast<std::ptrdiff_t>(off));
}

void TabularPolicy::backprop(std::span<const State* const> states,
                             const Eigen::MatrixXd& dlogits,
                             std::span<double> grad) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto it = offsets_.find(*states[i]);
    require(it != offsets_.end(), ErrorKind::kPrecondition,
            "tabular: gradient for an unregistered state");
    for (int a = 0; a < width_; ++a) {
      grad[it->second + a] += dlogits(a, static_cast<Eigen::Index>(i));
    }
  }
}

void TabularPolicy::save(std::ostream& os) const {
  os.precision(17);
  os << kMagic << ' ' << kFormatVersion << '\n'
     << "backend tabular\n"
     << "env " << env_->name() << '\n'
     << "actions " << width_ << '\n'
     << "log_z " << log_z << '\n'
     << "states " << order_.size() << '\n';
  for (const State& s : order_) {
    os << s.cells.size();
    for (int c : s.cells) os << ' ' << c;
    const std::size_t off = offsets_.at(s);
    for (int a = 0; a < width_; ++a) os << ' ' << params_[off + a];
    os << '\n';
  }
}

void TabularPolicy::load_body(std::istream& is) {
  std::string key;
  std::size_t count = 0;
  int width = 0;
  is >> key >> width;
  require(key == "actions" && width == width_, ErrorKind::kIo,
          "checkpoint: action width mismatch");
  is >> key >> log_z;
  require(key == "log_z", ErrorKind::kIo, "checkpoint: missing log_z");
  is >> key >> count;
  require(key == "states", ErrorKind::kIo, "checkpoint: missing states");
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t n = 0;
    is >> n;
    State s;
    s.cells.resize(n);
    for (auto& c : s.cells) is >> c;
    std::vector<double> row(width_);
    for (auto& v : row) is >> v;
    require(static_cast<bool>(is), ErrorKind::kIo, "checkpoint: truncated state row");
    set_logits(s, row);
  }
}

// -- MLP ---------------------------------------------------------------------

MlpPolicy::MlpPolicy(const Environment& env, int hidden, double init_scale,
                     Rng& rng)
    : Policy(env),
      in_(env.feature_size()),
      hidden_(hidden),
      out_(env.action_space_size()) {
  require(hidden >= 1, ErrorKind::kConfig, "mlp: hidden width must be >= 1");
  params_.resize(layout().total);
  for (auto& p : params_) p = init_scale * (2.0 * uniform01(rng) - 1.0);
}

std::unique_ptr<Policy> MlpPolicy::clone() const {
  return std::make_unique<MlpPolicy>(*this);
}

MlpPolicy::Layout MlpPolicy::layout() const {
  Layout l{};
  const std::size_t h = hidden_, in = in_, out = out_;
  l.w1 = 0;
  l.b1 = l.w1 + h * in;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + h * h;
  l.w3 = l.b2 + h;
  l.b3 = l.w3 + out * h;
  l.total = l.b3 + out;
  return l;
}

std::vector<int> MlpPolicy::active_features(const State& s) const {
  thread_local std::vector<double> buf;
  buf.assign(in_, 0.0);
  env_->encode(s, buf);
  std::vector<int> active;
  for (int f = 0; f < in_; ++f) {
    if (buf[f] != 0.0) {
      require(buf[f] == 1.0, ErrorKind::kPrecondition,
              "mlp: encodings must be one-hot");
      active.push_back(f);
    }
  }
  return active;
}

void MlpPolicy::forward(std::span<const std::vector<int>> active,
                        Eigen::MatrixXd& h1, Eigen::MatrixXd& h2,
                        Eigen::MatrixXd* out) const {
  using Map = Eigen::Map<const Eigen::MatrixXd>;
  using VMap = Eigen::Map<const Eigen::VectorXd>;
  const Layout l = layout();
  const double* p = params_.data();
  const Map w1(p + l.w1, hidden_, in_);
  const VMap b1(p + l.b1, hidden_);
  const Map w2(p + l.w2, hidden_, hidden_);
  const VMap b2(p + l.b2, hidden_);
  const Map w3(p + l.w3, out_, hidden_);
  const VMap b3(p + l.b3, out_);
  const auto n = static_cast<Eigen::Index>(active.size());

  h1.resize(hidden_, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    auto col = h1.col(j);
    col = b1;
    for (int f : active[j]) col += w1.col(f);
  }
  h1 = h1.array().tanh();
  h2.noalias() = w2 * h1;
  h2.colwise() += b2;
  h2 = h2.array().tanh();
  if (out) {
    out->noalias() = w3 * h2;
    out->colwise() += b3;
  }
}

void MlpPolicy::logits(const State& s, std::span<double> out) const {
  const std::vector<int> active[1] = {active_features(s)};
  Eigen::MatrixXd h1, h2, o;
  forward(active, h1, h2, &o);
  std::copy_n(o.data(), out_, out.begin());
}

void MlpPolicy::logits_batch(std::span<const State* const> states,
                             Eigen::MatrixXd& out) const {
  std::vector<std::vector<int>> active(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    active[i] = active_features(*states[i]);
  }
  Eigen::MatrixXd h1, h2;
  forward(active, h1, h2, &out);
}

void MlpPolicy::backprop(std::span<const State* const> states,
                         const Eigen::MatrixXd& dlogits,
                         std::span<double> grad) const {
  using Map = Eigen::Map<const Eigen::MatrixXd>;
  using MutMap = Eigen::Map<Eigen::MatrixXd>;
  using MutVMap = Eigen::Map<Eigen::VectorXd>;
  const Layout l = layout();
  std::vector<std::vector<int>> active(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    active[i] = active_features(*states[i]);
  }
  Eigen::MatrixXd h1, h2;
  forward(active, h1, h2, nullptr);

  const double* p = params_.data();
  const Map w2(p + l.w2, hidden_, hidden_);
  const Map w3(p + l.w3, out_, hidden_);
  double* g = grad.data();
  MutMap gw1(g + l.w1, hidden_, in_);
  MutVMap gb1(g + l.b1, hidden_);
  MutMap gw2(g + l.w2, hidden_, hidden_);
  MutVMap gb2(g + l.b2, hidden_);
  MutMap gw3(g + l.w3, out_, hidden_);
  MutVMap gb3(g + l.b3, out_);

  const Eigen::MatrixXd& dout = dlogits;
  gw3.noalias() += dout * h2.transpose();
  gb3 += dout.rowwise().sum();
  Eigen::MatrixXd da2 = w3.transpose() * dout;
  da2.array() *= 1.0 - h2.array().square();
  gw2.noalias() += da2 * h1.transpose();
  gb2 += da2.rowwise().sum();
  Eigen::MatrixXd da1 = w2.transpose() * da2;
  da1.array() *= 1.0 - h1.array().square();
  gb1 += da1.rowwise().sum();
  for (std::size_t j = 0; j < active.size(); ++j) {
    for (int f : active[j]) gw1.col(f) += da1.col(static_cast<Eigen::Index>(j));
  }
}

void MlpPolicy::save(std::ostream& os) const {
  os.precision(17);
  os << kMagic << ' ' << kFormatVersion << '\n'
     << "backend mlp\n"
     << "env " << env_->name() << '\n'
     << "shape " << in_ << ' ' << hidden_ << ' ' << out_ << '\n'
     << "log_z " << log_z << '\n'
     << "params " << params_.size() << '\n';
  for (std::size_t i = 0; i < params_.size(); ++i) {
    os << params_[i] << ((i + 1) % 8 == 0 || i + 1 == params_.size() ? '\n' : ' ');
  }
}

void MlpPolicy::load_body(std::istream& is) {
  std::string key;
  int in = 0, hidden = 0, out = 0;
  is >> key >> in >> hidden >> out;
  require(key == "shape" && in == in_ && out == out_, ErrorKind::kIo,
          "checkpoint: network shape does not match the environment");
  hidden_ = hidden;
  is >> key >> log_z;
  require(key == "log_z", ErrorKind::kIo, "checkpoint: missing log_z");
  std::size_t count = 0;
  is >> key >> count;
  require(key == "params" && count == layout().total, ErrorKind::kIo,
          "checkpoint: parameter count mismatch");
  params_.resize(count);
  for (auto& v : params_) is >> v;
  require(static_cast<bool>(is), ErrorKind::kIo, "checkpoint: truncated parameters");
}

std::unique_ptr<Policy> load_policy(std::istream& is, const Environment& env) {
  std::string magic, key, value, env_name;
  int version = 0;
  is >> magic >> version;
  require(magic == kMagic && version == kFormatVersion, ErrorKind::kIo,
          "checkpoint: bad header");
  is >> key >> value;
  require(key == "backend", ErrorKind::kIo, "checkpoint: missing backend");
  is >> key >> env_name;
  require(key == "env" && env_name == env.name(), ErrorKind::kIo,
          "checkpoint: environment mismatch");
  if (value == "tabular") {
    auto p = std::make_unique<TabularPolicy>(env);
    p->load_body(is);
    return p;
  }
  require(value == "mlp", ErrorKind::kIo, "checkpoint: unknown backend " + value);
  Rng rng(0);
  auto p = std::make_unique<MlpPolicy>(env, 1, 0.0, rng);
  p->load_body(is);
  return p;
}

// -- Distributions -------------------------------------------------------------

std::vector<double> masked_log_softmax(std::span<const double> logits,
                                       std::span<const int> legal) {
  require(!legal.empty(), ErrorKind::kAllMasked, "mask removes every action");
  double hi = -std::numeric_limits<double>::infinity();
  for (int a : legal) hi = std::max(hi, logits[a]);
  double sum = 0.0;
  for (int a : legal) sum += std::exp(logits[a] - hi);
  const double lse = hi + std::log(sum);
  std::vector<double> out(legal.size());
  for (std::size_t i = 0; i < legal.size(); ++i) out[i] = logits[legal[i]] - lse;
  return out;
}

int sample_legal_index(std::span<const double> log_probs, double epsilon,
                       Rng& rng) {
  require(!log_probs.empty(), ErrorKind::kAllMasked, "no legal action to sample");
  require(epsilon >= 0.0 && epsilon <= 1.0, ErrorKind::kPrecondition,
          "epsilon must be in [0, 1]");
  const double coin = uniform01(rng);
  const double pick = uniform01(rng);
  const int n = static_cast<int>(log_probs.size());
  if (coin < epsilon) return std::min(static_cast<int>(pick * n), n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += std::exp(log_probs[i]);
    if (pick < acc) return i;
  }
  // Rounding left a sliver above the accumulated mass: take the last action
  // with non-zero probability.
  for (int i = n - 1; i >= 0; --i) {
    if (std::exp(log_probs[i]) > 0.0) return i;
  }
  return n - 1;
}

double backward_logprob(const Environment& env, const State& child) {
  const int parents = env.num_parents(child);
  require(parents >= 1, ErrorKind::kPrecondition,
          "backward probability of the initial state");
  return -std::log(static_cast<double>(parents));
}

// -- Adam --------------------------------------------------------------------

void Adam::step(Policy& model, const Gradient& grad) {
  require(grad.finite(), ErrorKind::kNonFiniteGradient,
          "non-finite gradient component; update skipped");
  auto& p = model.params();
  require(grad.params.size() == p.size(), ErrorKind::kLengthMismatch,
          "gradient does not match parameter count");
  if (m_.size() < p.size()) {
    m_.resize(p.size(), 0.0);
    v_.resize(p.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double g = grad.params[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    p[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
  }
  mz_ = cfg_.beta1 * mz_ + (1.0 - cfg_.beta1) * grad.log_z;
  vz_ = cfg_.beta2 * vz_ + (1.0 - cfg_.beta2) * grad.log_z * grad.log_z;
  model.log_z -= cfg_.lr_log_z * (mz_ / c1) / (std::sqrt(vz_ / c2) + cfg_.eps);
}

}  // namespace cmabgfn
