#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "cmabgfn/envs.hpp"
#include "cmabgfn/gfn.hpp"
#include "cmabgfn/policy.hpp"

namespace testutil {

using namespace cmabgfn;

inline std::unique_ptr<SeqDesignEnv> small_seq(int alphabet, int length,
                                               std::vector<std::string> peaks,
                                               double scale = 1.0) {
  SeqDesignConfig c;
  c.alphabet = alphabet;
  c.length = length;
  c.peaks = std::move(peaks);
  c.scale = scale;
  return std::make_unique<SeqDesignEnv>(c);
}

inline std::unique_ptr<BitSeqEnv> small_bitseq(int n, int k,
                                               std::vector<std::string> modes,
                                               int delta = 2) {
  BitSeqConfig c;
  c.n = n;
  c.k = k;
  c.modes = std::move(modes);
  c.delta = delta;
  return std::make_unique<BitSeqEnv>(c);
}

inline std::unique_ptr<FragmentEnv> small_fragment(int vocab, int max_blocks,
                                                   std::uint64_t seed = 3) {
  SyntheticFragmentSpec s;
  s.vocab = vocab;
  s.max_blocks = max_blocks;
  s.planted = std::min(3, vocab);
  s.seed = seed;
  return std::make_unique<FragmentEnv>(make_synthetic_fragment_config(s));
}

// Walks one uniformly random trajectory with the full action set.
inline std::vector<State> random_walk(const Environment& env, Rng& rng) {
  std::vector<State> states{env.initial_state()};
  while (!env.is_terminal(states.back())) {
    const auto acts = env.legal_actions(states.back());
    states.push_back(env.apply(states.back(), acts[uniform_index(rng, acts.size())]));
  }
  return states;
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace testutil
