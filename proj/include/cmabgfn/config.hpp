#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cmabgfn/envs.hpp"
#include "cmabgfn/gfn.hpp"
#include "cmabgfn/policy.hpp"
#include "cmabgfn/protocol.hpp"

namespace cmabgfn {

// Environment block. Only the keys of the selected kind are accepted.
struct EnvBlock {
  std::string kind = "bitseq";  // bitseq | seq | fragment
  std::uint64_t table_seed = 0; // seeds generated modes / peaks / tables

  // bitseq
  int n = 16;
  int k = 4;
  std::vector<std::string> modes;  // explicit; generated when empty
  std::vector<std::string> mode_patterns = {"00000000", "11111111", "11110000",
                                            "00001111", "00111100"};
  int num_modes = 10;
  int delta = 2;

  // seq
  int alphabet = 4;
  int length = 8;
  std::vector<std::string> peaks;  // explicit; generated when empty
  int num_peaks = 20;
  double scale = 1.0;
  int mode_radius = 1;

  // fragment
  SyntheticFragmentSpec fragment;
};

struct GfnBlock {
  Backend backend = Backend::kMlp;
  int hidden = 256;
  double init_scale = 0.01;
  TrainConfig train;
};

struct OutputBlock {
  int w_snapshot_every = 0;  // epochs; 0 writes only the final matrix
  bool checkpoint = true;
};

struct RunConfig {
  EnvBlock env;
  GfnBlock gfn;
  ProtocolConfig protocol;
  OutputBlock output;
};

// Parses the YAML text; unknown keys and out-of-range values are rejected
// with kConfig. Cross-checks against the environment happen in validate().
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical text: fixed key order, every field written, shortest
// round-trip decimal for reals. parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& cfg);

// FNV-1a over the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

std::unique_ptr<Environment> make_environment(const EnvBlock& env);
std::unique_ptr<Policy> make_policy(const Environment& env, const GfnBlock& gfn,
                                    std::uint64_t seed);

// Full validation, including the environment-dependent checks (K range,
// hard-prune set). Builds the environment to do so.
void validate(const RunConfig& cfg);

std::string format_real(double v);

}  // namespace cmabgfn
