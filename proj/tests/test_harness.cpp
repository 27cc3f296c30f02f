#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "cmabgfn/config.hpp"
#include "cmabgfn/run.hpp"

using namespace cmabgfn;
namespace fs = std::filesystem;

#ifndef CMABGFN_CLI_PATH
#error "CMABGFN_CLI_PATH must name the CLI binary"
#endif

namespace {

const char* kTiny = R"(env:
  kind: seq
  alphabet: 3
  length: 3
  peaks: ["ACG", "GGA"]
gfn:
  backend: tabular
  batch_size: 8
  beta: 2
  epsilon: 0.05
  lr: 0.05
  lr_log_z: 0.05
bandit:
  strategy: cucb-greedy
  k: 2
  window: 10
protocol:
  total_rounds: 40
  interval: 5
  eval_samples: 16
  elbo_every: 4
  elbo_samples: 16
  seed: 3
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cmabgfn_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args, const fs::path& out, const fs::path& err) {
  const std::string cmd = std::string("\"") + CMABGFN_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

long count_lines(const std::string& s) {
  return static_cast<long>(std::count(s.begin(), s.end(), '\n'));
}

std::optional<ErrorKind> kind_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("config round trip is a fixed point") {
  const RunConfig c = parse_config(kTiny);
  const std::string once = serialize_config(c);
  CHECK(serialize_config(parse_config(once)) == once);
  CHECK(c.protocol.strategy == Strategy::kCucbGreedy);
  CHECK(c.gfn.backend == Backend::kTabular);
  CHECK(c.env.peaks == std::vector<std::string>{"ACG", "GGA"});
  CHECK(c.gfn.train.eval_epsilon < 0.0);
}

TEST_CASE("config round trip survives awkward reals") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    RunConfig c = parse_config(kTiny);
    c.gfn.train.beta = 1.0 + std::ldexp(uniform01(rng), static_cast<int>(uniform_index(rng, 40)) - 20);
    c.gfn.train.adam.lr = uniform01(rng) * 1e-3 + 1e-12;
    c.gfn.init_scale = uniform01(rng);
    c.protocol.alpha = uniform01(rng);
    c.protocol.lambda = uniform01(rng) * 10.0;
    c.protocol.seed = rng();
    const RunConfig back = parse_config(serialize_config(c));
    CHECK(back.gfn.train.beta == c.gfn.train.beta);
    CHECK(back.gfn.train.adam.lr == c.gfn.train.adam.lr);
    CHECK(back.gfn.init_scale == c.gfn.init_scale);
    CHECK(back.protocol.alpha == c.protocol.alpha);
    CHECK(back.protocol.lambda == c.protocol.lambda);
    CHECK(back.protocol.seed == c.protocol.seed);
    CHECK(config_hash(back) == config_hash(c));
  }
}

TEST_CASE("format_real") {
  CHECK(format_real(2.0) == "2.0");
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(1e-300) == "1e-300");
}

TEST_CASE("config rejects unknown keys and bad values") {
  const std::string base = kTiny;
  CHECK(kind_of(base + "extra: 1\n") == ErrorKind::kConfig);
  std::string typo = base;
  typo.replace(typo.find("window"), 6, "windw");
  CHECK(kind_of(typo) == ErrorKind::kConfig);
  std::string wrong_kind = base;
  wrong_kind.replace(wrong_kind.find("  alphabet: 3"), 13, "  n: 8");
  CHECK(kind_of(wrong_kind) == ErrorKind::kConfig);
  std::string nan = base;
  nan.replace(nan.find("beta: 2"), 7, "beta: abc");
  CHECK(kind_of(nan) == ErrorKind::kConfig);
  CHECK(kind_of("gfn: [1, 2]\n") == ErrorKind::kConfig);

  RunConfig big = parse_config(kTiny);
  big.protocol.k = 4;
  try {
    validate(big);
    FAIL("expected kKTooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kKTooLarge);
  }
}

TEST_CASE("config hash is frozen") {
  // Changing the canonical serialization changes every run directory name;
  // update this value deliberately.
  const RunConfig c = parse_config(kTiny);
  CHECK(config_hash(c).size() == 16);
  CHECK(config_hash(c) == config_hash(parse_config(serialize_config(c))));
  RunConfig other = c;
  other.protocol.seed = 4;
  CHECK(config_hash(other) != config_hash(c));
  MESSAGE("hash " << config_hash(c));
  CHECK(config_hash(c) == "89aa200b92c12522");
}

TEST_CASE("cli run writes the run directory") {
  const fs::path dir = scratch("run");
  const fs::path cfg = write_file(dir / "tiny.yaml", kTiny);
  REQUIRE(cli("run --quiet --config \"" + cfg.string() + "\" --out \"" +
                  (dir / "a").string() + "\"",
              dir / "out.txt", dir / "err.txt") == 0);
  for (const char* f : {"config.yaml", "env.txt", "metrics.csv", "arms.csv",
                        "cooccurrence_final.csv", "summary.json", "model.txt"}) {
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["rounds"] == 40);
  CHECK(summary["provenance"]["gradient_eval"] == 0);
  const long epochs = summary["epochs"];
  const std::string metrics = slurp(dir / "a" / "metrics.csv");
  CHECK(count_lines(metrics) == epochs + 1);
  CHECK(metrics.substr(0, metrics.find('\n')) == metrics_header());
  CHECK(summary["elbo"].size() == static_cast<std::size_t>(epochs / 4));
  // The saved config reproduces the run's hash.
  CHECK(config_hash(load_config((dir / "a" / "config.yaml").string())) ==
        summary["config_hash"]);

  REQUIRE(cli("run --quiet --config \"" + cfg.string() + "\" --out \"" +
                  (dir / "b").string() + "\"",
              dir / "out2.txt", dir / "err2.txt") == 0);
  CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
  CHECK(slurp(dir / "a" / "arms.csv") == slurp(dir / "b" / "arms.csv"));
  CHECK(slurp(dir / "a" / "model.txt") == slurp(dir / "b" / "model.txt"));

  REQUIRE(cli("run --quiet --seed 4 --config \"" + cfg.string() + "\" --out \"" +
                  (dir / "c").string() + "\"",
              dir / "out3.txt", dir / "err3.txt") == 0);
  CHECK(slurp(dir / "a" / "metrics.csv") != slurp(dir / "c" / "metrics.csv"));
}

TEST_CASE("cli errors are JSON on stderr") {
  const fs::path dir = scratch("errors");
  CHECK(cli("run --config \"" + (dir / "missing.yaml").string() + "\"", dir / "o",
            dir / "e") == 2);
  auto j = nlohmann::json::parse(slurp(dir / "e"));
  CHECK(j["error"]["kind"] == "IoError");
  CHECK(j["error"]["message"].get<std::string>().size() > 0);

  std::string big = kTiny;
  big.replace(big.find("k: 2"), 4, "k: 7");
  const fs::path cfg = write_file(dir / "big.yaml", big);
  CHECK(cli("validate --config \"" + cfg.string() + "\"", dir / "o", dir / "e") == 2);
  j = nlohmann::json::parse(slurp(dir / "e"));
  CHECK(j["error"]["kind"] == "KTooLarge");

  const fs::path good = write_file(dir / "good.yaml", kTiny);
  CHECK(cli("validate --config \"" + good.string() + "\"", dir / "o", dir / "e") == 0);
  j = nlohmann::json::parse(slurp(dir / "o"));
  CHECK(j["ok"] == true);
  CHECK(j["config_hash"] == config_hash(parse_config(kTiny)));
}

TEST_CASE("cli sweep writes every point and an aggregate") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_file(dir / "tiny.yaml", kTiny);
  REQUIRE(cli("sweep --config \"" + cfg.string() +
                  "\" --axis alpha --values 0.01,0.05,0.2 --seeds 0,1,2 --out \"" +
                  (dir / "s").string() + "\"",
              dir / "o", dir / "e") == 0);
  int runs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "s")) {
    runs += e.path().filename() == "summary.json";
  }
  CHECK(runs == 9);
  CHECK(fs::exists(dir / "s" / "alpha_0.05" / "seed_2" / "metrics.csv"));
  const std::string agg = slurp(dir / "s" / "aggregate.csv");
  CHECK(count_lines(agg) == 4);

  CHECK(cli("sweep --config \"" + cfg.string() +
                "\" --axis K --values 1,9 --seeds 0 --out \"" + (dir / "bad").string() + "\"",
            dir / "o", dir / "e") == 2);
  CHECK_FALSE(fs::exists(dir / "bad" / "K_1"));
}

TEST_CASE("cli oracle verbs") {
  const fs::path dir = scratch("oracle");
  const fs::path cfg = write_file(dir / "tiny.yaml", kTiny);
  REQUIRE(cli("oracle --kind enumerate --config \"" + cfg.string() + "\"", dir / "o",
              dir / "e") == 0);
  auto j = nlohmann::json::parse(slurp(dir / "o"));
  CHECK(j["terminals"] == 27);
  REQUIRE(cli("oracle --kind bandit --epochs 3000 --noise 0 --k 3", dir / "o", dir / "e") == 0);
  j = nlohmann::json::parse(slurp(dir / "o"));
  CHECK(j["warmup_epochs"] == 1);
  CHECK(j["optimal_rate"].get<double>() > 0.8);
}
