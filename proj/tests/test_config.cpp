#include <doctest.h>

#include <cstdlib>

#include "ohio/config.hpp"
#include "ohio/dataset_io.hpp"
#include "tempdir.hpp"

using namespace ohio;

namespace {

struct SeedEnv {
  explicit SeedEnv(const char* value) { ::setenv("OHIO_SEED", value, 1); }
  ~SeedEnv() { ::unsetenv("OHIO_SEED"); }
};

ErrorCode load_error(const std::vector<std::pair<std::string, std::string>>& overrides) {
  try {
    RunConfig::load(std::nullopt, overrides, false);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Usage;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("defaults build every section") {
  const RunConfig cfg;
  CHECK(cfg.seed() == 0);
  CHECK(cfg.env_kind() == EnvKind::Linear);
  CHECK(cfg.make_env()->observation_dim() == 4);
  CHECK(cfg.low_level().t_abs == 5);
  CHECK(cfg.relabel().inversion.method == InversionMethod::AnalyticHorizon);
  CHECK(cfg.learner().epochs == 200);
  CHECK(cfg.policy_kind() == PolicyKind::HierarchicalExpert);
}

TEST_CASE("file, environment seed and flags layer in that order") {
  TempDir dir;
  write_text_file(dir / "c.json", R"({"seed": 3, "env": {"kind": "supply_chain"}, "learn": {"epochs": 7}})");
  {
    const RunConfig cfg = RunConfig::load(dir / "c.json", {{"learn.epochs", "9"}}, true);
    CHECK(cfg.seed() == 3);
    CHECK(cfg.env_kind() == EnvKind::SupplyChain);
    CHECK(cfg.learner().epochs == 9);
  }
  SeedEnv env("11");
  CHECK(RunConfig::load(dir / "c.json", {}, true).seed() == 11);
  CHECK(RunConfig::load(dir / "c.json", {}, false).seed() == 3);
  CHECK(RunConfig::load(dir / "c.json", {{"seed", "5"}}, true).seed() == 5);
}

TEST_CASE("override values are parsed as JSON or taken as strings") {
  RunConfig cfg;
  cfg.set("env.kind", "routing");
  cfg.set("learn.hidden", "[8,8,8]");
  cfg.set("relabel.overlap", "true");
  cfg.set("eval.reference", "12.5");
  CHECK(cfg.env_kind() == EnvKind::Routing);
  CHECK(cfg.learner().hidden == std::vector<int>{8, 8, 8});
  CHECK(cfg.relabel().overlap);
  CHECK(cfg.tree()["eval"]["reference"].get<double>() == 12.5);
}

TEST_CASE("bad configuration is rejected") {
  CHECK(load_error({{"env.nope", "1"}}) == ErrorCode::InvalidConfig);
  CHECK(load_error({{"learn.epochs", "many"}}) == ErrorCode::InvalidConfig);
  CHECK(load_error({{"env", "3"}}) == ErrorCode::InvalidConfig);
  RunConfig cfg;
  cfg.set("env.kind", "warp");
  CHECK_THROWS_AS(cfg.env_kind(), Error);
  cfg = RunConfig();
  cfg.set("learn.expectile", "1.5");
  CHECK_THROWS_AS(cfg.learner(), Error);
  cfg = RunConfig();
  cfg.set("relabel.method", "analytic_one_step");
  CHECK_THROWS_AS(cfg.relabel(), Error);  // one-step needs t_abs = 1
  TempDir dir;
  write_text_file(dir / "broken.json", "{\"seed\": ");
  CHECK_THROWS_AS(RunConfig::load(dir / "broken.json", {}, false), Error);
  SeedEnv env("-4");
  CHECK_THROWS_AS(RunConfig::load(std::nullopt, {}, true), Error);
}

TEST_CASE("config hash ignores paths and tracks everything else") {
  RunConfig a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.set("paths.raw", "elsewhere.jsonl");
  CHECK(a.hash() == b.hash());
  b.set("learn.lr", "0.002");
  CHECK(a.hash() != b.hash());
}
