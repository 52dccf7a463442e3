#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include <ohio/ohio.h>

#include "tempdir.hpp"

namespace {

struct Config {
  ohio_config* p = nullptr;
  Config() { REQUIRE(ohio_config_new(nullptr, 0, &p) == OHIO_OK); }
  ~Config() { ohio_config_free(p); }
};

}  // namespace

TEST_CASE("config handle: set, seed, hash, json") {
  Config cfg;
  uint64_t seed = 99;
  CHECK(ohio_config_seed(cfg.p, &seed) == OHIO_OK);
  CHECK(seed == 0);
  CHECK(ohio_config_set(cfg.p, "seed", "12") == OHIO_OK);
  CHECK(ohio_config_seed(cfg.p, &seed) == OHIO_OK);
  CHECK(seed == 12);
  CHECK(std::strlen(ohio_config_hash(cfg.p)) == 16);
  CHECK(std::string(ohio_config_json(cfg.p)).find("\"seed\": 12") != std::string::npos);

  CHECK(ohio_config_set(cfg.p, "env.bogus", "1") == OHIO_ERR_USAGE);
  CHECK(std::string(ohio_last_error_kind()) == "InvalidConfig");
  CHECK(std::string(ohio_last_error()).find("env.bogus") != std::string::npos);
  REQUIRE(ohio_config_set(cfg.p, "env.kind", "\"teleporter\"") == OHIO_OK);
  ohio_env* env = nullptr;
  CHECK(ohio_env_new(cfg.p, &env) == OHIO_ERR_USAGE);
  CHECK(std::string(ohio_last_error()).find("env.kind") != std::string::npos);

  ohio_config* missing = nullptr;
  CHECK(ohio_config_new("/nonexistent/cfg.json", 0, &missing) == OHIO_ERR_DATA);
  CHECK(missing == nullptr);
}

TEST_CASE("null arguments are usage errors") {
  CHECK(ohio_config_new(nullptr, 0, nullptr) == OHIO_ERR_USAGE);
  CHECK(ohio_config_set(nullptr, "seed", "1") == OHIO_ERR_USAGE);
  CHECK(ohio_collect(nullptr, "x", nullptr) == OHIO_ERR_USAGE);
  CHECK(ohio_env_reset(nullptr, 0, nullptr) == OHIO_ERR_USAGE);
  CHECK(ohio_policy_load(nullptr, nullptr) == OHIO_ERR_USAGE);
  ohio_config_free(nullptr);
  ohio_env_free(nullptr);
  ohio_policy_free(nullptr);
}

TEST_CASE("env handle: linear env steps deterministically") {
  Config cfg;
  ohio_env* env = nullptr;
  REQUIRE(ohio_env_new(cfg.p, &env) == OHIO_OK);
  REQUIRE(ohio_env_observation_dim(env) == 4);
  REQUIRE(ohio_env_action_dim(env) == 1);

  auto rollout = [&] {
    std::vector<double> obs(4), trace;
    REQUIRE(ohio_env_reset(env, 3, obs.data()) == OHIO_OK);
    const double a[1] = {0.5};
    int done = 0;
    double reward = 0;
    for (int t = 0; t < 5; ++t) {
      REQUIRE(ohio_env_step(env, a, 1, obs.data(), &reward, &done) == OHIO_OK);
      trace.insert(trace.end(), obs.begin(), obs.end());
      trace.push_back(reward);
    }
    return trace;
  };
  const auto first = rollout();
  CHECK(first == rollout());
  for (double v : first) CHECK(std::isfinite(v));

  const double wrong[3] = {0, 0, 0};
  std::vector<double> obs(4);
  double r;
  int d;
  CHECK(ohio_env_step(env, wrong, 3, obs.data(), &r, &d) == OHIO_ERR_DATA);
  ohio_env_free(env);
}

TEST_CASE("pipeline through the C API") {
  TempDir dir;
  Config cfg;
  for (auto [k, v] : {std::pair{"policy.episodes", "10"}, {"learn.epochs", "30"}, {"eval.episodes", "4"},
                      {"lowlevel.r_weight", "5"}})
    REQUIRE(ohio_config_set(cfg.p, k, v) == OHIO_OK);

  const std::string raw = (dir / "raw.jsonl").string(), rel = (dir / "rel.jsonl").string(),
                    model = (dir / "model.json").string(), table = (dir / "table.csv").string();
  size_t records = 0;
  REQUIRE(ohio_collect(cfg.p, raw.c_str(), &records) == OHIO_OK);
  CHECK(records == 400);

  ohio_relabel_summary rs{};
  REQUIRE(ohio_relabel(cfg.p, raw.c_str(), rel.c_str(), &rs) == OHIO_OK);
  CHECK(rs.windows == 80);
  CHECK(rs.retained == 80);
  CHECK(rs.max_inv_loss < 1e-10);

  double loss = -1;
  REQUIRE(ohio_train(cfg.p, rel.c_str(), model.c_str(), &loss) == OHIO_OK);
  CHECK(loss >= 0);

  ohio_eval_summary ref{}, learned{};
  REQUIRE(ohio_eval(cfg.p, nullptr, nullptr, table.c_str(), "expert", &ref) == OHIO_OK);
  CHECK(ref.normalized == doctest::Approx(100.0));
  CHECK(ref.episodes == 4);
  REQUIRE(ohio_eval(cfg.p, model.c_str(), nullptr, table.c_str(), "bc", &learned) == OHIO_OK);
  CHECK(learned.reference == ref.mean);
  CHECK(std::isfinite(learned.normalized));

  ohio_policy* pol = nullptr;
  REQUIRE(ohio_policy_load(model.c_str(), &pol) == OHIO_OK);
  CHECK(ohio_policy_input_dim(pol) == 4);
  CHECK(ohio_policy_output_dim(pol) == 2);
  const double obs[4] = {1, -1, 0, 0};
  double u[2] = {NAN, NAN};
  CHECK(ohio_policy_act(pol, obs, 4, u) == OHIO_OK);
  CHECK(std::isfinite(u[0]));
  CHECK(std::isfinite(u[1]));
  CHECK(ohio_policy_act(pol, obs, 3, u) == OHIO_ERR_DATA);
  ohio_policy_free(pol);

  CHECK(ohio_train(cfg.p, (dir / "none.jsonl").string().c_str(), model.c_str(), nullptr) == OHIO_ERR_DATA);
  CHECK(std::string(ohio_last_error_kind()) == "IoError");
}

TEST_CASE("check runs selected criteria and rejects unknown ids") {
  struct Seen {
    std::vector<int> ids;
    std::vector<std::string> lines;
  } seen;
  auto cb = [](int id, int passed, const char* line, void* user) {
    auto* s = static_cast<Seen*>(user);
    s->ids.push_back(id);
    s->lines.emplace_back(line);
    CHECK(passed == 1);
  };
  const int ids[] = {8};
  int failed = -1;
  REQUIRE(ohio_check(7, ids, 1, nullptr, cb, &seen, &failed) == OHIO_OK);
  CHECK(failed == 0);
  REQUIRE(seen.ids == std::vector<int>{8});
  CHECK(seen.lines[0].rfind("PASS 8", 0) == 0);

  const int bad[] = {10};
  CHECK(ohio_check(7, bad, 1, nullptr, nullptr, nullptr, &failed) == OHIO_ERR_USAGE);
}

TEST_CASE("version string is present") { CHECK(std::strlen(ohio_version()) > 0); }
