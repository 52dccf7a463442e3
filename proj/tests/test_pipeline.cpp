#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "ohio/dataset_io.hpp"
#include "ohio/pipeline.hpp"
#include "tempdir.hpp"

using namespace ohio;
using nlohmann::json;

namespace {

RunConfig linear_config(std::vector<std::pair<std::string, std::string>> extra = {}) {
  extra.insert(extra.begin(), {"lowlevel.r_weight", "5"});
  return RunConfig::load(std::nullopt, extra, false);
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ohio::Error");
  return ErrorCode::Usage;
}

}  // namespace

TEST_CASE("collect: 250 expert episodes give 10,000 records and a matching manifest") {
  TempDir dir;
  const RunConfig cfg = linear_config();
  const CollectSummary s = cmd_collect(cfg, dir / "raw.jsonl");
  CHECK(s.records == 10000);
  CHECK(read_raw_jsonl(dir / "raw.jsonl").size() == 10000);
  const json m = json::parse(read_text_file(dir / "raw.manifest.json"));
  CHECK(m["records"] == 10000);
  CHECK(m["episodes"] == 250);
  CHECK(m["seed"] == 0);
  CHECK(m["config_hash"] == cfg.hash());
}

TEST_CASE("collect: state-only mode nulls every action; equal seeds give equal bytes") {
  TempDir dir;
  const RunConfig cfg = linear_config({{"policy.episodes", "5"}, {"policy.state_only", "true"}});
  cmd_collect(cfg, dir / "a.jsonl");
  for (const auto& tr : read_raw_jsonl(dir / "a.jsonl")) CHECK_FALSE(tr.a.has_value());
  cmd_collect(cfg, dir / "b.jsonl");
  CHECK(read_text_file(dir / "a.jsonl") == read_text_file(dir / "b.jsonl"));
  CHECK(read_text_file(dir / "a.manifest.json") == read_text_file(dir / "b.manifest.json"));
  const RunConfig other = linear_config({{"policy.episodes", "5"}, {"policy.state_only", "true"}, {"seed", "1"}});
  cmd_collect(other, dir / "c.jsonl");
  CHECK(read_text_file(dir / "a.jsonl") != read_text_file(dir / "c.jsonl"));
}

TEST_CASE("relabel: analytic inverse on expert data is exact; report is written") {
  TempDir dir;
  const RunConfig cfg = linear_config({{"policy.episodes", "10"}});
  cmd_collect(cfg, dir / "raw.jsonl");
  const RelabelOutput out = cmd_relabel(cfg, dir / "raw.jsonl", dir / "rel.jsonl");
  CHECK(out.samples.size() == 80);
  const json rep = json::parse(read_text_file(dir / "rel.report.json"));
  CHECK(rep["retention"].get<double>() == 1.0);
  CHECK(rep["mean_inv_loss"].get<double>() < 1e-10);
  CHECK(rep["method"] == "analytic_horizon");
  CHECK(rep.contains("seconds"));
  CHECK(read_relabeled_jsonl(dir / "rel.jsonl").size() == 80);
}

TEST_CASE("relabel: observed-state baseline labels equal the raw future states") {
  TempDir dir;
  const RunConfig cfg = linear_config({{"policy.episodes", "3"}, {"relabel.baseline", "observed_state"}});
  cmd_collect(cfg, dir / "raw.jsonl");
  cmd_relabel(cfg, dir / "raw.jsonl", dir / "rel.jsonl");
  const auto raw = read_raw_jsonl(dir / "raw.jsonl");
  const auto rel = read_relabeled_jsonl(dir / "rel.jsonl");
  REQUIRE(rel.size() == 24);
  for (const auto& smp : rel) {
    const std::size_t i = static_cast<std::size_t>(smp.episode * 40 + smp.t + 4);  // s_{t+5} is s_next of step t+4
    CHECK(smp.u.values() == raw[i].s_next.head(2));
  }
}

TEST_CASE("relabel: corrupt input names the line; mismatched env is a data error") {
  TempDir dir;
  const RunConfig cfg = linear_config({{"policy.episodes", "1"}});
  cmd_collect(cfg, dir / "raw.jsonl");
  auto ls = lines(read_text_file(dir / "raw.jsonl"));
  ls[6] = ls[6].substr(0, ls[6].size() / 2);
  std::string text;
  for (const auto& l : ls) text += l + "\n";
  write_text_file(dir / "bad.jsonl", text);
  try {
    cmd_relabel(cfg, dir / "bad.jsonl", dir / "rel.jsonl");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
  const RunConfig chain = RunConfig::load(std::nullopt, {{"env.kind", "supply_chain"}}, false);
  CHECK(code_of([&] { cmd_relabel(chain, dir / "raw.jsonl", dir / "rel.jsonl"); }) == ErrorCode::DimMismatch);
}

TEST_CASE("train: BC on a realizable dataset drives the CSV loss below 1e-3") {
  TempDir dir;
  SeededRng rng(5);
  std::vector<RelabeledSample> data;
  for (int i = 0; i < 2000; ++i) {
    Vec s(4);
    for (int k = 0; k < 4; ++k) s(k) = rng.uniform(-1, 1);
    data.push_back({i, 0, s, HighAction::goal(2.0 * s.head(2)), 0.0, s, 0.0});
  }
  write_relabeled_jsonl(dir / "rel.jsonl", data);
  cmd_train(linear_config(), dir / "rel.jsonl", dir / "model.json");
  const auto csv = lines(read_text_file(dir / "model.curve.csv"));
  CHECK(csv.front() == "epoch,loss");
  CHECK(csv.size() == 201);
  CHECK(std::stod(csv.back().substr(csv.back().find(',') + 1)) < 1e-3);
}

TEST_CASE("train: empty dataset fails; AWR curve has the weight column") {
  TempDir dir;
  write_text_file(dir / "empty.jsonl", "");
  CHECK(code_of([&] { cmd_train(linear_config(), dir / "empty.jsonl", dir / "m.json"); }) == ErrorCode::EmptyDataset);

  const RunConfig cfg = linear_config({{"policy.episodes", "4"}, {"learn.algorithm", "awr"}, {"learn.epochs", "3"},
                                       {"learn.value_sweeps", "2"}});
  cmd_collect(cfg, dir / "raw.jsonl");
  cmd_relabel(cfg, dir / "raw.jsonl", dir / "rel.jsonl");
  cmd_train(cfg, dir / "rel.jsonl", dir / "m.json");
  const auto csv = lines(read_text_file(dir / "m.curve.csv"));
  CHECK(csv.front() == "epoch,loss,mean_weight");
  CHECK(csv.size() == 4);
}

TEST_CASE("eval: reloaded checkpoint matches the in-memory model; reference scores 100") {
  TempDir dir;
  const RunConfig cfg = linear_config({{"policy.episodes", "20"}, {"learn.epochs", "20"}, {"eval.episodes", "8"}});
  cmd_collect(cfg, dir / "raw.jsonl");
  cmd_relabel(cfg, dir / "raw.jsonl", dir / "rel.jsonl");
  const TrainResult tr = cmd_train(cfg, dir / "rel.jsonl", dir / "model.json");

  auto env = cfg.make_env();
  const EvalResult mem = evaluate_policy(tr.policy.as_policy(), *env, cfg.low_level(), 8, 100000);
  const EvalResult disk = cmd_eval(cfg, {dir / "model.json", dir / "res.json", {}, ""});
  CHECK(disk.returns == mem.returns);

  const json res = json::parse(read_text_file(dir / "res.json"));
  for (const char* key : {"mean", "std", "normalized", "seeds", "config_hash"}) CHECK(res.contains(key));
  CHECK(res["seeds"].size() == 8);
  CHECK(res["seeds"][0] == 100000);

  const EvalResult self = cmd_eval(cfg, {{}, dir / "ref.json", {}, ""});
  CHECK(self.normalized == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("eval: missing or incompatible models are clean errors") {
  TempDir dir;
  const RunConfig cfg = linear_config({{"policy.episodes", "2"}, {"learn.epochs", "1"}, {"eval.episodes", "2"}});
  CHECK(code_of([&] { cmd_eval(cfg, {dir / "none.json", {}, {}, ""}); }) == ErrorCode::IoError);
  cmd_collect(cfg, dir / "raw.jsonl");
  cmd_relabel(cfg, dir / "raw.jsonl", dir / "rel.jsonl");
  cmd_train(cfg, dir / "rel.jsonl", dir / "model.json");
  const RunConfig pm = RunConfig::load(std::nullopt, {{"env.kind", "point_mass"}, {"eval.episodes", "2"}}, false);
  CHECK(code_of([&] { cmd_eval(pm, {dir / "model.json", {}, {}, ""}); }) == ErrorCode::IncompatibleModel);
}

TEST_CASE("eval: OHIO-BC beats ObservedState-BC on the same expert dataset") {
  TempDir dir;
  const RunConfig base = linear_config({{"policy.episodes", "60"}, {"learn.epochs", "100"}, {"eval.episodes", "20"}});
  cmd_collect(base, dir / "raw.jsonl");
  for (const char* baseline : {"ohio", "observed_state"}) {
    RunConfig cfg = base;
    cfg.set("relabel.baseline", baseline);
    cmd_relabel(cfg, dir / "raw.jsonl", dir / (std::string(baseline) + ".jsonl"));
    cmd_train(cfg, dir / (std::string(baseline) + ".jsonl"), dir / (std::string(baseline) + ".model.json"));
    cmd_eval(cfg, {dir / (std::string(baseline) + ".model.json"), {}, dir / "table.csv", baseline});
  }
  const auto rows = lines(read_text_file(dir / "table.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "label,mean,std,normalized,episodes");
  auto normalized = [](const std::string& row) {
    std::vector<std::string> cols;
    std::istringstream in(row);
    for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
    return std::stod(cols[3]);
  };
  MESSAGE("OHIO " << normalized(rows[1]) << ", ObservedState " << normalized(rows[2]));
  CHECK(rows[1].rfind("ohio,", 0) == 0);
  CHECK(normalized(rows[1]) > normalized(rows[2]));
}

TEST_CASE("network pipeline: supply chain end to end") {
  TempDir dir;
  const RunConfig cfg = RunConfig::load(
      std::nullopt, {{"env.kind", "supply_chain"}, {"policy.kind", "order_up_to"}, {"policy.episodes", "3"},
                     {"learn.epochs", "2"}, {"eval.episodes", "2"}, {"relabel.network_method", "duality"}},
      false);
  CHECK(cmd_collect(cfg, dir / "raw.jsonl").records == 90);
  const RelabelOutput rel = cmd_relabel(cfg, dir / "raw.jsonl", dir / "rel.jsonl");
  CHECK(rel.samples.size() == 90);
  for (const auto& smp : read_relabeled_jsonl(dir / "rel.jsonl"))
    CHECK(smp.u.kind() == HighActionKind::MixedProductionDistribution);
  cmd_train(cfg, dir / "rel.jsonl", dir / "m.json");
  CHECK(std::isfinite(cmd_eval(cfg, {dir / "m.json", {}, {}, ""}).normalized));
}
