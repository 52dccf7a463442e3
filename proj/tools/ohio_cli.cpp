// ohio: collect | relabel | train | eval | check
//
// Any --section.key[=value] flag overrides the matching config entry and wins
// over the config file. Exit codes: 0 success, 1 usage, 2 data error,
// 3 numeric failure.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ohio/ohio.h"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

int report(ohio_status status) {
  if (status != OHIO_OK) std::fprintf(stderr, "ohio: %s\n", ohio_last_error());
  return static_cast<int>(status);
}

// Pulls --a.b=v and --a.b v out of argv, plus --seed; everything else goes to CLI11.
bool split_overrides(int argc, char** argv, std::vector<std::string>& rest, Overrides& overrides, std::string& error) {
  rest.emplace_back(argv[0]);
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const auto eq = arg.find('=');
    const std::string key = arg.substr(0, eq);
    if (arg.rfind("--", 0) != 0 || (key.find('.') == std::string::npos && key != "--seed")) {
      rest.push_back(arg);
      continue;
    }
    if (eq != std::string::npos) {
      overrides.emplace_back(key.substr(2), arg.substr(eq + 1));
    } else if (i + 1 < argc) {
      overrides.emplace_back(key.substr(2), argv[++i]);
    } else {
      error = "missing value for " + arg;
      return false;
    }
  }
  return true;
}

struct ConfigHandle {
  ohio_config* cfg = nullptr;
  ~ConfigHandle() { ohio_config_free(cfg); }
};

ohio_status load_config(const std::string& file, const Overrides& overrides, ConfigHandle& out) {
  if (ohio_status s = ohio_config_new(file.empty() ? nullptr : file.c_str(), 1, &out.cfg)) return s;
  for (const auto& [key, value] : overrides)
    if (ohio_status s = ohio_config_set(out.cfg, key.c_str(), value.c_str())) return s;
  return OHIO_OK;
}

std::string config_path(ohio_config* cfg, const char* key) {
  return nlohmann::json::parse(ohio_config_json(cfg))["paths"][key].get<std::string>();
}

void print_check_line(int, int, const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

void silent(const char*) {}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> rest;
  Overrides overrides;
  std::string error;
  if (!split_overrides(argc, argv, rest, overrides, error)) {
    std::fprintf(stderr, "ohio: %s\n", error.c_str());
    return 1;
  }

  CLI::App app{"Recover high-level actions from low-level logs, train and evaluate hierarchical policies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ohio_version()));
  std::string config_file;
  bool quiet = false;
  app.add_option("-c,--config", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string out, in, dataset, model, results, table, label, artifacts, criteria;
  bool reference = false;
  auto* collect = app.add_subcommand("collect", "Roll out a behavior policy and log raw transitions");
  collect->add_option("-o,--out", out, "Raw JSONL output (default: paths.raw)");
  auto* relabel = app.add_subcommand("relabel", "Invert the low-level policy to recover high-level actions");
  relabel->add_option("-i,--in", in, "Raw JSONL input (default: paths.raw)");
  relabel->add_option("-o,--out", out, "Relabeled JSONL output (default: paths.relabeled)");
  auto* train = app.add_subcommand("train", "Fit a high-level policy with BC or AWR");
  train->add_option("-d,--dataset", dataset, "Relabeled JSONL input (default: paths.relabeled)");
  train->add_option("-m,--model", model, "Checkpoint output (default: paths.model)");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against the reference policy");
  eval->add_option("-m,--model", model, "Checkpoint (default: paths.model)");
  eval->add_flag("--reference", reference, "Evaluate the reference policy instead of a checkpoint");
  eval->add_option("-r,--results", results, "Results JSON (default: paths.results)");
  eval->add_option("-t,--table", table, "Append a row to this CSV score table (default: paths.table)");
  eval->add_option("-l,--label", label, "Row label for the score table");
  auto* check = app.add_subcommand("check", "Run the acceptance suite");
  check->add_option("--criteria", criteria, "Comma-separated subset, e.g. 1,3,9");
  check->add_option("-o,--out", artifacts, "Keep the determinism artifacts in this directory");

  std::vector<const char*> cargv;
  for (const auto& s : rest) cargv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (quiet) ohio_set_warning_callback(&silent);

  ConfigHandle cfg;
  if (ohio_status s = load_config(config_file, overrides, cfg)) return report(s);

  if (collect->parsed()) {
    if (out.empty()) out = config_path(cfg.cfg, "raw");
    size_t records = 0;
    if (ohio_status s = ohio_collect(cfg.cfg, out.c_str(), &records)) return report(s);
    std::printf("collected %zu transitions -> %s (config %s)\n", records, out.c_str(), ohio_config_hash(cfg.cfg));
  } else if (relabel->parsed()) {
    if (in.empty()) in = config_path(cfg.cfg, "raw");
    if (out.empty()) out = config_path(cfg.cfg, "relabeled");
    ohio_relabel_summary sum{};
    if (ohio_status s = ohio_relabel(cfg.cfg, in.c_str(), out.c_str(), &sum)) return report(s);
    std::printf("relabeled %zu of %zu windows -> %s (mean inv_loss %.3g, max %.3g)\n", sum.retained, sum.windows,
                out.c_str(), sum.mean_inv_loss, sum.max_inv_loss);
  } else if (train->parsed()) {
    if (dataset.empty()) dataset = config_path(cfg.cfg, "relabeled");
    if (model.empty()) model = config_path(cfg.cfg, "model");
    double loss = 0.0;
    if (ohio_status s = ohio_train(cfg.cfg, dataset.c_str(), model.c_str(), &loss)) return report(s);
    std::printf("trained -> %s (final loss %.6g)\n", model.c_str(), loss);
  } else if (eval->parsed()) {
    if (reference) model.clear();
    else if (model.empty()) model = config_path(cfg.cfg, "model");
    if (results.empty()) results = config_path(cfg.cfg, "results");
    if (table.empty()) table = config_path(cfg.cfg, "table");
    ohio_eval_summary sum{};
    if (ohio_status s = ohio_eval(cfg.cfg, model.c_str(), results.c_str(), table.c_str(), label.c_str(), &sum))
      return report(s);
    std::printf("mean %.6g  std %.6g  normalized %.2f  (reference %.6g, %d episodes) -> %s\n", sum.mean, sum.stddev,
                sum.normalized, sum.reference, sum.episodes, results.c_str());
  } else if (check->parsed()) {
    uint64_t seed = 7;
    bool seed_given = std::getenv("OHIO_SEED") != nullptr;
    for (const auto& kv : overrides) seed_given |= kv.first == "seed";
    if (seed_given) {
      if (ohio_status s = ohio_config_seed(cfg.cfg, &seed)) return report(s);
    }
    std::vector<int> ids;
    for (const auto& tok : CLI::detail::split(criteria, ',')) {
      if (tok.empty()) continue;
      try {
        ids.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        std::fprintf(stderr, "ohio: bad criterion \"%s\"\n", tok.c_str());
        return 1;
      }
    }
    int failed = 0;
    if (ohio_status s = ohio_check(seed, ids.data(), ids.size(), artifacts.empty() ? nullptr : artifacts.c_str(),
                                   &print_check_line, nullptr, &failed))
      return report(s);
    std::printf("%d failed\n", failed);
    return failed ? 3 : 0;
  }
  return 0;
}
