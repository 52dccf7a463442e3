#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ohio/learn.hpp"
#include "ohio/relabel.hpp"

namespace ohio {

// printf("%.17g") equivalent; throws NonFiniteValue for inf/nan.
std::string format_double(double x);

/// Raw records: {"ep","t","s","a","r","s_next"} with "a" and "r" null when
/// absent. Parse errors name the 1-based line number.
std::string raw_record_line(const Transition& tr);
Transition parse_raw_record(const std::string& line, std::size_t line_no);
void write_raw_jsonl(const std::filesystem::path& path, std::span<const Transition> data);
std::vector<Transition> read_raw_jsonl(const std::filesystem::path& path);

/// Relabeled records: {"ep","t","s","u","u_kind","r","s_next","inv_loss"},
/// plus "production_dim" for mixed actions.
std::string relabeled_record_line(const RelabeledSample& smp);
RelabeledSample parse_relabeled_record(const std::string& line, std::size_t line_no);
void write_relabeled_jsonl(const std::filesystem::path& path, std::span<const RelabeledSample> data);
std::vector<RelabeledSample> read_relabeled_jsonl(const std::filesystem::path& path);

struct CheckpointMeta {
  std::string env_kind;
  int observation_dim = 0;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string config_hash;
};

void save_checkpoint(const std::filesystem::path& path, const TrainedPolicy& policy, const CheckpointMeta& meta);
TrainedPolicy load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so readers never see a partial file.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ohio
