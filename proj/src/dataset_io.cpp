#include "ohio/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ohio {

using nlohmann::json;

namespace {

void append_vec(std::string& out, const Vec& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v(i));
  }
  out += ']';
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + what);
}

Vec vec_field(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) parse_fail(line_no, std::string("field \"") + key + "\" must be an array");
  Vec v(static_cast<Eigen::Index>(it->size()));
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_number()) parse_fail(line_no, std::string("field \"") + key + "\" has a non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = (*it)[i].get<double>();
  }
  return v;
}

std::int64_t int_field(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) parse_fail(line_no, std::string("field \"") + key + "\" must be an integer");
  return it->get<std::int64_t>();
}

double num_field(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) parse_fail(line_no, std::string("field \"") + key + "\" must be a number");
  return it->get<double>();
}

json parse_object(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    parse_fail(line_no, std::string("malformed JSON (") + e.what() + ")");
  }
  if (!j.is_object()) parse_fail(line_no, "record is not a JSON object");
  return j;
}

template <class Parse>
auto read_jsonl(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<decltype(parse(std::string(), std::size_t{}))> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse(line, line_no));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) throw Error(e.code(), path.string() + " " + e.message());
      throw Error(e.code(), path.string() + " line " + std::to_string(line_no) + ": " + e.message());
    }
  }
  return out;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

}  // namespace

std::string format_double(double x) {
  if (!std::isfinite(x)) fail(ErrorCode::NonFiniteValue, "cannot serialize a non-finite number");
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string raw_record_line(const Transition& tr) {
  std::string out = "{\"ep\":" + std::to_string(tr.episode) + ",\"t\":" + std::to_string(tr.t) + ",\"s\":";
  append_vec(out, tr.s);
  out += ",\"a\":";
  if (tr.a) append_vec(out, *tr.a); else out += "null";
  out += ",\"r\":";
  out += tr.r ? format_double(*tr.r) : "null";
  out += ",\"s_next\":";
  append_vec(out, tr.s_next);
  out += '}';
  return out;
}

Transition parse_raw_record(const std::string& line, std::size_t line_no) {
  const json j = parse_object(line, line_no);
  Transition tr;
  tr.episode = int_field(j, "ep", line_no);
  tr.t = int_field(j, "t", line_no);
  tr.s = vec_field(j, "s", line_no);
  tr.s_next = vec_field(j, "s_next", line_no);
  if (auto it = j.find("a"); it != j.end() && !it->is_null()) tr.a = vec_field(j, "a", line_no);
  if (auto it = j.find("r"); it != j.end() && !it->is_null()) tr.r = num_field(j, "r", line_no);
  return tr;
}

void write_raw_jsonl(const std::filesystem::path& path, std::span<const Transition> data) {
  std::string out;
  for (const auto& tr : data) out += raw_record_line(tr) + '\n';
  write_text_file(path, out);
}

std::vector<Transition> read_raw_jsonl(const std::filesystem::path& path) {
  return read_jsonl(path, parse_raw_record);
}

std::string relabeled_record_line(const RelabeledSample& smp) {
  std::string out = "{\"ep\":" + std::to_string(smp.episode) + ",\"t\":" + std::to_string(smp.t) + ",\"s\":";
  append_vec(out, smp.s);
  out += ",\"u\":";
  append_vec(out, smp.u.values());
  out += ",\"u_kind\":\"" + std::string(to_string(smp.u.kind())) + "\"";
  if (smp.u.kind() == HighActionKind::MixedProductionDistribution)
    out += ",\"production_dim\":" + std::to_string(smp.u.production_dim());
  out += ",\"r\":" + format_double(smp.r) + ",\"s_next\":";
  append_vec(out, smp.s_next);
  out += ",\"inv_loss\":" + format_double(smp.inv_loss) + '}';
  return out;
}

RelabeledSample parse_relabeled_record(const std::string& line, std::size_t line_no) {
  const json j = parse_object(line, line_no);
  RelabeledSample smp;
  smp.episode = j.contains("ep") ? int_field(j, "ep", line_no) : 0;
  smp.t = j.contains("t") ? int_field(j, "t", line_no) : 0;
  smp.s = vec_field(j, "s", line_no);
  smp.s_next = vec_field(j, "s_next", line_no);
  auto kind_it = j.find("u_kind");
  if (kind_it == j.end() || !kind_it->is_string()) parse_fail(line_no, "field \"u_kind\" must be a string");
  HighActionKind kind;
  try {
    kind = high_action_kind_from_string(kind_it->get<std::string>());
  } catch (const Error& e) {
    parse_fail(line_no, e.message());
  }
  const int production_dim = j.contains("production_dim") ? static_cast<int>(int_field(j, "production_dim", line_no)) : 0;
  try {
    smp.u = HighAction::from_flat(kind, vec_field(j, "u", line_no), production_dim);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    parse_fail(line_no, e.message());
  }
  smp.r = num_field(j, "r", line_no);
  smp.inv_loss = num_field(j, "inv_loss", line_no);
  if (smp.inv_loss < 0) parse_fail(line_no, "inv_loss is negative");
  return smp;
}

void write_relabeled_jsonl(const std::filesystem::path& path, std::span<const RelabeledSample> data) {
  std::string out;
  for (const auto& smp : data) out += relabeled_record_line(smp) + '\n';
  write_text_file(path, out);
}

std::vector<RelabeledSample> read_relabeled_jsonl(const std::filesystem::path& path) {
  return read_jsonl(path, parse_relabeled_record);
}

void save_checkpoint(const std::filesystem::path& path, const TrainedPolicy& policy, const CheckpointMeta& meta) {
  json j;
  j["format"] = "ohio-checkpoint";
  j["version"] = 1;
  j["env_kind"] = meta.env_kind;
  j["observation_dim"] = meta.observation_dim;
  j["algorithm"] = meta.algorithm;
  j["seed"] = meta.seed;
  j["config_hash"] = meta.config_hash;
  j["u_kind"] = to_string(policy.kind);
  j["production_dim"] = policy.production_dim;
  j["sizes"] = policy.net.sizes();
  j["head"] = to_string(policy.net.head());
  j["linear_dims"] = policy.net.linear_dims();
  j["in_mean"] = vec_json(policy.in_mean);
  j["in_scale"] = vec_json(policy.in_scale);
  j["out_mean"] = vec_json(policy.out_mean);
  j["out_scale"] = vec_json(policy.out_scale);
  j["params"] = vec_json(policy.net.flat_params());
  write_text_file(path, j.dump(1) + '\n');
}

TrainedPolicy load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  const std::string text = read_text_file(path);
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "ohio-checkpoint") fail(ErrorCode::ParseError, path.string() + " is not a checkpoint");
    TrainedPolicy p;
    p.kind = high_action_kind_from_string(j.at("u_kind").get<std::string>());
    p.production_dim = j.at("production_dim").get<int>();
    SeededRng unused(0);
    p.net = Mlp(j.at("sizes").get<std::vector<int>>(), head_from_string(j.at("head").get<std::string>()), unused,
                j.at("linear_dims").get<int>());
    const Vec params = json_vec(j.at("params"));
    if (static_cast<std::size_t>(params.size()) != p.net.num_params())
      fail(ErrorCode::ParseError, path.string() + ": parameter count does not match layer sizes");
    p.net.set_flat_params(params);
    p.in_mean = json_vec(j.at("in_mean"));
    p.in_scale = json_vec(j.at("in_scale"));
    p.out_mean = json_vec(j.at("out_mean"));
    p.out_scale = json_vec(j.at("out_scale"));
    if (p.in_mean.size() != p.net.input_dim() || p.in_scale.size() != p.net.input_dim())
      fail(ErrorCode::ParseError, path.string() + ": standardization does not match input size");
    if (meta) {
      meta->env_kind = j.at("env_kind").get<std::string>();
      meta->observation_dim = j.at("observation_dim").get<int>();
      meta->algorithm = j.at("algorithm").get<std::string>();
      meta->seed = j.at("seed").get<std::uint64_t>();
      meta->config_hash = j.at("config_hash").get<std::string>();
    }
    return p;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
    if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace ohio
