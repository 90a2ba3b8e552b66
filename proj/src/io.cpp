#include "rodd/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace rodd {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::string_view where,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

const json& require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  return j;
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(std::string(key) + " must be a boolean");
      out = it->template get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_unsigned()) throw ConfigError(std::string(key) + " must be non-negative");
      }
      out = it->template get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(std::string(key) + " must be a number");
      out = it->template get<T>();
    } else {
      if (!it->is_string()) throw ConfigError(std::string(key) + " must be a string");
      out = it->template get<T>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  require_object(root, "scenario");
  reject_unknown(root, "scenario",
                 {"network", "bits", "frame_length", "duty_cycle", "bp_iterations",
                  "stage_one_iterations", "total_iterations", "snr_db", "noise_mode",
                  "heard_threshold", "run_seed", "codebook_salt", "acquired_gains",
                  "update_with_fewer_than_three", "threads", "out_dir", "repetitions"});
  Scenario s;
  SimConfig& c = s.sim;
  if (const auto it = root.find("network"); it != root.end()) {
    const json& net = require_object(*it, "network");
    reject_unknown(net, "network",
                   {"area_side", "node_count", "anchors", "path_loss_exponent",
                    "neighbor_threshold", "geometry_seed"});
    read(net, "area_side", c.network.area_side);
    read(net, "node_count", c.network.node_count);
    read(net, "path_loss_exponent", c.network.path_loss_exponent);
    read(net, "neighbor_threshold", c.network.neighbor_threshold);
    read(net, "geometry_seed", c.network.geometry_seed);
    if (const auto a = net.find("anchors"); a != net.end()) {
      const json& anchors = require_object(*a, "anchors");
      std::string layout = "lattice";
      read(anchors, "layout", layout);
      if (layout == "lattice") {
        reject_unknown(anchors, "anchors", {"layout", "rows", "cols"});
        LatticeAnchors l;
        read(anchors, "rows", l.rows);
        read(anchors, "cols", l.cols);
        c.network.anchors = l;
      } else if (layout == "random") {
        reject_unknown(anchors, "anchors", {"layout", "count"});
        RandomAnchors r;
        read(anchors, "count", r.count);
        c.network.anchors = r;
      } else {
        throw ConfigError("anchors.layout must be 'lattice' or 'random'");
      }
    }
  }
  read(root, "bits", c.bits);
  read(root, "frame_length", c.frame_length);
  read(root, "duty_cycle", c.duty_cycle);
  read(root, "bp_iterations", c.bp_iterations);
  read(root, "stage_one_iterations", c.stage_one_iterations);
  read(root, "total_iterations", c.total_iterations);
  read(root, "snr_db", c.snr_db);
  std::string mode = "analytic";
  read(root, "noise_mode", mode);
  if (mode == "analytic") {
    c.noise_mode = NoiseMode::analytic;
  } else if (mode == "empirical") {
    c.noise_mode = NoiseMode::empirical;
  } else {
    throw ConfigError("noise_mode must be 'analytic' or 'empirical'");
  }
  read(root, "heard_threshold", c.heard_threshold);
  read(root, "run_seed", c.run_seed);
  read(root, "codebook_salt", c.codebook_salt);
  read(root, "acquired_gains", c.acquired_gains);
  read(root, "update_with_fewer_than_three", c.update_with_fewer_than_three);
  read(root, "threads", c.threads);
  read(root, "out_dir", s.out_dir);
  read(root, "repetitions", s.repetitions);
  if (s.repetitions < 1) throw ConfigError("repetitions must be positive");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  const SimConfig& c = s.sim;
  json anchors;
  if (const auto* l = std::get_if<LatticeAnchors>(&c.network.anchors)) {
    anchors = {{"layout", "lattice"}, {"rows", l->rows}, {"cols", l->cols}};
  } else {
    anchors = {{"layout", "random"}, {"count", std::get<RandomAnchors>(c.network.anchors).count}};
  }
  const json j = {
      {"network",
       {{"area_side", c.network.area_side},
        {"node_count", c.network.node_count},
        {"anchors", anchors},
        {"path_loss_exponent", c.network.path_loss_exponent},
        {"neighbor_threshold", c.network.neighbor_threshold},
        {"geometry_seed", c.network.geometry_seed}}},
      {"bits", c.bits},
      {"frame_length", c.frame_length},
      {"duty_cycle", c.duty_cycle},
      {"bp_iterations", c.bp_iterations},
      {"stage_one_iterations", c.stage_one_iterations},
      {"total_iterations", c.total_iterations},
      {"snr_db", c.snr_db},
      {"noise_mode", c.noise_mode == NoiseMode::analytic ? "analytic" : "empirical"},
      {"heard_threshold", c.heard_threshold},
      {"run_seed", c.run_seed},
      {"codebook_salt", c.codebook_salt},
      {"acquired_gains", c.acquired_gains},
      {"update_with_fewer_than_three", c.update_with_fewer_than_three},
      {"threads", c.threads},
      {"out_dir", s.out_dir},
      {"repetitions", s.repetitions}};
  return j.dump(2) + "\n";
}

std::vector<double> parse_sweep_range(std::string_view spec) {
  double v[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? spec.find(':', pos) : spec.size();
    if (end == std::string_view::npos) throw ConfigError("range must be START:STOP:STEP");
    const std::string part(spec.substr(pos, end - pos));
    std::size_t used = 0;
    try {
      v[i] = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (part.empty() || used != part.size() || !std::isfinite(v[i])) {
      throw ConfigError("bad number '" + part + "' in range");
    }
    pos = end + 1;
  }
  if (!(v[2] > 0.0)) throw ConfigError("range step must be positive");
  if (v[0] > v[1]) throw ConfigError("range start must not exceed stop");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((v[1] - v[0]) / v[2] + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(v[0] + static_cast<double>(i) * v[2]);
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string iterations_csv(const std::vector<IterationRecord>& records) {
  std::string s = "iteration,transmitters,avg_error_m,count_within_1m\n";
  for (const auto& r : records) {
    s += std::to_string(r.iteration) + ',' + std::to_string(r.transmitter_count) + ',' +
         format_number(r.average_error) + ',' + std::to_string(r.count_within_1m) + '\n';
  }
  return s;
}

std::string nodes_csv(const Network& net, const std::vector<NodeState>& state) {
  std::string s = "id,role,true_x,true_y,est_x,est_y,error_m\n";
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Node& node = net.nodes().at(i);
    const Vec2 e = state[i].estimate;
    s += std::to_string(node.id) + ',' + (node.role == Role::anchor ? "anchor" : "client") + ',' +
         format_number(node.position.x) + ',' + format_number(node.position.y) + ',' +
         format_number(e.x) + ',' + format_number(e.y) + ',' +
         format_number(distance(e, node.position)) + '\n';
  }
  return s;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "snr_db,seed,final_avg_error_m\n";
  for (const auto& r : rows) {
    s += format_number(r.snr_db) + ',' + std::to_string(r.seed) + ',' +
         format_number(r.final_avg_error) + '\n';
  }
  return s;
}

std::string network_to_json(const Network& net) {
  json nodes = json::array();
  for (const auto& n : net.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"x", n.position.x},
                     {"y", n.position.y},
                     {"role", n.role == Role::anchor ? "anchor" : "client"}});
  }
  json fading = json::array();
  for (const auto& h : net.fading_table()) fading.push_back({h.real(), h.imag()});
  const json j = {{"area_side", net.area_side()},
                  {"path_loss_exponent", net.path_loss_exponent()},
                  {"neighbor_threshold", net.neighbor_threshold()},
                  {"nodes", nodes},
                  {"fading", fading}};
  return j.dump() + "\n";
}

Network network_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    require_object(j, "network");
    reject_unknown(j, "network", {"area_side", "path_loss_exponent", "neighbor_threshold", "nodes", "fading"});
    std::vector<Node> nodes;
    for (const auto& n : j.at("nodes")) {
      require_object(n, "node");
      reject_unknown(n, "node", {"id", "x", "y", "role"});
      const std::string role = n.at("role").get<std::string>();
      if (role != "anchor" && role != "client") throw ConfigError("role must be anchor or client");
      nodes.push_back({n.at("id").get<int>(),
                       {n.at("x").get<double>(), n.at("y").get<double>()},
                       role == "anchor" ? Role::anchor : Role::client});
    }
    std::vector<std::complex<double>> fading;
    for (const auto& h : j.at("fading")) {
      if (!h.is_array() || h.size() != 2) throw ConfigError("fading entries are [re, im] pairs");
      fading.emplace_back(h[0].get<double>(), h[1].get<double>());
    }
    return Network(j.at("area_side").get<double>(), j.at("path_loss_exponent").get<double>(),
                   j.at("neighbor_threshold").get<double>(), std::move(nodes), std::move(fading));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("network document: ") + e.what());
  }
}

namespace {

char ternary_char(std::int8_t v) { return v > 0 ? '+' : (v < 0 ? '-' : '0'); }

std::int8_t ternary_value(char c) {
  switch (c) {
    case '+': return 1;
    case '-': return -1;
    case '0': return 0;
    default: throw ConfigError(std::string("bad ternary symbol '") + c + "'");
  }
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    if (end > pos) lines.emplace_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

}  // namespace

std::string codebook_to_text(const Codebook& book) {
  std::string s = "codebook " + std::to_string(book.owner_nia()) + ' ' + std::to_string(book.bits()) +
                  ' ' + std::to_string(book.frame_length()) + ' ' + exact(book.duty_cycle()) + ' ' +
                  std::to_string(book.salt()) + '\n';
  for (int w = 0; w < book.word_count(); ++w) {
    for (std::int8_t v : book.word(w)) s += ternary_char(v);
    s += '\n';
  }
  return s;
}

Codebook codebook_from_text(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ConfigError("empty codebook text");
  std::istringstream head(lines[0]);
  std::string tag;
  int nia = 0, bits = 0, length = 0;
  double q = 0.0;
  std::uint64_t salt = 0;
  if (!(head >> tag >> nia >> bits >> length >> q >> salt) || tag != "codebook") {
    throw ConfigError("bad codebook header");
  }
  if (bits < 1 || bits > 16 || length < 1) throw ConfigError("bad codebook dimensions");
  if (lines.size() != static_cast<std::size_t>(1 << bits) + 1) throw ConfigError("wrong word count");
  std::vector<std::int8_t> entries;
  entries.reserve(static_cast<std::size_t>(length) << bits);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != static_cast<std::size_t>(length)) throw ConfigError("wrong word length");
    for (char c : lines[i]) entries.push_back(ternary_value(c));
  }
  try {
    return Codebook(nia, bits, length, q, salt, std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string observation_to_text(const Observation& obs) {
  std::string s = "observation " + std::to_string(obs.receiver_id) + ' ' + std::to_string(obs.bits) +
                  ' ' + std::to_string(obs.frame_length) + ' ' + exact(obs.duty_cycle) + ' ' +
                  exact(obs.gamma_s) + '\n';
  s += "rows " + std::to_string(obs.rows());
  for (int r : obs.visible_rows) s += ' ' + std::to_string(r);
  s += "\nblocks " + std::to_string(obs.blocks());
  for (int b : obs.block_map) s += ' ' + std::to_string(b);
  s += '\n';
  for (int k = 0; k < obs.columns(); ++k) {
    s += "column " + std::to_string(k) + ' ';
    for (std::int8_t v : obs.column(k)) s += ternary_char(v);
    s += '\n';
  }
  for (const auto& y : obs.received) s += "sample " + exact(y.real()) + ' ' + exact(y.imag()) + '\n';
  return s;
}

Observation observation_from_text(std::string_view text) {
  const auto lines = split_lines(text);
  Observation obs;
  std::size_t i = 0;
  auto next = [&](const char* tag) {
    if (i >= lines.size()) throw ConfigError(std::string("missing '") + tag + "' line");
    std::istringstream in(lines[i++]);
    std::string t;
    in >> t;
    if (t != tag) throw ConfigError(std::string("expected '") + tag + "', got '" + t + "'");
    return in;
  };
  {
    auto in = next("observation");
    if (!(in >> obs.receiver_id >> obs.bits >> obs.frame_length >> obs.duty_cycle >> obs.gamma_s)) {
      throw ConfigError("bad observation header");
    }
    if (obs.bits < 1 || obs.bits > 16) throw ConfigError("bad bits");
  }
  {
    auto in = next("rows");
    int m = 0;
    if (!(in >> m) || m < 0) throw ConfigError("bad row count");
    obs.visible_rows.resize(static_cast<std::size_t>(m));
    for (auto& r : obs.visible_rows) {
      if (!(in >> r)) throw ConfigError("bad row index");
    }
  }
  {
    auto in = next("blocks");
    int k = 0;
    if (!(in >> k) || k < 0) throw ConfigError("bad block count");
    obs.block_map.resize(static_cast<std::size_t>(k));
    for (auto& b : obs.block_map) {
      if (!(in >> b)) throw ConfigError("bad block id");
    }
  }
  const std::size_t rows = obs.visible_rows.size();
  obs.signature.reserve(rows * static_cast<std::size_t>(obs.columns()));
  for (int k = 0; k < obs.columns(); ++k) {
    auto in = next("column");
    int idx = -1;
    std::string pattern;
    in >> idx >> pattern;
    if (idx != k || pattern.size() != rows) throw ConfigError("bad column " + std::to_string(k));
    for (char c : pattern) obs.signature.push_back(ternary_value(c));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = next("sample");
    double re = 0.0, im = 0.0;
    if (!(in >> re >> im)) throw ConfigError("bad sample");
    obs.received.emplace_back(re, im);
  }
  if (i != lines.size()) throw ConfigError("trailing lines in observation");
  return obs;
}

std::string decode_output_to_text(const DecodeOutput& out) {
  std::string s;
  char buf[96];
  for (const auto& b : out.blocks) {
    std::snprintf(buf, sizeof buf, "block %d %d %.6f %d\n", b.neighbor_id, b.message, b.score,
                  b.heard ? 1 : 0);
    s += buf;
  }
  return s;
}

std::string solver_trace_csv(const std::vector<SolverTraceRow>& trace) {
  std::string s = "iteration,x,y,objective\n";
  for (const auto& r : trace) {
    s += std::to_string(r.iteration) + ',' + format_number(r.position.x) + ',' +
         format_number(r.position.y) + ',' + format_number(r.objective) + '\n';
  }
  return s;
}

}  // namespace rodd
