// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xreid/io.hpp"

namespace xreid {

// =============================== run config ==================================

RunConfig::RunConfig() {
  auto add = [&](const char* k, const char* v) {
    order_.push_back(k);
    values_[k] = v;
  };
  add("sim.identities", "20");
  add("sim.walks", "10");
  add("sim.duration", "2.5");
  add("sim.frame_rate", "10");
  add("sim.mesh_points", "2500");
  add("sim.start_distance", "5.5");
  add("sig.epsilon", "7");  // degrees
  add("radar.mount_height", "0.9");
  add("radar.max_range", "15");
  add("radar.azimuth_fov", "60");
  add("radar.elevation_fov", "60");
  add("radar.ghost_rate", "1");
  add("radar.position_sigma", "0.02");
  add("radar.dropout", "0.1");
  add("radar.max_points", "64");
  add("train.lr", "0.0002");
  add("train.batch", "32");
  add("train.epochs", "2000");
  add("train.margin", "0.3");
  add("train.share_lstm", "1");
  add("train.log_every", "100");
  add("eval.frames", "0");             // 0 keeps every frame
  add("eval.exclude_same_walk", "1");
  add("eval.max_offset", "5");
  add("eval.delta", "0");              // 0 selects range bin + position sigma
  add("io.write_mesh", "1");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  require(it != values_.end(), Err::ConfigError, "unknown config key: " + key);
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), Err::ConfigError, "unknown config key: " + key);
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& s = get(key);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(Err::ConfigError, "key " + key + " is not a number: " + s);
  }
  require(pos == s.size(), Err::ConfigError, "key " + key + " is not a number: " + s);
  return v;
}

int RunConfig::get_int(const std::string& key) const {
  double v = get_double(key);
  int i = static_cast<int>(v);
  require(static_cast<double>(i) == v, Err::ConfigError, "key " + key + " is not an integer");
  return i;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  fail(Err::ConfigError, "key " + key + " is not a boolean: " + s);
}

void RunConfig::parse(std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno += 1;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    std::size_t eq = line.find('=', start);
    require(eq != std::string::npos, Err::ConfigError,
            "config line " + std::to_string(lineno) + " has no '='");
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t\r");
      std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), Err::ConfigError,
            "config line " + std::to_string(lineno) + " has an empty key");
    set(key, value);
  }
}

void RunConfig::parse_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Err::IoError, "cannot open config file " + path);
  parse(f);
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const std::string& k : order_) {
    out += k;
    out += '=';
    out += values_.at(k);
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string RunConfig::hash_hex() const {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(serialize())));
  return buf;
}

// ============================ metadata headers ===============================

void write_meta(std::ostream& os, const MetaInfo& meta, const std::string& prefix) {
  if (meta.config != nullptr) {
    os << prefix << "config-hash: " << meta.config->hash_hex() << "\n";
    os << prefix << "seed: " << meta.seed << "\n";
    for (const std::string& k : meta.config->keys())
      os << prefix << "config: " << k << "=" << meta.config->get(k) << "\n";
  } else {
    os << prefix << "seed: " << meta.seed << "\n";
  }
  for (const auto& [k, v] : meta.extra) os << prefix << k << ": " << v << "\n";
}

// =========================== JSON-lines records ==============================

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_labeled_line(std::ostream& os, const LabeledRecord& rec) {
  os << "{\"t\": " << fmt17(rec.t) << ", \"id\": " << rec.id << ", \"walk\": " << rec.walk
     << ", \"pts\": [";
  for (std::size_t i = 0; i < rec.points.size(); ++i) {
    const LabeledPoint& p = rec.points[i];
    os << (i ? ", [" : "[") << fmt17(p.position.x()) << ", " << fmt17(p.position.y()) << ", "
       << fmt17(p.position.z()) << ", " << static_cast<int>(p.part) << "]";
  }
  os << "]}\n";
}

void write_radar_line(std::ostream& os, const RadarRecord& rec) {
  os << "{\"t\": " << fmt17(rec.t) << ", \"id\": " << rec.id << ", \"walk\": " << rec.walk;
  if (rec.track >= 0) os << ", \"track\": " << rec.track;
  os << ", \"pts\": [";
  for (std::size_t i = 0; i < rec.points.size(); ++i) {
    const RadarPoint& p = rec.points[i];
    os << (i ? ", [" : "[") << fmt17(p.position.x()) << ", " << fmt17(p.position.y()) << ", "
       << fmt17(p.position.z()) << ", " << fmt17(p.intensity) << ", "
       << fmt17(p.radial_velocity) << "]";
  }
  os << "]}\n";
}

namespace {

nlohmann::json parse_line(const std::string& line, int lineno) {
  try {
    return nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    fail(Err::IoError, "bad JSON on line " + std::to_string(lineno) + ": " + e.what());
  }
}

bool skip_line(const std::string& line) {
  std::size_t start = line.find_first_not_of(" \t\r");
  return start == std::string::npos || line[start] == '#';
}

}  // namespace

std::vector<LabeledRecord> read_labeled_jsonl(std::istream& in) {
  std::vector<LabeledRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno += 1;
    if (skip_line(line)) continue;
    nlohmann::json j = parse_line(line, lineno);
    LabeledRecord rec;
    rec.t = j.at("t").get<double>();
    rec.id = j.at("id").get<int>();
    rec.walk = j.at("walk").get<int>();
    for (const auto& p : j.at("pts")) {
      require(p.size() == 4, Err::IoError,
              "line " + std::to_string(lineno) + ": mesh points need 4 entries");
      int part = p[3].get<int>();
      require(part >= 0 && part < kNumBodyParts, Err::IoError,
              "line " + std::to_string(lineno) + ": bad body part " + std::to_string(part));
      rec.points.push_back({Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>()),
                            static_cast<BodyPart>(part)});
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RadarRecord> read_radar_jsonl(std::istream& in) {
  std::vector<RadarRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno += 1;
    if (skip_line(line)) continue;
    nlohmann::json j = parse_line(line, lineno);
    RadarRecord rec;
    rec.t = j.at("t").get<double>();
    rec.id = j.at("id").get<int>();
    rec.walk = j.at("walk").get<int>();
    rec.track = j.value("track", -1);
    for (const auto& p : j.at("pts")) {
      require(p.size() == 5, Err::IoError,
              "line " + std::to_string(lineno) + ": radar points need 5 entries");
      RadarPoint rp;
      rp.position = Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
      rp.intensity = p[3].get<double>();
      rp.radial_velocity = p[4].get<double>();
      rec.points.push_back(rp);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LabeledRecord> read_labeled_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Err::IoError, "cannot open " + path);
  return read_labeled_jsonl(f);
}

std::vector<RadarRecord> read_radar_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Err::IoError, "cannot open " + path);
  return read_radar_jsonl(f);
}

// ================================ CSV ========================================

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_csv(std::ostream& os, const MetaInfo* meta, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
  if (meta != nullptr) write_meta(os, *meta);
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    require(row.size() == columns.size(), Err::ShapeMismatch, "csv row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

}  // namespace xreid
