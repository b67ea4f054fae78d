// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xreid/radar_model.hpp"
#include "xreid/types.hpp"

namespace xreid {

// =============================== run config ==================================

// flat key=value configuration with '#' comments; unknown keys are rejected
class RunConfig {
 public:
  RunConfig();  // all keys at their defaults

  void set(const std::string& key, const std::string& value);  // ConfigError on unknown key
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  void parse(std::istream& in);                // ConfigError on malformed lines
  void parse_file(const std::string& path);    // IoError when unreadable
  std::string serialize() const;               // canonical key order
  std::string hash_hex() const;                // FNV-1a of the serialization

  const std::vector<std::string>& keys() const { return order_; }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a(const std::string& s);

// ============================ metadata headers ===============================

// every emitted file starts with comment lines carrying the resolved config,
// its hash, and the run seed
struct MetaInfo {
  const RunConfig* config = nullptr;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;
};

void write_meta(std::ostream& os, const MetaInfo& meta, const std::string& prefix = "# ");

// =========================== JSON-lines records ==============================

// mesh and signature frames share one schema; radar adds intensity/velocity
// and an optional track id
struct LabeledRecord {
  double t = 0.0;
  int id = 0;
  int walk = 0;
  std::vector<LabeledPoint> points;
};

struct RadarRecord {
  double t = 0.0;
  int id = 0;
  int walk = 0;
  int track = -1;  // < 0 when absent
  std::vector<RadarPoint> points;
};

void write_labeled_line(std::ostream& os, const LabeledRecord& rec);
void write_radar_line(std::ostream& os, const RadarRecord& rec);
std::vector<LabeledRecord> read_labeled_jsonl(std::istream& in);   // skips comment lines
std::vector<RadarRecord> read_radar_jsonl(std::istream& in);
std::vector<LabeledRecord> read_labeled_file(const std::string& path);
std::vector<RadarRecord> read_radar_file(const std::string& path);

// ================================ CSV ========================================

std::string fmt6(double v);   // fixed 6 decimals
std::string fmt17(double v);  // 17 significant digits, round-trip exact

void write_csv(std::ostream& os, const MetaInfo* meta, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace xreid
