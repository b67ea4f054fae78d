// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "xreid/io.hpp"
#include "xreid/rng.hpp"

using namespace xreid;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool roundtrips(double v) {
  std::string s = fmt17(v);
  char* end = nullptr;
  double back = std::strtod(s.c_str(), &end);
  return end != nullptr && *end == '\0' && back == v;
}

}  // namespace

TEST_CASE("run config defaults and typed getters") {
  RunConfig rc;
  CHECK(rc.keys().size() == 26);
  CHECK(rc.get_int("sim.identities") == 20);
  CHECK(rc.get_int("sim.walks") == 10);
  CHECK(rc.get_double("sig.epsilon") == 7.0);
  CHECK(rc.get_double("radar.position_sigma") == 0.02);
  CHECK(rc.get_bool("io.write_mesh") == true);
  CHECK(rc.get_bool("eval.exclude_same_walk") == true);
  CHECK(rc.get("train.lr") == "0.0002");

  rc.set("train.epochs", "500");
  CHECK(rc.get_int("train.epochs") == 500);

  CHECK_THROWS_AS(rc.set("train.nope", "1"), Error);
  CHECK_THROWS_AS(rc.get("sim.mystery"), Error);
  rc.set("sim.duration", "fast");
  CHECK_THROWS_AS(rc.get_double("sim.duration"), Error);
  rc.set("sim.walks", "2.5");
  CHECK_THROWS_AS(rc.get_int("sim.walks"), Error);
  rc.set("io.write_mesh", "2");
  CHECK_THROWS_AS(rc.get_bool("io.write_mesh"), Error);
  rc.set("io.write_mesh", "true");
  CHECK(rc.get_bool("io.write_mesh"));
  rc.set("io.write_mesh", "false");
  CHECK_FALSE(rc.get_bool("io.write_mesh"));
}

TEST_CASE("config parsing trims whitespace and skips comments") {
  RunConfig rc;
  std::istringstream in(
      "# leading comment\n"
      "\n"
      "  train.epochs = 42  \n"
      "\tsig.epsilon=9.5\n"
      "   # indented comment\n");
  rc.parse(in);
  CHECK(rc.get_int("train.epochs") == 42);
  CHECK(rc.get_double("sig.epsilon") == 9.5);

  std::istringstream no_eq("train.epochs 42\n");
  CHECK_THROWS_AS(RunConfig().parse(no_eq), Error);
  std::istringstream no_key(" = 5\n");
  CHECK_THROWS_AS(RunConfig().parse(no_key), Error);
  std::istringstream unknown("wat.key = 1\n");
  CHECK_THROWS_AS(RunConfig().parse(unknown), Error);
  CHECK_THROWS_AS(RunConfig().parse_file("/nonexistent/config"), Error);
}

TEST_CASE("serialization is canonical and feeds a stable hash") {
  RunConfig a, b;
  CHECK(a.serialize() == b.serialize());
  CHECK(a.hash_hex() == b.hash_hex());
  CHECK(a.hash_hex().size() == 16);
  for (char c : a.hash_hex()) CHECK(std::isxdigit(static_cast<unsigned char>(c)));

  auto lines = split_lines(a.serialize());
  REQUIRE(lines.size() == a.keys().size());
  for (std::size_t i = 0; i < lines.size(); ++i)
    CHECK(lines[i].rfind(a.keys()[i] + "=", 0) == 0);

  b.set("train.epochs", "1999");
  CHECK(a.hash_hex() != b.hash_hex());

  // a parse of the serialization reproduces the exact configuration
  std::istringstream in(b.serialize());
  RunConfig c;
  c.parse(in);
  CHECK(c.serialize() == b.serialize());
}

TEST_CASE("fnv1a reference values and sensitivity") {
  CHECK(fnv1a("") == 14695981039346656037ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("ab") != fnv1a("ba"));
  CHECK(fnv1a("config") != fnv1a("confih"));
}

TEST_CASE("seventeen significant digits round-trip doubles exactly") {
  std::vector<double> tricky = {0.0,         1.0 / 3.0,    0.1,          3.141592653589793,
                                1e-300,      1e300,        2.5e-9,       12345.678901234567,
                                5e-324,      1.7976931348623157e308,     -0.75,
                                6.022e23,    -1.0 / 7.0,   0.30000000000000004};
  for (double v : tricky) {
    CAPTURE(v);
    CHECK(roundtrips(v));
    CHECK(roundtrips(-v));
  }
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    double v = rng.gauss() * std::pow(10.0, rng.uniform(-12.0, 12.0));
    CAPTURE(v);
    CHECK(roundtrips(v));
  }
}

TEST_CASE("six decimal formatting is fixed width") {
  CHECK(fmt6(1.0) == "1.000000");
  CHECK(fmt6(0.1234567) == "0.123457");
  CHECK(fmt6(-2.5) == "-2.500000");
  CHECK(fmt6(0.0) == "0.000000");
}

TEST_CASE("labeled records survive a write and read cycle") {
  Rng rng(55);
  std::vector<LabeledRecord> recs;
  for (int r = 0; r < 3; ++r) {
    LabeledRecord rec;
    rec.t = 0.1 * r + 1e-13;
    rec.id = r;
    rec.walk = 2 - r;
    int n = 1 + static_cast<int>(rng.index(5));
    for (int i = 0; i < n; ++i)
      rec.points.push_back({Vec3(rng.gauss(), rng.gauss() * 1e-7, rng.gauss() * 1e5),
                            static_cast<BodyPart>(rng.index(6))});
    recs.push_back(std::move(rec));
  }

  std::ostringstream os;
  MetaInfo meta;
  RunConfig rc;
  meta.config = &rc;
  meta.seed = 77;
  write_meta(os, meta);
  for (const LabeledRecord& rec : recs) write_labeled_line(os, rec);

  std::istringstream in(os.str());
  auto back = read_labeled_jsonl(in);
  REQUIRE(back.size() == recs.size());
  for (std::size_t r = 0; r < recs.size(); ++r) {
    CHECK(back[r].t == recs[r].t);
    CHECK(back[r].id == recs[r].id);
    CHECK(back[r].walk == recs[r].walk);
    REQUIRE(back[r].points.size() == recs[r].points.size());
    for (std::size_t i = 0; i < recs[r].points.size(); ++i) {
      CHECK(back[r].points[i].position == recs[r].points[i].position);
      CHECK(back[r].points[i].part == recs[r].points[i].part);
    }
  }
}

TEST_CASE("radar records keep intensity, velocity, and optional track") {
  RadarRecord with_track;
  with_track.t = 1.5;
  with_track.id = 4;
  with_track.walk = 1;
  with_track.track = 3;
  with_track.points.push_back({Vec3(0.25, 5.125, -0.5), 2.0, -1.1000000000000001});
  RadarRecord no_track;
  no_track.t = 1.6;
  no_track.points.push_back({Vec3(1e-17, 0.0, 3.0), 1.0, 0.0});

  std::ostringstream os;
  write_radar_line(os, with_track);
  write_radar_line(os, no_track);
  CHECK(os.str().find("\"track\": 3") != std::string::npos);

  std::istringstream in(os.str());
  auto back = read_radar_jsonl(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].track == 3);
  CHECK(back[1].track == -1);
  CHECK(back[0].points[0].position == with_track.points[0].position);
  CHECK(back[0].points[0].intensity == 2.0);
  CHECK(back[0].points[0].radial_velocity == -1.1000000000000001);
  CHECK(back[1].points[0].position.x() == 1e-17);
}

TEST_CASE("malformed record lines are rejected") {
  std::istringstream bad_json("{\"t\": 0.0, \"id\": oops}\n");
  CHECK_THROWS_AS(read_labeled_jsonl(bad_json), Error);
  std::istringstream short_pt(
      "{\"t\": 0.0, \"id\": 0, \"walk\": 0, \"pts\": [[1.0, 2.0, 3.0]]}\n");
  CHECK_THROWS_AS(read_labeled_jsonl(short_pt), Error);
  std::istringstream bad_part(
      "{\"t\": 0.0, \"id\": 0, \"walk\": 0, \"pts\": [[1.0, 2.0, 3.0, 6]]}\n");
  CHECK_THROWS_AS(read_labeled_jsonl(bad_part), Error);
  std::istringstream neg_part(
      "{\"t\": 0.0, \"id\": 0, \"walk\": 0, \"pts\": [[1.0, 2.0, 3.0, -1]]}\n");
  CHECK_THROWS_AS(read_labeled_jsonl(neg_part), Error);
  std::istringstream radar_short(
      "{\"t\": 0.0, \"id\": 0, \"walk\": 0, \"pts\": [[1.0, 2.0, 3.0, 1.0]]}\n");
  CHECK_THROWS_AS(read_radar_jsonl(radar_short), Error);
  CHECK_THROWS_AS(read_labeled_file("/nonexistent/data.jsonl"), Error);
  CHECK_THROWS_AS(read_radar_file("/nonexistent/data.jsonl"), Error);
}

TEST_CASE("metadata headers carry hash, seed, and the full config") {
  RunConfig rc;
  rc.set("train.epochs", "123");
  MetaInfo meta;
  meta.config = &rc;
  meta.seed = 424242;
  meta.extra.push_back({"rows", "3"});

  std::ostringstream os;
  write_meta(os, meta);
  auto lines = split_lines(os.str());
  REQUIRE(lines.size() == 2 + rc.keys().size() + 1);
  CHECK(lines[0] == "# config-hash: " + rc.hash_hex());
  CHECK(lines[1] == "# seed: 424242");
  CHECK(lines[2] == "# config: sim.identities=20");
  CHECK(lines.back() == "# rows: 3");
  for (const std::string& line : lines) CHECK(line.rfind("# ", 0) == 0);

  MetaInfo bare;
  bare.seed = 9;
  std::ostringstream os2;
  write_meta(os2, bare);
  CHECK(os2.str() == "# seed: 9\n");
}

TEST_CASE("csv emission is exact and width-checked") {
  std::ostringstream os;
  write_csv(os, nullptr, {"k", "value"}, {{"1", "0.500000"}, {"2", "1.000000"}});
  CHECK(os.str() == "k,value\n1,0.500000\n2,1.000000\n");

  std::ostringstream os2;
  CHECK_THROWS_AS(write_csv(os2, nullptr, {"a", "b"}, {{"1"}}), Error);

  MetaInfo meta;
  meta.seed = 5;
  std::ostringstream os3;
  write_csv(os3, &meta, {"a"}, {{"x"}});
  CHECK(os3.str() == "# seed: 5\na\nx\n");
}
