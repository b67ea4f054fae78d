// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "xreid/pipeline.hpp"
#include "xreid/rng.hpp"

using namespace xreid;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kSeed = 20240817;

// two identities, four walks, no exclusion: the smallest bundle whose test
// split still yields a rankable query per identity
RunConfig smoke_config() {
  RunConfig rc;
  rc.set("sim.identities", "2");
  rc.set("sim.walks", "4");
  rc.set("eval.exclude_same_walk", "0");
  rc.set("train.log_every", "0");
  return rc;
}

const DatasetBundle& smoke_bundle() {
  static DatasetBundle bundle = build_dataset(smoke_config(), kSeed);
  return bundle;
}

}  // namespace

TEST_CASE("run config materializes into typed pipeline settings") {
  RunConfig rc;
  rc.set("sig.epsilon", "15");
  rc.set("radar.dropout", "0.25");
  rc.set("eval.frames", "10");
  PipelineConfig cfg = materialize(rc);
  CHECK(cfg.identities == 20);
  CHECK(cfg.walks == 10);
  CHECK(cfg.epsilon_rad == doctest::Approx(15.0 * kPi / 180.0).epsilon(1e-12));
  CHECK(cfg.noise.dropout == 0.25);
  CHECK(cfg.noise.ghost_rate == 1.0);
  CHECK(cfg.radar.max_points_per_frame == 64);
  CHECK(cfg.train.epochs == 2000);
  CHECK(cfg.eval_frames == 10);
  CHECK(cfg.exclude_same_walk);
  CHECK(cfg.delta == 0.0);

  RunConfig bad;
  bad.set("radar.dropout", "1");  // certain dropout leaves no returns
  CHECK_THROWS_AS(build_dataset(bad, 1), Error);
}

TEST_CASE("walk seeds and specs vary per slot but derive from the seed") {
  PipelineConfig cfg = materialize(RunConfig());
  std::set<std::uint64_t> seeds;
  for (int id = 0; id < 4; ++id)
    for (int w = 0; w < 4; ++w) seeds.insert(walk_seed(kSeed, id, w));
  CHECK(seeds.size() == 16);
  CHECK(walk_seed(kSeed, 1, 2) == walk_seed(kSeed, 1, 2));
  CHECK(walk_seed(kSeed, 1, 2) != walk_seed(kSeed + 1, 1, 2));

  WalkSpec a = walk_spec_for(cfg, kSeed, 0, 0, 0.0);
  WalkSpec b = walk_spec_for(cfg, kSeed, 0, 1, 0.0);
  CHECK(a.seed == walk_seed(kSeed, 0, 0));
  CHECK(a.duration == cfg.duration);
  CHECK(a.frame_rate == cfg.frame_rate);
  CHECK(a.mesh_points == cfg.mesh_points);
  CHECK(std::abs(a.lateral_offset) <= 0.3);
  CHECK(a.start.x() == a.lateral_offset);
  CHECK(a.start.y() == cfg.start_distance);
  CHECK(a.start.z() == -cfg.radar.mount_height);
  CHECK(a.heading.isApprox(Vec3(0.0, -1.0, 0.0)));
  CHECK(a.lateral_offset != b.lateral_offset);

  // a quarter-turn azimuth rotates the walking line about the sensor
  WalkSpec turned = walk_spec_for(cfg, kSeed, 0, 0, kPi / 2.0);
  CHECK(turned.start.x() == doctest::Approx(-cfg.start_distance).epsilon(1e-9));
  CHECK(turned.heading.isApprox(Vec3(1.0, 0.0, 0.0), 1e-12));
  CHECK(turned.start.z() == -cfg.radar.mount_height);
}

TEST_CASE("dataset bundles cover every identity and walk slot") {
  const DatasetBundle& bundle = smoke_bundle();
  REQUIRE(bundle.cohort.size() == 2);
  REQUIRE(bundle.walks.size() == 8);
  int expect_frames = static_cast<int>(std::floor(bundle.cfg.duration * bundle.cfg.frame_rate));
  for (int id = 0; id < 2; ++id) {
    for (int w = 0; w < 4; ++w) {
      const WalkData& wd = bundle.walks[static_cast<std::size_t>(id) * 4 + w];
      CAPTURE(id);
      CAPTURE(w);
      CHECK(wd.identity == id);
      CHECK(wd.walk == w);
      CHECK(static_cast<int>(wd.gt_signature.size()) == expect_frames);
      CHECK(wd.radar.size() == wd.gt_signature.size());
      CHECK(wd.gallery_signature.size() == wd.mesh_subsample.size());
      CHECK_FALSE(wd.gallery_signature.empty());
      std::size_t gt_points = 0, radar_points = 0;
      for (const auto& f : wd.gt_signature) gt_points += f.points.size();
      for (const auto& f : wd.radar) {
        radar_points += f.points.size();
        CHECK(f.points.size() <= static_cast<std::size_t>(bundle.cfg.radar.max_points_per_frame));
      }
      CHECK(gt_points > 0);
      CHECK(radar_points > 0);
      for (const auto& f : wd.mesh_subsample)
        CHECK(f.points.size() <= static_cast<std::size_t>(kNoStPointBudget));
    }
  }
}

TEST_CASE("dataset builds are deterministic in the seed") {
  const DatasetBundle& bundle = smoke_bundle();
  DatasetBundle again = build_dataset(smoke_config(), kSeed);
  REQUIRE(again.walks.size() == bundle.walks.size());
  for (std::size_t i = 0; i < bundle.walks.size(); ++i) {
    REQUIRE(again.walks[i].radar.size() == bundle.walks[i].radar.size());
    for (std::size_t f = 0; f < bundle.walks[i].radar.size(); ++f) {
      const auto& pa = bundle.walks[i].radar[f].points;
      const auto& pb = again.walks[i].radar[f].points;
      REQUIRE(pa.size() == pb.size());
      for (std::size_t p = 0; p < pa.size(); ++p) {
        CHECK(pa[p].position == pb[p].position);
        CHECK(pa[p].intensity == pb[p].intensity);
        CHECK(pa[p].radial_velocity == pb[p].radial_velocity);
      }
    }
  }

  DatasetBundle other = build_dataset(smoke_config(), kSeed + 1);
  bool differs = false;
  for (std::size_t f = 0; f < other.walks[0].radar.size() && !differs; ++f) {
    const auto& pa = bundle.walks[0].radar[f].points;
    const auto& pb = other.walks[0].radar[f].points;
    if (pa.size() != pb.size()) {
      differs = true;
    } else {
      for (std::size_t p = 0; p < pa.size(); ++p)
        if (pa[p].position != pb[p].position) differs = true;
    }
  }
  CHECK(differs);
}

TEST_CASE("sparse meshes starve the capture chain and fail loudly") {
  RunConfig rc = smoke_config();
  rc.set("sim.walks", "3");
  rc.set("sim.mesh_points", "800");
  CHECK_THROWS_AS(build_dataset(rc, kSeed), Error);
}

TEST_CASE("the walk split is per identity with training walks first") {
  const DatasetBundle& bundle = smoke_bundle();
  SplitIndices split = split_dataset(bundle);
  REQUIRE(split.train_walks.size() == 6);  // 3 of 4 walks per identity
  REQUIRE(split.test_walks.size() == 2);
  for (int i : split.train_walks) CHECK(bundle.walks[i].walk < 3);
  for (int i : split.test_walks) CHECK(bundle.walks[i].walk == 3);
  std::set<int> all(split.train_walks.begin(), split.train_walks.end());
  all.insert(split.test_walks.begin(), split.test_walks.end());
  CHECK(all.size() == bundle.walks.size());

  auto records = make_train_records(bundle, split, false);
  REQUIRE(records.size() == 6);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const WalkData& w = bundle.walks[split.train_walks[r]];
    CHECK(records[r].identity == w.identity);
    CHECK(records[r].walk == w.walk);
    CHECK(records[r].signature.size() == w.gallery_signature.size());
  }
  auto raw = make_train_records(bundle, split, true);
  CHECK(raw[0].signature.size() == bundle.walks[split.train_walks[0]].mesh_subsample.size());
  std::size_t st_pts = 0, raw_pts = 0;
  for (const auto& f : records[0].signature) st_pts += f.points.size();
  for (const auto& f : raw[0].signature) raw_pts += f.points.size();
  CHECK(raw_pts > st_pts);  // the raw-mesh branch keeps many more points
}

TEST_CASE("galleries and queries respect the frame cap") {
  const DatasetBundle& bundle = smoke_bundle();
  SplitIndices split = split_dataset(bundle);
  ModelParams params = init_params(ModelConfig(), 3);

  auto gallery = make_gallery(bundle, split.test_walks, false, &params, 5);
  auto queries = make_queries(bundle, split.test_walks, 5);
  REQUIRE(gallery.size() == 2);
  REQUIRE(queries.size() == 2);
  for (const auto& g : gallery) {
    CHECK(g.signature.size() == 5);
    CHECK(g.embedding.size() == params.cfg.hidden);
    CHECK(g.embedding.isApprox(encode_signature(g.signature, params)));
  }
  for (const auto& q : queries) CHECK(q.radar.size() == 5);

  auto uncapped = make_gallery(bundle, split.test_walks, false, nullptr, 0);
  CHECK(uncapped[0].signature.size() == bundle.walks[split.test_walks[0]].gallery_signature.size());
  CHECK(uncapped[0].embedding.isZero());
}

TEST_CASE("the transport baseline ranks the smoke split") {
  const DatasetBundle& bundle = smoke_bundle();
  SplitIndices split = split_dataset(bundle);
  CMCResult curve = evaluate_split(bundle, split, Scorer::Emd, nullptr, false, 0, 2);
  REQUIRE(curve.top_k.size() == 2);
  for (std::size_t k = 1; k < curve.top_k.size(); ++k)
    CHECK(curve.top_k[k] >= curve.top_k[k - 1]);
  CHECK(curve.top_k.back() == 1.0);
  // a walk's own capture should beat the other identity's walk
  CHECK(curve.top_k[0] == 1.0);
}

TEST_CASE("model scorer evaluation and sweeps run end to end") {
  const DatasetBundle& bundle = smoke_bundle();
  SplitIndices split = split_dataset(bundle);
  ModelParams params = init_params(ModelConfig(), 11);

  CMCResult curve = evaluate_split(bundle, split, Scorer::Model, &params, false, 0, 1);
  REQUIRE(curve.top_k.size() == 2);
  CHECK(curve.top_k.back() == 1.0);

  auto frames = run_sweep(bundle, split, params, SweepKind::FrameCount, {5.0, 25.0}, 2);
  REQUIRE(frames.size() == 2);
  CHECK(frames[0].value == 5.0);
  for (const SweepRow& row : frames) CHECK(row.cmc.top_k.size() == 2);

  auto gallery = run_sweep(bundle, split, params, SweepKind::GallerySize, {2.0}, 1);
  REQUIRE(gallery.size() == 1);
  CHECK(gallery[0].cmc.top_k.size() == 2);

  auto records = run_sweep(bundle, split, params, SweepKind::RecordsPerSubject, {2.0}, 1);
  REQUIRE(records.size() == 1);
  CHECK(records[0].cmc.top_k.size() == 4);  // two gallery walks per identity

  auto eps = run_sweep(bundle, split, params, SweepKind::Epsilon, {7.0}, 1);
  REQUIRE(eps.size() == 1);
  CHECK(eps[0].cmc.top_k.size() == 2);

  auto view = run_sweep(bundle, split, params, SweepKind::ViewAngle, {15.0}, 1);
  REQUIRE(view.size() == 1);
  CHECK(view[0].cmc.top_k.size() == 2);

  CHECK_THROWS_AS(run_sweep(bundle, split, params, SweepKind::FrameCount, {}, 1), Error);
  CHECK_THROWS_AS(run_sweep(bundle, split, params, SweepKind::Epsilon, {0.0}, 1), Error);
}

TEST_CASE("sweep names map to kinds and default grids exist") {
  CHECK(sweep_kind_from("epsilon") == SweepKind::Epsilon);
  CHECK(sweep_kind_from("view_angle") == SweepKind::ViewAngle);
  CHECK(sweep_kind_from("frame_count") == SweepKind::FrameCount);
  CHECK(sweep_kind_from("gallery_size") == SweepKind::GallerySize);
  CHECK(sweep_kind_from("records_per_subject") == SweepKind::RecordsPerSubject);
  CHECK_THROWS_AS(sweep_kind_from("what"), Error);
  for (SweepKind k : {SweepKind::Epsilon, SweepKind::ViewAngle, SweepKind::FrameCount,
                      SweepKind::GallerySize, SweepKind::RecordsPerSubject}) {
    CHECK_FALSE(default_sweep_grid(k).empty());
    CHECK(sweep_kind_from(sweep_kind_name(k)) == k);
  }
}

TEST_CASE("the feasibility study separates same and different identities") {
  const DatasetBundle& bundle = smoke_bundle();
  FeasibilityResult res = feasibility_study(bundle);
  CHECK(res.same_mean >= 0.0);
  CHECK(res.same_mean <= 1.0);
  CHECK(res.diff_mean >= 0.0);
  CHECK(res.diff_mean <= 1.0);
  REQUIRE(res.same_ccdf.size() == 101);
  REQUIRE(res.diff_ccdf.size() == 101);
  CHECK_FALSE(res.per_part_ratio.empty());
  for (const auto& [part, ratio] : res.per_part_ratio) {
    CHECK(ratio >= 0.0);
    CHECK(ratio <= 1.0);
  }
  MESSAGE("same mean ", res.same_mean, " diff mean ", res.diff_mean);
  CHECK(res.same_mean > res.diff_mean);

  RunConfig solo = smoke_config();
  solo.set("sim.identities", "2");
  DatasetBundle tiny = smoke_bundle();  // copy keeps the build cost down
  tiny.cohort.resize(1);
  tiny.walks.erase(tiny.walks.begin() + 4, tiny.walks.end());
  tiny.cfg.identities = 1;
  CHECK_THROWS_AS(feasibility_study(tiny), Error);
}
