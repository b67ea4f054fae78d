// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "xreid/pipeline.hpp"
#include "xreid/rng.hpp"

namespace xreid {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<SignatureFrame> truncate_sig(const std::vector<SignatureFrame>& seq, int cap) {
  if (cap <= 0 || static_cast<int>(seq.size()) <= cap) return seq;
  return {seq.begin(), seq.begin() + cap};
}

std::vector<RadarFrame> truncate_radar(const std::vector<RadarFrame>& seq, int cap) {
  if (cap <= 0 || static_cast<int>(seq.size()) <= cap) return seq;
  return {seq.begin(), seq.begin() + cap};
}

MeshSequence transform_mesh(const MeshSequence& mesh, const RigidTransform& tf) {
  MeshSequence out = mesh;
  for (MeshFrame& f : out.frames) {
    for (LabeledPoint& p : f.points) p.position = tf.apply(p.position);
    f.subject_center = tf.apply(f.subject_center);
  }
  return out;
}

}  // namespace

PipelineConfig materialize(const RunConfig& rc) {
  PipelineConfig c;
  c.identities = rc.get_int("sim.identities");
  c.walks = rc.get_int("sim.walks");
  c.duration = rc.get_double("sim.duration");
  c.frame_rate = rc.get_double("sim.frame_rate");
  c.mesh_points = rc.get_int("sim.mesh_points");
  c.start_distance = rc.get_double("sim.start_distance");
  c.epsilon_rad = rc.get_double("sig.epsilon") * kPi / 180.0;
  c.radar.mount_height = rc.get_double("radar.mount_height");
  c.radar.max_range = rc.get_double("radar.max_range");
  c.radar.azimuth_fov_deg = rc.get_double("radar.azimuth_fov");
  c.radar.elevation_fov_deg = rc.get_double("radar.elevation_fov");
  c.radar.max_points_per_frame = rc.get_int("radar.max_points");
  c.radar.frame_rate = c.frame_rate;
  c.noise.ghost_rate = rc.get_double("radar.ghost_rate");
  c.noise.position_sigma = rc.get_double("radar.position_sigma");
  c.noise.dropout = rc.get_double("radar.dropout");
  c.train.learning_rate = rc.get_double("train.lr");
  c.train.batch_size = rc.get_int("train.batch");
  c.train.epochs = rc.get_int("train.epochs");
  c.train.margin = rc.get_double("train.margin");
  c.train.share_lstm = rc.get_bool("train.share_lstm");
  c.train.log_every = rc.get_int("train.log_every");
  c.eval_frames = rc.get_int("eval.frames");
  c.exclude_same_walk = rc.get_bool("eval.exclude_same_walk");
  c.max_offset = rc.get_int("eval.max_offset");
  c.delta = rc.get_double("eval.delta");
  c.write_mesh = rc.get_bool("io.write_mesh");
  c.radar.check();
  return c;
}

std::uint64_t walk_seed(std::uint64_t seed, int identity, int walk) {
  return mix_seed(mix_seed(seed, 0xa11ceULL),
                  static_cast<std::uint64_t>(identity) * 4096u + static_cast<std::uint64_t>(walk));
}

WalkSpec walk_spec_for(const PipelineConfig& cfg, std::uint64_t seed, int identity, int walk,
                       double azimuth_rad) {
  Rng rng(mix_seed(walk_seed(seed, identity, walk), 0x5b0cULL));
  double lateral = rng.uniform(-0.3, 0.3);
  RigidTransform rot = RigidTransform::rot_z(azimuth_rad, Vec3::Zero());
  WalkSpec ws;
  ws.start = rot.apply(Vec3(lateral, cfg.start_distance, 0.0));
  ws.start.z() = -cfg.radar.mount_height;  // walks live on the floor plane
  ws.heading = rot.apply(Vec3(0.0, -1.0, 0.0));
  ws.duration = cfg.duration;
  ws.frame_rate = cfg.frame_rate;
  ws.lateral_offset = lateral;
  ws.direction = WalkDirection::TowardSensor;
  ws.seed = walk_seed(seed, identity, walk);
  ws.mesh_points = cfg.mesh_points;
  return ws;
}

WalkData build_walk(const PipelineConfig& cfg, std::uint64_t seed, const GaitParams& gait,
                    int identity, int walk, double azimuth_rad, double epsilon_gallery,
                    MeshSequence* cam_mesh_out) {
  std::uint64_t wseed = walk_seed(seed, identity, walk);
  Rng rng(mix_seed(wseed, 0x9a17ULL));
  GaitParams g = gait;
  g.phase_offset = rng.uniform(0.0, 2.0 * kPi);

  WalkSpec ws = walk_spec_for(cfg, seed, identity, walk, azimuth_rad);
  MeshSequence mesh = synth_subject(g, ws);

  WalkData out;
  out.identity = identity;
  out.walk = walk;
  out.gt_signature = synthesize_sequence(mesh, Vec3::Zero(), cfg.epsilon_rad);
  out.radar = simulate_sequence(out.gt_signature, cfg.radar, cfg.noise, mix_seed(wseed, 0x5adaULL));

  // the vision capture lives in its own frame: yaw plus translation
  RigidTransform cam = RigidTransform::rot_z(
      rng.uniform(-kPi, kPi), Vec3(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                                   rng.uniform(-0.5, 0.5)));
  MeshSequence cam_mesh = transform_mesh(mesh, cam);
  if (cam_mesh_out != nullptr) *cam_mesh_out = cam_mesh;

  // recover the walk line from the tracked radar cluster, align, synthesize
  try {
    SegmentParams sp;
    sp.expected_subjects = 1;
    auto tracks = segment_subjects(out.radar, sp);
    std::vector<std::vector<Vec3>> cluster_frames;
    for (const RadarFrame& f : tracks[0].frames) {
      std::vector<Vec3> pts;
      pts.reserve(f.points.size());
      for (const RadarPoint& p : f.points) pts.push_back(p.position);
      cluster_frames.push_back(std::move(pts));
    }
    Trajectory radar_traj = estimate_trajectory(cluster_frames);
    MeshSequence aligned = align_mesh_to_radar(cam_mesh, radar_traj);
    out.gallery_signature = synthesize_sequence(aligned, Vec3::Zero(), epsilon_gallery);
    out.mesh_subsample.reserve(aligned.frames.size());
    for (const MeshFrame& f : aligned.frames) {
      SignatureFrame sf;
      sf.t = f.t;
      int n = static_cast<int>(f.points.size());
      int keep = std::min(n, kNoStPointBudget);
      sf.points.reserve(keep);
      for (int i = 0; i < keep; ++i)
        sf.points.push_back(f.points[static_cast<std::size_t>(i) * n / keep]);
      out.mesh_subsample.push_back(std::move(sf));
    }
  } catch (const Error&) {
    // no usable radar track (e.g. the walk left the field of view); the
    // retrieval-side products stay empty and callers decide whether that
    // is acceptable
    out.gallery_signature.clear();
    out.mesh_subsample.clear();
  }
  return out;
}

DatasetBundle build_dataset(const RunConfig& rc, std::uint64_t seed, int threads) {
  DatasetBundle bundle;
  bundle.cfg = materialize(rc);
  bundle.seed = seed;
  bundle.cohort = make_cohort(bundle.cfg.identities, mix_seed(seed, 0xc004ULL));
  const int total = bundle.cfg.identities * bundle.cfg.walks;
  bundle.walks.resize(total);

  // every walk derives from its own slot seed, so the build order is free;
  // workers write disjoint slots and failures are replayed by slot order
  std::vector<std::exception_ptr> failures(total);
  std::atomic<int> next{0};
  auto run = [&] {
    for (int k = next.fetch_add(1); k < total; k = next.fetch_add(1)) {
      int id = k / bundle.cfg.walks, w = k % bundle.cfg.walks;
      try {
        bundle.walks[k] =
            build_walk(bundle.cfg, seed, bundle.cohort[id], id, w, 0.0, bundle.cfg.epsilon_rad);
        require(!bundle.walks[k].gallery_signature.empty(), Err::NoSubjectsFound,
                "walk " + std::to_string(w) + " of identity " + std::to_string(id) +
                    " produced no retrieval-side signature");
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  int workers = std::max(1, std::min(threads, total));
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (const std::exception_ptr& f : failures)
    if (f) std::rethrow_exception(f);
  return bundle;
}

SplitIndices split_dataset(const DatasetBundle& bundle) {
  require(bundle.cfg.walks >= 2, Err::InvalidParams, "splitting needs >= 2 walks per identity");
  int n_train = static_cast<int>(std::floor(0.75 * bundle.cfg.walks + 0.5));
  n_train = std::min(std::max(n_train, 1), bundle.cfg.walks - 1);
  SplitIndices split;
  for (int i = 0; i < static_cast<int>(bundle.walks.size()); ++i) {
    if (bundle.walks[i].walk < n_train)
      split.train_walks.push_back(i);
    else
      split.test_walks.push_back(i);
  }
  return split;
}

std::vector<TrainRecord> make_train_records(const DatasetBundle& bundle,
                                            const SplitIndices& split, bool no_st) {
  std::vector<TrainRecord> records;
  records.reserve(split.train_walks.size());
  for (int i : split.train_walks) {
    const WalkData& w = bundle.walks[i];
    records.push_back(
        {w.identity, w.walk, w.radar, no_st ? w.mesh_subsample : w.gallery_signature});
  }
  return records;
}

std::vector<GalleryEntry> make_gallery(const DatasetBundle& bundle, const std::vector<int>& walks,
                                       bool no_st, const ModelParams* params, int frame_cap) {
  std::vector<GalleryEntry> gallery;
  gallery.reserve(walks.size());
  for (int i : walks) {
    const WalkData& w = bundle.walks[i];
    GalleryEntry e;
    e.identity = w.identity;
    e.walk = w.walk;
    e.signature = truncate_sig(no_st ? w.mesh_subsample : w.gallery_signature, frame_cap);
    e.embedding = (params != nullptr) ? encode_signature(e.signature, *params)
                                      : Eigen::VectorXd::Zero(64);
    gallery.push_back(std::move(e));
  }
  return gallery;
}

std::vector<Query> make_queries(const DatasetBundle& bundle, const std::vector<int>& walks,
                                int frame_cap) {
  std::vector<Query> queries;
  queries.reserve(walks.size());
  for (int i : walks) {
    const WalkData& w = bundle.walks[i];
    queries.push_back({w.identity, w.walk, truncate_radar(w.radar, frame_cap)});
  }
  return queries;
}

CMCResult evaluate_split(const DatasetBundle& bundle, const SplitIndices& split, Scorer scorer,
                         const ModelParams* params, bool no_st, int frame_cap, int threads) {
  auto gallery = make_gallery(bundle, split.test_walks, no_st, params, frame_cap);
  auto queries = make_queries(bundle, split.test_walks, frame_cap);
  return cmc(queries, gallery, scorer, params, bundle.cfg.exclude_same_walk, threads);
}

// ========================== feasibility study ================================

FeasibilityResult feasibility_study(const DatasetBundle& bundle) {
  require(bundle.cfg.identities >= 2, Err::InsufficientIdentities,
          "feasibility needs >= 2 identities");
  double delta = bundle.cfg.delta > 0.0
                     ? bundle.cfg.delta
                     : default_intersection_delta(bundle.cfg.radar, bundle.cfg.noise);
  FeasibilityResult out;
  std::vector<double> same_vals, diff_vals;
  std::map<BodyPart, double> part_sum;
  std::map<BodyPart, int> part_n;

  for (const WalkData& w : bundle.walks) {
    IntersectionResult r = intersection_sequence(w.radar, w.gt_signature, delta);
    same_vals.insert(same_vals.end(), r.per_frame_ratio.begin(), r.per_frame_ratio.end());
    out.empty_radar_frames += r.empty_radar_frames;
    for (const auto& [part, ratio] : r.per_part_ratio) {
      part_sum[part] += ratio;
      part_n[part] += 1;
    }
  }
  // time-aligned cross-identity pairs: same walk slot, different subject
  for (const WalkData& a : bundle.walks) {
    for (const WalkData& b : bundle.walks) {
      if (a.identity == b.identity || a.walk != b.walk) continue;
      IntersectionResult r = intersection_sequence(a.radar, b.gt_signature, delta);
      diff_vals.insert(diff_vals.end(), r.per_frame_ratio.begin(), r.per_frame_ratio.end());
    }
  }
  require(!same_vals.empty() && !diff_vals.empty(), Err::EmptyInput,
          "feasibility produced no ratios");
  double s = 0.0, d = 0.0;
  for (double v : same_vals) s += v;
  for (double v : diff_vals) d += v;
  out.same_mean = s / static_cast<double>(same_vals.size());
  out.diff_mean = d / static_cast<double>(diff_vals.size());
  out.same_ccdf = ccdf(same_vals);
  out.diff_ccdf = ccdf(diff_vals);
  for (const auto& [part, sum] : part_sum)
    out.per_part_ratio[part] = sum / static_cast<double>(part_n[part]);
  return out;
}

// ================================ sweeps =====================================

SweepKind sweep_kind_from(const std::string& name) {
  if (name == "epsilon") return SweepKind::Epsilon;
  if (name == "view_angle") return SweepKind::ViewAngle;
  if (name == "frame_count") return SweepKind::FrameCount;
  if (name == "gallery_size") return SweepKind::GallerySize;
  if (name == "records_per_subject") return SweepKind::RecordsPerSubject;
  fail(Err::ConfigError, "unknown sweep experiment: " + name);
}

const char* sweep_kind_name(SweepKind k) {
  switch (k) {
    case SweepKind::Epsilon: return "epsilon";
    case SweepKind::ViewAngle: return "view_angle";
    case SweepKind::FrameCount: return "frame_count";
    case SweepKind::GallerySize: return "gallery_size";
    case SweepKind::RecordsPerSubject: return "records_per_subject";
  }
  return "?";
}

std::vector<double> default_sweep_grid(SweepKind k) {
  switch (k) {
    case SweepKind::Epsilon: return {2.0, 7.0, 15.0, 30.0};
    case SweepKind::ViewAngle: return {0.0, 15.0, 30.0, 45.0, 60.0, 75.0};
    case SweepKind::FrameCount: return {5.0, 10.0, 15.0, 20.0, 25.0};
    case SweepKind::GallerySize: return {5.0, 10.0, 15.0, 20.0};
    case SweepKind::RecordsPerSubject: return {1.0, 2.0, 4.0};
  }
  return {};
}

std::vector<SweepRow> run_sweep(const DatasetBundle& bundle, const SplitIndices& split,
                                const ModelParams& params, SweepKind kind,
                                const std::vector<double>& grid, int threads) {
  require(!grid.empty(), Err::InvalidParams, "sweep grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  const PipelineConfig& cfg = bundle.cfg;

  for (double value : grid) {
    SweepRow row;
    row.value = value;
    switch (kind) {
      case SweepKind::FrameCount: {
        int frames = static_cast<int>(value);
        require(frames >= 1, Err::InvalidParams, "frame count must be >= 1");
        row.cmc = evaluate_split(bundle, split, Scorer::Model, &params, false, frames, threads);
        break;
      }
      case SweepKind::GallerySize: {
        int ids = std::min(std::max(static_cast<int>(value), 2), cfg.identities);
        std::vector<int> kept;
        for (int i : split.test_walks)
          if (bundle.walks[i].identity < ids) kept.push_back(i);
        auto gallery = make_gallery(bundle, kept, false, &params, cfg.eval_frames);
        auto queries = make_queries(bundle, kept, cfg.eval_frames);
        row.cmc = cmc(queries, gallery, Scorer::Model, &params, cfg.exclude_same_walk, threads);
        break;
      }
      case SweepKind::RecordsPerSubject: {
        int r = std::max(static_cast<int>(value), 1);
        std::vector<int> gallery_walks;
        for (int i = 0; i < static_cast<int>(bundle.walks.size()); ++i)
          if (bundle.walks[i].walk < r) gallery_walks.push_back(i);
        auto gallery = make_gallery(bundle, gallery_walks, false, &params, cfg.eval_frames);
        auto queries = make_queries(bundle, split.test_walks, cfg.eval_frames);
        row.cmc = cmc(queries, gallery, Scorer::Model, &params, cfg.exclude_same_walk, threads);
        break;
      }
      case SweepKind::Epsilon: {
        double eps = value * kPi / 180.0;
        require(eps > 0.0, Err::InvalidParams, "epsilon must be positive");
        std::vector<GalleryEntry> gallery;
        for (int i : split.test_walks) {
          const WalkData& base = bundle.walks[i];
          WalkData rebuilt = build_walk(cfg, bundle.seed, bundle.cohort[base.identity],
                                        base.identity, base.walk, 0.0, eps);
          GalleryEntry e;
          e.identity = base.identity;
          e.walk = base.walk;
          e.signature = truncate_sig(rebuilt.gallery_signature, cfg.eval_frames);
          e.embedding = encode_signature(e.signature, params);
          gallery.push_back(std::move(e));
        }
        auto queries = make_queries(bundle, split.test_walks, cfg.eval_frames);
        row.cmc = cmc(queries, gallery, Scorer::Model, &params, cfg.exclude_same_walk, threads);
        break;
      }
      case SweepKind::ViewAngle: {
        double az = value * kPi / 180.0;
        std::vector<Query> queries;
        for (int i : split.test_walks) {
          const WalkData& base = bundle.walks[i];
          WalkData rebuilt = build_walk(cfg, bundle.seed, bundle.cohort[base.identity],
                                        base.identity, base.walk, az, cfg.epsilon_rad);
          queries.push_back({base.identity, base.walk,
                             truncate_radar(rebuilt.radar, cfg.eval_frames)});
        }
        auto gallery = make_gallery(bundle, split.test_walks, false, &params, cfg.eval_frames);
        row.cmc = cmc(queries, gallery, Scorer::Model, &params, cfg.exclude_same_walk, threads);
        break;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace xreid
