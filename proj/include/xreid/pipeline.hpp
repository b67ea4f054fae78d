// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xreid/eval.hpp"
#include "xreid/gait_sim.hpp"
#include "xreid/io.hpp"
#include "xreid/metric_net.hpp"
#include "xreid/preprocess.hpp"
#include "xreid/radar_model.hpp"
#include "xreid/signature.hpp"

namespace xreid {

// typed view of a RunConfig
struct PipelineConfig {
  int identities = 20;
  int walks = 10;
  double duration = 2.5;
  double frame_rate = 10.0;
  int mesh_points = 2500;
  double start_distance = 5.5;
  double epsilon_rad = 0.0;
  RadarConfig radar;
  NoiseParams noise;
  TrainConfig train;
  int eval_frames = 0;          // 0 keeps whole sequences
  bool exclude_same_walk = true;
  int max_offset = 5;
  double delta = 0.0;           // 0 selects the default tolerance
  bool write_mesh = true;
};

PipelineConfig materialize(const RunConfig& rc);

// One subject walk after the full capture chain. gt_signature comes from the
// true mesh poses in the radar frame (the synchronized feasibility view);
// gallery_signature goes through the camera frame, radar-side tracking, and
// trajectory alignment (the retrieval view); mesh_subsample is the aligned
// raw-mesh stand-in used by the noST signature branch.
struct WalkData {
  int identity = 0;
  int walk = 0;
  std::vector<SignatureFrame> gt_signature;
  std::vector<RadarFrame> radar;
  std::vector<SignatureFrame> gallery_signature;
  std::vector<SignatureFrame> mesh_subsample;
};

struct DatasetBundle {
  PipelineConfig cfg;
  std::uint64_t seed = 0;
  std::vector<GaitParams> cohort;
  std::vector<WalkData> walks;  // identity-major, walk-minor order
};

inline constexpr int kNoStPointBudget = 64;  // raw-mesh subsample per frame

// gait/walk inputs for one (identity, walk) slot, derived purely from the seed
WalkSpec walk_spec_for(const PipelineConfig& cfg, std::uint64_t seed, int identity, int walk,
                       double azimuth_rad);
std::uint64_t walk_seed(std::uint64_t seed, int identity, int walk);

// full capture chain for one walk; azimuth rotates the walking line about the
// sensor, epsilon_gallery overrides the vision-side synthesis angle, and
// cam_mesh_out (when given) receives the camera-frame mesh capture
WalkData build_walk(const PipelineConfig& cfg, std::uint64_t seed, const GaitParams& gait,
                    int identity, int walk, double azimuth_rad, double epsilon_gallery,
                    MeshSequence* cam_mesh_out = nullptr);

// walk slots build independently (each is fully derived from its slot seed),
// so worker count never changes the result
DatasetBundle build_dataset(const RunConfig& rc, std::uint64_t seed, int threads = 1);

// deterministic per-identity 75/25 walk split (train first, by walk index)
struct SplitIndices {
  std::vector<int> train_walks, test_walks;  // indices into DatasetBundle::walks
};
SplitIndices split_dataset(const DatasetBundle& bundle);

std::vector<TrainRecord> make_train_records(const DatasetBundle& bundle,
                                            const SplitIndices& split, bool no_st);

// gallery/query construction over the test split; test_walk_cap keeps the
// first N walks per identity (0 = all), frame_cap truncates sequences
std::vector<GalleryEntry> make_gallery(const DatasetBundle& bundle, const std::vector<int>& walks,
                                       bool no_st, const ModelParams* params, int frame_cap);
std::vector<Query> make_queries(const DatasetBundle& bundle, const std::vector<int>& walks,
                                int frame_cap);

CMCResult evaluate_split(const DatasetBundle& bundle, const SplitIndices& split, Scorer scorer,
                         const ModelParams* params, bool no_st, int frame_cap, int threads);

// ========================== feasibility study ================================

struct FeasibilityResult {
  double same_mean = 0.0, diff_mean = 0.0;
  std::vector<double> same_ccdf, diff_ccdf;          // 101-point grids
  std::map<BodyPart, double> per_part_ratio;          // same-identity breakdown
  int empty_radar_frames = 0;
};

// synchronized same-walk ratios against time-aligned other-identity ratios
FeasibilityResult feasibility_study(const DatasetBundle& bundle);

// ================================ sweeps =====================================

enum class SweepKind { Epsilon, ViewAngle, FrameCount, GallerySize, RecordsPerSubject };

SweepKind sweep_kind_from(const std::string& name);  // ConfigError on unknown name
const char* sweep_kind_name(SweepKind k);

struct SweepRow {
  double value = 0.0;
  CMCResult cmc;
};

// re-evaluates a fixed checkpoint across the grid; epsilon and view_angle
// regenerate capture data, the others reuse the base bundle
std::vector<SweepRow> run_sweep(const DatasetBundle& bundle, const SplitIndices& split,
                                const ModelParams& params, SweepKind kind,
                                const std::vector<double>& grid, int threads);

std::vector<double> default_sweep_grid(SweepKind k);

}  // namespace xreid
