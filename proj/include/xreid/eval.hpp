// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <vector>

#include "xreid/metric_net.hpp"
#include "xreid/radar_model.hpp"
#include "xreid/signature.hpp"

namespace xreid {

// ========================== feasibility metrics ==============================

struct IntersectionResult {
  std::vector<double> per_frame_ratio;          // one entry per aligned frame pair
  std::map<BodyPart, double> per_part_ratio;    // parts with no attributed radar points omitted
  int empty_radar_frames = 0;
};

// membership tolerance: one range bin plus one sigma of position noise
double default_intersection_delta(const RadarConfig& cfg, const NoiseParams& noise);

// fraction of radar points whose nearest signature point lies within delta.
// An empty radar frame counts as 1 (flagged on stderr); an empty signature
// frame against non-empty radar counts as 0.
double intersection_ratio(const RadarFrame& radar, const SignatureFrame& sig, double delta);

// frame-by-frame ratios plus a per-part breakdown attributed by the nearest
// signature point of each in-tolerance radar point
IntersectionResult intersection_sequence(const std::vector<RadarFrame>& radar,
                                         const std::vector<SignatureFrame>& sig, double delta);

// complementary CDF of the values sampled on thresholds k/100, k = 0..100.
// Throws EmptyInput.
std::vector<double> ccdf(const std::vector<double>& values);

// ============================ transport baseline =============================

// exact earth mover's distance with Euclidean ground cost. Null weights mean
// uniform; weights are normalised to sum 1. Throws EmptyInput and
// SizeLimitExceeded (> 128 points per side).
double emd(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
           const std::vector<double>* wa = nullptr, const std::vector<double>* wb = nullptr);

// negative mean frame EMD at the best integer temporal offset in
// [-max_offset, max_offset]; empty frames are skipped pairwise
double emd_similarity(const std::vector<RadarFrame>& radar,
                      const std::vector<SignatureFrame>& sig, int max_offset = 5);

// ============================= ranking protocol ==============================

struct GalleryEntry {
  int identity = 0;
  int walk = 0;
  std::vector<SignatureFrame> signature;
  Eigen::VectorXd embedding;  // consistent with encode_signature on the sequence
};

struct Query {
  int identity = 0;
  int walk = 0;
  std::vector<RadarFrame> radar;
};

struct CMCResult {
  std::vector<double> top_k;  // index k-1 holds top-k accuracy
};

enum class Scorer { Model, Emd };

// Ranks the gallery per query by descending similarity with gallery-index
// tie-break; an identity scores by its best-ranked entry. When
// exclude_same_walk is set, entries sharing the query's identity and walk are
// dropped from that query's ranking. Throws QueryIdentityMissing if a query
// identity has no remaining gallery entry.
CMCResult cmc(const std::vector<Query>& queries, const std::vector<GalleryEntry>& gallery,
              Scorer scorer, const ModelParams* params, bool exclude_same_walk = true,
              int threads = 1);

// per-query ranked (gallery index, similarity) lists, most similar first
std::vector<std::vector<std::pair<int, double>>> rank_queries(
    const std::vector<Query>& queries, const std::vector<GalleryEntry>& gallery, Scorer scorer,
    const ModelParams* params, bool exclude_same_walk = true, int threads = 1);

}  // namespace xreid
