// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "xreid/eval.hpp"

namespace xreid {

namespace {

struct NearestHit {
  bool inside = false;
  BodyPart part = BodyPart::Torso;
};

// nearest signature point per radar point, tolerance test included
std::vector<NearestHit> nearest_parts(const RadarFrame& radar, const SignatureFrame& sig,
                                      double delta) {
  std::vector<NearestHit> hits(radar.points.size());
  for (std::size_t i = 0; i < radar.points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const LabeledPoint& s : sig.points) {
      double d = (radar.points[i].position - s.position).norm();
      if (d < best) {
        best = d;
        hits[i].part = s.part;
      }
    }
    hits[i].inside = best <= delta;
  }
  return hits;
}

}  // namespace

double default_intersection_delta(const RadarConfig& cfg, const NoiseParams& noise) {
  return cfg.range_bin() + noise.position_sigma;
}

double intersection_ratio(const RadarFrame& radar, const SignatureFrame& sig, double delta) {
  require(delta > 0.0, Err::InvalidParams, "delta must be positive");
  if (radar.points.empty()) {
    std::fprintf(stderr, "warning: empty radar frame scored as intersection ratio 1\n");
    return 1.0;
  }
  if (sig.points.empty()) return 0.0;
  auto hits = nearest_parts(radar, sig, delta);
  long inside = std::count_if(hits.begin(), hits.end(), [](const NearestHit& h) {
    return h.inside;
  });
  return static_cast<double>(inside) / static_cast<double>(hits.size());
}

IntersectionResult intersection_sequence(const std::vector<RadarFrame>& radar,
                                         const std::vector<SignatureFrame>& sig, double delta) {
  require(delta > 0.0, Err::InvalidParams, "delta must be positive");
  require(radar.size() == sig.size(), Err::ShapeMismatch,
          "radar and signature sequences differ in length");
  IntersectionResult out;
  std::map<BodyPart, long> part_total, part_inside;
  for (std::size_t f = 0; f < radar.size(); ++f) {
    if (radar[f].points.empty()) {
      out.empty_radar_frames += 1;
      out.per_frame_ratio.push_back(1.0);
      continue;
    }
    if (sig[f].points.empty()) {
      out.per_frame_ratio.push_back(0.0);
      continue;
    }
    auto hits = nearest_parts(radar[f], sig[f], delta);
    long inside = 0;
    for (const NearestHit& h : hits) {
      part_total[h.part] += 1;
      if (h.inside) {
        part_inside[h.part] += 1;
        inside += 1;
      }
    }
    out.per_frame_ratio.push_back(static_cast<double>(inside) /
                                  static_cast<double>(hits.size()));
  }
  for (const auto& [part, total] : part_total)
    out.per_part_ratio[part] =
        static_cast<double>(part_inside[part]) / static_cast<double>(total);
  if (out.empty_radar_frames > 0)
    std::fprintf(stderr, "warning: %d empty radar frames scored as intersection ratio 1\n",
                 out.empty_radar_frames);
  return out;
}

std::vector<double> ccdf(const std::vector<double>& values) {
  require(!values.empty(), Err::EmptyInput, "ccdf needs values");
  std::vector<double> curve(101);
  for (int k = 0; k <= 100; ++k) {
    double thr = static_cast<double>(k) / 100.0;
    long at_or_above = std::count_if(values.begin(), values.end(),
                                     [thr](double v) { return v >= thr; });
    curve[k] = static_cast<double>(at_or_above) / static_cast<double>(values.size());
  }
  return curve;
}

std::vector<std::vector<std::pair<int, double>>> rank_queries(
    const std::vector<Query>& queries, const std::vector<GalleryEntry>& gallery, Scorer scorer,
    const ModelParams* params, bool exclude_same_walk, int threads) {
  require(!gallery.empty(), Err::EmptyInput, "gallery is empty");
  require(scorer == Scorer::Emd || params != nullptr, Err::InvalidParams,
          "model scorer needs parameters");
  for (const Query& q : queries) {
    bool found = false;
    for (const GalleryEntry& g : gallery)
      if (g.identity == q.identity && !(exclude_same_walk && g.walk == q.walk)) {
        found = true;
        break;
      }
    require(found, Err::QueryIdentityMissing,
            "identity " + std::to_string(q.identity) + " has no rankable gallery entry");
  }

  const int nq = static_cast<int>(queries.size());
  std::vector<std::vector<std::pair<int, double>>> ranked(nq);
  auto score_range = [&](int lo, int hi) {
    for (int qi = lo; qi < hi; ++qi) {
      const Query& q = queries[qi];
      // a query with no detections carries no evidence; every entry ties at
      // zero and the gallery-index tie-break yields chance-level ranking
      bool blind = std::all_of(q.radar.begin(), q.radar.end(),
                               [](const RadarFrame& f) { return f.points.empty(); });
      Eigen::VectorXd emb;
      if (!blind && scorer == Scorer::Model) emb = encode_radar(q.radar, *params);
      std::vector<std::pair<int, double>>& rows = ranked[qi];
      rows.reserve(gallery.size());
      for (int gi = 0; gi < static_cast<int>(gallery.size()); ++gi) {
        const GalleryEntry& g = gallery[gi];
        if (exclude_same_walk && g.identity == q.identity && g.walk == q.walk) continue;
        double s = blind ? 0.0
                         : (scorer == Scorer::Model ? similarity(emb, g.embedding)
                                                    : emd_similarity(q.radar, g.signature));
        rows.push_back({gi, s});
      }
      std::stable_sort(rows.begin(), rows.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
    }
  };

  int workers = std::max(1, std::min(threads, nq));
  if (workers == 1) {
    score_range(0, nq);
  } else {
    std::vector<std::thread> pool;
    int chunk = (nq + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      int lo = w * chunk, hi = std::min(nq, lo + chunk);
      if (lo < hi) pool.emplace_back(score_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  return ranked;
}

CMCResult cmc(const std::vector<Query>& queries, const std::vector<GalleryEntry>& gallery,
              Scorer scorer, const ModelParams* params, bool exclude_same_walk, int threads) {
  require(!queries.empty(), Err::EmptyInput, "no queries");
  auto ranked = rank_queries(queries, gallery, scorer, params, exclude_same_walk, threads);
  const int G = static_cast<int>(gallery.size());
  std::vector<long> hits(G, 0);
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    int best_rank = G;  // best (lowest) rank of the true identity, 1-based
    for (int r = 0; r < static_cast<int>(ranked[qi].size()); ++r) {
      if (gallery[ranked[qi][r].first].identity == queries[qi].identity) {
        best_rank = r + 1;
        break;
      }
    }
    for (int k = best_rank; k <= G; ++k) hits[k - 1] += 1;
  }
  CMCResult out;
  out.top_k.resize(G);
  for (int k = 0; k < G; ++k)
    out.top_k[k] = static_cast<double>(hits[k]) / static_cast<double>(queries.size());
  return out;
}

}  // namespace xreid
