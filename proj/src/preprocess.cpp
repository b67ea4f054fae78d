// SPDX-License-Identifier: Apache-2.0
#include "xreid/preprocess.hpp"

#include <algorithm>
#include <limits>

namespace xreid {

std::vector<RadarPoint> height_filter(const std::vector<RadarPoint>& pts, double z_min,
                                      double z_max) {
  require(z_min <= z_max, Err::InvalidParams, "z_min must be <= z_max");
  std::vector<RadarPoint> out;
  out.reserve(pts.size());
  for (const RadarPoint& p : pts)
    if (p.position.z() >= z_min && p.position.z() <= z_max) out.push_back(p);
  return out;
}

std::vector<int> dbscan(const std::vector<Vec3>& pts, double radius, int min_pts) {
  require(radius > 0.0, Err::InvalidParams, "radius must be > 0");
  require(min_pts >= 1, Err::InvalidParams, "min_pts must be >= 1");
  const int n = static_cast<int>(pts.size());
  const double r2 = radius * radius;

  std::vector<std::vector<int>> nb(n);
  for (int i = 0; i < n; ++i) {
    nb[i].push_back(i);
    for (int j = i + 1; j < n; ++j) {
      if ((pts[i] - pts[j]).squaredNorm() <= r2) {
        nb[i].push_back(j);
        nb[j].push_back(i);
      }
    }
  }
  std::vector<bool> core(n, false);
  for (int i = 0; i < n; ++i) core[i] = static_cast<int>(nb[i].size()) >= min_pts;

  // components over core-core edges, scanned in index order so cluster ids are
  // numbered by their smallest core index
  std::vector<int> label(n, kNoise);
  int next = 0;
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (!core[i] || label[i] != kNoise) continue;
    int id = next++;
    label[i] = id;
    stack.assign(1, i);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : nb[u]) {
        if (core[v] && label[v] == kNoise) {
          label[v] = id;
          stack.push_back(v);
        }
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = std::numeric_limits<int>::max();
    for (int v : nb[i])
      if (core[v]) best = std::min(best, label[v]);
    label[i] = (best == std::numeric_limits<int>::max()) ? kNoise : best;
  }
  return label;
}

std::vector<TrackedSubject> segment_subjects(const std::vector<RadarFrame>& frames,
                                             const SegmentParams& params) {
  require(params.gate > 0.0 && params.min_track_frames >= 1 && params.expected_subjects >= 0,
          Err::InvalidParams, "bad segmentation parameters");

  struct Track {
    Vec3 last = Vec3::Zero();
    int first_seen = 0;
    int observed = 0;
    std::vector<RadarFrame> frames;
    std::vector<Vec3> centroids;
  };
  std::vector<Track> tracks;
  const int n_frames = static_cast<int>(frames.size());

  for (int f = 0; f < n_frames; ++f) {
    std::vector<RadarPoint> kept = height_filter(frames[f].points, params.z_min, params.z_max);
    std::vector<Vec3> pos;
    pos.reserve(kept.size());
    for (const RadarPoint& p : kept) pos.push_back(p.position);
    std::vector<int> label = dbscan(pos, params.radius, params.min_pts);

    int n_clusters = 0;
    for (int l : label) n_clusters = std::max(n_clusters, l + 1);
    std::vector<std::vector<RadarPoint>> cluster_pts(n_clusters);
    std::vector<Vec3> cluster_c(n_clusters, Vec3::Zero());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (label[i] == kNoise) continue;
      cluster_pts[label[i]].push_back(kept[i]);
      cluster_c[label[i]] += kept[i].position;
    }
    for (int c = 0; c < n_clusters; ++c)
      cluster_c[c] /= static_cast<double>(cluster_pts[c].size());

    // globally greedy: closest (track, cluster) pairs first, each used once
    struct Cand {
      double d;
      int track, cluster;
    };
    std::vector<Cand> cand;
    for (int t = 0; t < static_cast<int>(tracks.size()); ++t)
      for (int c = 0; c < n_clusters; ++c) {
        double d = (tracks[t].last - cluster_c[c]).norm();
        if (d <= params.gate) cand.push_back({d, t, c});
      }
    std::sort(cand.begin(), cand.end(), [](const Cand& a, const Cand& b) {
      if (a.d != b.d) return a.d < b.d;
      if (a.track != b.track) return a.track < b.track;
      return a.cluster < b.cluster;
    });
    std::vector<bool> track_used(tracks.size(), false), cluster_used(n_clusters, false);
    std::vector<int> assign(n_clusters, -1);
    for (const Cand& c : cand) {
      if (track_used[c.track] || cluster_used[c.cluster]) continue;
      track_used[c.track] = true;
      cluster_used[c.cluster] = true;
      assign[c.cluster] = c.track;
    }
    for (int c = 0; c < n_clusters; ++c) {
      if (assign[c] < 0) {
        tracks.push_back({});
        Track& t = tracks.back();
        t.first_seen = f;
        t.frames.assign(f, RadarFrame{});  // pad the unobserved prefix
        for (int k = 0; k < f; ++k) t.frames[k].t = frames[k].t;
        t.centroids.assign(f, cluster_c[c]);
        assign[c] = static_cast<int>(tracks.size()) - 1;
      }
    }
    for (Track& t : tracks) {
      t.frames.push_back(RadarFrame{frames[f].t, {}});
      t.centroids.push_back(t.centroids.empty() ? Vec3::Zero() : t.centroids.back());
    }
    for (int c = 0; c < n_clusters; ++c) {
      Track& t = tracks[assign[c]];
      t.frames.back().points = cluster_pts[c];
      t.centroids.back() = cluster_c[c];
      t.last = cluster_c[c];
      t.observed += 1;
    }
  }

  std::vector<int> order;
  for (int t = 0; t < static_cast<int>(tracks.size()); ++t)
    if (tracks[t].observed >= params.min_track_frames) order.push_back(t);
  require(!order.empty(), Err::NoSubjectsFound, "no track reached the minimum length");
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (tracks[a].observed != tracks[b].observed) return tracks[a].observed > tracks[b].observed;
    if (tracks[a].first_seen != tracks[b].first_seen)
      return tracks[a].first_seen < tracks[b].first_seen;
    return a < b;
  });
  if (params.expected_subjects > 0 &&
      static_cast<int>(order.size()) > params.expected_subjects)
    order.resize(params.expected_subjects);
  // stable presentation order: by first appearance
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return tracks[a].first_seen != tracks[b].first_seen
                                           ? tracks[a].first_seen < tracks[b].first_seen
                                           : a < b; });

  std::vector<TrackedSubject> out;
  out.reserve(order.size());
  for (int i = 0; i < static_cast<int>(order.size()); ++i) {
    Track& t = tracks[order[i]];
    TrackedSubject s;
    s.track_id = i;
    s.frames = std::move(t.frames);
    s.centroid_track = std::move(t.centroids);
    s.observed_frames = t.observed;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace xreid
