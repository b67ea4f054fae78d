// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "xreid/radar_model.hpp"
#include "xreid/types.hpp"

namespace xreid {

inline constexpr int kNoise = -1;  // DBSCAN outlier label

// Keep points with z in [z_min, z_max] (device-relative, boundaries inclusive).
std::vector<RadarPoint> height_filter(const std::vector<RadarPoint>& pts, double z_min = -1.0,
                                      double z_max = 2.5);

// Deterministic DBSCAN. A point is core when >= min_pts points (itself
// included) lie within radius. Clusters are connected components of core
// points, numbered 0.. by ascending smallest core index; border points join
// the lowest-id reachable cluster; everything else is kNoise.
std::vector<int> dbscan(const std::vector<Vec3>& pts, double radius, int min_pts);

struct SegmentParams {
  double radius = 0.35;
  int min_pts = 3;
  double z_min = -1.0;
  double z_max = 2.5;
  double gate = 0.5;        // max centroid travel per frame for track association
  int min_track_frames = 3; // shorter tracks are discarded
  int expected_subjects = 0;  // 0 = keep all surviving tracks
};

struct TrackedSubject {
  int track_id = 0;
  std::vector<RadarFrame> frames;   // one cluster per input frame, possibly empty
  std::vector<Vec3> centroid_track; // per input frame; carries forward when unobserved
  int observed_frames = 0;
};

// Height filter + per-frame clustering + greedy nearest-centroid association.
// Throws NoSubjectsFound when no track reaches min_track_frames.
std::vector<TrackedSubject> segment_subjects(const std::vector<RadarFrame>& frames,
                                             const SegmentParams& params = {});

}  // namespace xreid
