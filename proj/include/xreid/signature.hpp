// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "xreid/gait_sim.hpp"
#include "xreid/geometry.hpp"
#include "xreid/types.hpp"

namespace xreid {

struct SignatureFrame {
  double t = 0.0;
  std::vector<LabeledPoint> points;  // subset of the source mesh frame
};

struct Trajectory {
  Vec3 origin = Vec3::Zero();      // first frame centroid
  Vec3 direction = Vec3::Zero();   // horizontal unit walking direction
  double displacement = 0.0;       // horizontal first-to-last centroid distance
  std::vector<Vec3> per_frame_centers;
};

// Walking line from per-frame centroids (principal horizontal axis, signed by
// net displacement). Needs >= 3 non-empty frames (InvalidParams) and >= 0.2 m
// of horizontal displacement (SubjectStationary).
Trajectory estimate_trajectory(const std::vector<std::vector<Vec3>>& frames);

// Single rigid transform (yaw + translation) mapping the mesh walk onto the
// radar trajectory: first centroids coincide, walking directions align.
MeshSequence align_mesh_to_radar(const MeshSequence& mesh, const Trajectory& radar_traj);
RigidTransform mesh_to_radar_transform(const MeshSequence& mesh, const Trajectory& radar_traj);

// The specular acceptance test: angle between the outward surface normal and
// the point-to-sensor direction is below epsilon.
bool is_specular(const Vec3& position, const Vec3& normal, const Vec3& radar_pos,
                 double epsilon_rad);

// Signature points of one mesh frame: normals estimated from the 6 nearest
// neighbours, oriented away from subject_center, tested against the sensor
// direction. Throws DegenerateNeighborhood for frames with < 7 points.
SignatureFrame synthesize_signature(const MeshFrame& frame, const Vec3& radar_pos,
                                    double epsilon_rad);

std::vector<SignatureFrame> synthesize_sequence(const MeshSequence& mesh, const Vec3& radar_pos,
                                                double epsilon_rad);

}  // namespace xreid
