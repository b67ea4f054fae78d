// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "xreid/types.hpp"

namespace xreid {

// Per-identity body shape and gait timing. Lengths in metres, cadence in
// steps/s, angles in radians.
struct GaitParams {
  double height = 1.7;
  double leg_length_ratio = 0.50;   // hip height / height
  double arm_length_ratio = 0.35;   // arm length / height
  double torso_radius = 0.14;
  double limb_radius = 0.06;
  double head_radius = 0.10;
  double stride_length = 0.7;       // per-step advance
  double cadence = 1.8;             // steps per second
  double arm_swing_amplitude = 0.5;
  double torso_sway_amplitude = 0.02;
  double phase_offset = 0.0;
  int identity_id = 0;
};

enum class WalkDirection { TowardSensor, AwayFromSensor };

struct WalkSpec {
  Vec3 start = Vec3(0.0, 5.5, 0.0);  // ground anchor of the walk origin (z = floor height)
  Vec3 heading = Vec3(0.0, -1.0, 0.0);  // horizontal unit direction of travel
  double duration = 2.5;
  double frame_rate = 10.0;
  double lateral_offset = 0.0;  // offset from the sensor mid-line (metadata)
  WalkDirection direction = WalkDirection::TowardSensor;
  std::uint64_t seed = 1;
  int mesh_points = 2500;  // surface samples per frame
};

struct MeshFrame {
  double t = 0.0;
  std::vector<LabeledPoint> points;
  Vec3 subject_center = Vec3::Zero();  // planar centroid, mid-extent height
};

struct MeshSequence {
  GaitParams gait;
  WalkSpec walk;
  std::vector<MeshFrame> frames;
};

// Deterministic walking-body synthesis: six capsule segments driven by
// sinusoidal joint angles at cadence/2; legs antiphase, arms antiphase with
// the ipsilateral leg; surface samples and 5 mm jitter drawn once per walk in
// segment-local coordinates. Throws InvalidParams on out-of-range inputs.
MeshSequence synth_subject(const GaitParams& gait, const WalkSpec& walk);

// n well-separated identities: any two differ by >= 5% (relative) in at least
// two of {height, stride_length, cadence, arm_swing_amplitude}. Throws
// CohortTooLarge for n > 200.
std::vector<GaitParams> make_cohort(int n, std::uint64_t seed);

void validate(const GaitParams& gait);
void validate(const WalkSpec& walk);

}  // namespace xreid
