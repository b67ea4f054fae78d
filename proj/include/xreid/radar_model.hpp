// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "xreid/signature.hpp"
#include "xreid/types.hpp"

namespace xreid {

inline constexpr double kSpeedOfLight = 299792458.0;

// FMCW device parameters. The sensor sits at the origin, boresight +y, up +z;
// azimuth_fov / elevation_fov are half-angle gates (|az| <= fov keeps a point).
struct RadarConfig {
  double start_freq_hz = 60.065e9;
  double bandwidth_hz = 3194.88e6;
  double chirp_slope_hz_per_s = 12.5e12;
  double chirp_duration_s = 3194.88e6 / 12.5e12;
  int chirps_per_frame = 32;
  double azimuth_fov_deg = 60.0;
  double elevation_fov_deg = 60.0;
  double angular_resolution_deg = 15.0;
  double frame_rate = 10.0;
  double mount_height = 0.9;
  double max_range = 15.0;
  double wavelength = kSpeedOfLight / (60.065e9 + 3194.88e6 / 2.0);
  double antenna_spacing = kSpeedOfLight / (60.065e9 + 3194.88e6 / 2.0) / 2.0;
  int max_points_per_frame = 64;

  double range_bin() const { return kSpeedOfLight / (2.0 * bandwidth_hz); }
  void check() const;  // InvalidParams on inconsistent derived quantities
};

struct NoiseParams {
  double ghost_rate = 1.0;      // Poisson mean of spurious points per frame
  double position_sigma = 0.02; // per-axis Gaussian position noise, metres
  double dropout = 0.1;         // per-point drop probability
};

struct RadarPoint {
  Vec3 position = Vec3::Zero();
  double intensity = 0.0;        // occupancy count of the source bin
  double radial_velocity = 0.0;  // m/s, negative = approaching
};

struct RadarFrame {
  double t = 0.0;
  std::vector<RadarPoint> points;
};

// beat-frequency to range, d = f_if * c * Tc / (2 B)
double range_from_if(double f_if_hz, const RadarConfig& cfg);

// phase-difference to azimuth, theta = asin(lambda * omega / (2 pi l));
// OutOfDomain when the argument leaves [-1, 1]
double aoa_from_phase(double omega_rad, const RadarConfig& cfg);

// One frame of simulated detections from a specular signature frame:
// in-FoV points are binned by (range bin, azimuth cell, elevation cell); each
// occupied bin emits its centroid with intensity = occupancy; radial velocity
// comes from the nearest matching bin centroid of the previous signature
// frame; then position noise, dropout, Poisson ghosts, and the top-K cap.
RadarFrame simulate_frame(const SignatureFrame& sig, const SignatureFrame* prev_sig,
                          const RadarConfig& cfg, const NoiseParams& noise, std::uint64_t seed);

std::vector<RadarFrame> simulate_sequence(const std::vector<SignatureFrame>& sig,
                                          const RadarConfig& cfg, const NoiseParams& noise,
                                          std::uint64_t seed);

}  // namespace xreid
