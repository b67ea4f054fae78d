// SPDX-License-Identifier: Apache-2.0
#include "xreid/radar_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "xreid/rng.hpp"

namespace xreid {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kVelocityGate = 0.5;  // max centroid travel per frame for a bin match

double deg2rad(double d) { return d * kPi / 180.0; }

struct BinStats {
  Vec3 sum = Vec3::Zero();
  int count = 0;
  Vec3 centroid() const { return sum / static_cast<double>(count); }
};

using BinKey = std::tuple<int, int, int>;

// ordered map keeps emission order independent of hashing
std::map<BinKey, BinStats> bin_points(const SignatureFrame& sig, const RadarConfig& cfg) {
  const double az_fov = deg2rad(cfg.azimuth_fov_deg);
  const double el_fov = deg2rad(cfg.elevation_fov_deg);
  const double res = deg2rad(cfg.angular_resolution_deg);
  const double rbin = cfg.range_bin();
  std::map<BinKey, BinStats> bins;
  for (const LabeledPoint& p : sig.points) {
    double range = p.position.norm();
    if (range <= 1e-9 || range > cfg.max_range) continue;
    double az = std::atan2(p.position.x(), p.position.y());
    double el = std::atan2(p.position.z(), p.position.head<2>().norm());
    if (std::abs(az) > az_fov || std::abs(el) > el_fov) continue;
    BinKey key{static_cast<int>(std::floor(range / rbin)),
               static_cast<int>(std::floor((az + az_fov) / res)),
               static_cast<int>(std::floor((el + el_fov) / res))};
    BinStats& b = bins[key];
    b.sum += p.position;
    b.count += 1;
  }
  return bins;
}

}  // namespace

void RadarConfig::check() const {
  require(start_freq_hz > 0.0 && bandwidth_hz > 0.0 && chirp_slope_hz_per_s > 0.0,
          Err::InvalidParams, "radar frequencies must be positive");
  double derived_b = chirp_slope_hz_per_s * chirp_duration_s;
  require(std::abs(derived_b - bandwidth_hz) <= 1e-6 * bandwidth_hz, Err::InvalidParams,
          "bandwidth != slope * chirp duration");
  double centre = start_freq_hz + bandwidth_hz / 2.0;
  require(std::abs(wavelength - kSpeedOfLight / centre) <= 0.01 * wavelength, Err::InvalidParams,
          "wavelength inconsistent with the sweep centre frequency");
  require(angular_resolution_deg > 0.0 && azimuth_fov_deg > 0.0 && elevation_fov_deg > 0.0,
          Err::InvalidParams, "angular parameters must be positive");
  require(frame_rate > 0.0 && max_range > 0.0 && max_points_per_frame >= 1 &&
              chirps_per_frame >= 1 && antenna_spacing > 0.0,
          Err::InvalidParams, "frame parameters must be positive");
}

double range_from_if(double f_if_hz, const RadarConfig& cfg) {
  cfg.check();
  require(std::isfinite(f_if_hz) && f_if_hz >= 0.0, Err::OutOfDomain,
          "beat frequency must be >= 0");
  return f_if_hz * kSpeedOfLight * cfg.chirp_duration_s / (2.0 * cfg.bandwidth_hz);
}

double aoa_from_phase(double omega_rad, const RadarConfig& cfg) {
  cfg.check();
  require(std::isfinite(omega_rad), Err::OutOfDomain, "phase must be finite");
  double arg = cfg.wavelength * omega_rad / (2.0 * kPi * cfg.antenna_spacing);
  require(arg >= -1.0 && arg <= 1.0, Err::OutOfDomain, "phase outside the unambiguous range");
  return std::asin(arg);
}

RadarFrame simulate_frame(const SignatureFrame& sig, const SignatureFrame* prev_sig,
                          const RadarConfig& cfg, const NoiseParams& noise, std::uint64_t seed) {
  cfg.check();
  require(noise.dropout >= 0.0 && noise.dropout < 1.0 && noise.ghost_rate >= 0.0 &&
              noise.position_sigma >= 0.0,
          Err::InvalidParams, "noise parameters out of range");

  RadarFrame out;
  out.t = sig.t;
  auto bins = bin_points(sig, cfg);

  std::vector<Vec3> prev_centroids;
  if (prev_sig != nullptr)
    for (auto& [key, b] : bin_points(*prev_sig, cfg)) prev_centroids.push_back(b.centroid());

  std::vector<RadarPoint> emitted;
  emitted.reserve(bins.size());
  for (auto& [key, b] : bins) {
    RadarPoint p;
    p.position = b.centroid();
    p.intensity = static_cast<double>(b.count);
    p.radial_velocity = 0.0;
    double best = kVelocityGate;
    for (const Vec3& q : prev_centroids) {
      double d = (p.position - q).norm();
      if (d < best) {
        best = d;
        p.radial_velocity = (p.position.norm() - q.norm()) * cfg.frame_rate;
      }
    }
    emitted.push_back(p);
  }

  Rng rng(seed);
  std::vector<RadarPoint> pts;
  pts.reserve(emitted.size() + 8);
  for (RadarPoint p : emitted) {
    p.position += Vec3(rng.gauss(0.0, noise.position_sigma), rng.gauss(0.0, noise.position_sigma),
                       rng.gauss(0.0, noise.position_sigma));
    if (rng.uniform() >= noise.dropout) pts.push_back(p);
  }

  const double az_fov = deg2rad(cfg.azimuth_fov_deg);
  const double el_fov = deg2rad(cfg.elevation_fov_deg);
  int ghosts = rng.poisson(noise.ghost_rate);
  for (int g = 0; g < ghosts; ++g) {
    double az = rng.uniform(-az_fov, az_fov);
    double el = rng.uniform(-el_fov, el_fov);
    double r = rng.uniform(0.0, cfg.max_range);
    RadarPoint p;
    p.position = Vec3(r * std::cos(el) * std::sin(az), r * std::cos(el) * std::cos(az),
                      r * std::sin(el));
    p.intensity = emitted.empty()
                      ? 1.0
                      : emitted[static_cast<std::size_t>(rng.index(emitted.size()))].intensity;
    p.radial_velocity = 0.0;
    pts.push_back(p);
  }

  if (static_cast<int>(pts.size()) > cfg.max_points_per_frame) {
    std::stable_sort(pts.begin(), pts.end(), [](const RadarPoint& a, const RadarPoint& b) {
      return a.intensity > b.intensity;
    });
    pts.resize(cfg.max_points_per_frame);
  }
  out.points = std::move(pts);
  return out;
}

std::vector<RadarFrame> simulate_sequence(const std::vector<SignatureFrame>& sig,
                                          const RadarConfig& cfg, const NoiseParams& noise,
                                          std::uint64_t seed) {
  std::vector<RadarFrame> out;
  out.reserve(sig.size());
  for (std::size_t t = 0; t < sig.size(); ++t) {
    const SignatureFrame* prev = (t > 0) ? &sig[t - 1] : nullptr;
    out.push_back(simulate_frame(sig[t], prev, cfg, noise, mix_seed(seed, t)));
  }
  return out;
}

}  // namespace xreid
