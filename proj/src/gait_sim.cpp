// SPDX-License-Identifier: Apache-2.0
#include "xreid/gait_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Geometry>

#include "xreid/rng.hpp"

namespace xreid {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kJitterSigma = 0.005;

void check_range(double v, double lo, double hi, const char* name) {
  require(std::isfinite(v) && v >= lo && v <= hi, Err::InvalidParams, std::string(name));
}

// One surface sample in segment-local coordinates. The segment is a capsule
// with axis from a to b and radius r; u parameterises the axis, (cs, sn) the
// circumferential direction, cap_dir a hemisphere direction for end caps.
struct Sample {
  BodyPart part;
  int segment;       // index into the posed segment list
  int kind;          // 0 cylinder, 1 cap at a, 2 cap at b
  double u, cs, sn;  // cylinder parameters
  Vec3 cap_dir;      // local hemisphere direction, z along the axis
  Vec3 jitter;       // fixed local offset, N(0, sigma^2)
};

struct Segment {
  Vec3 a, b;  // axis endpoints (a = proximal)
  double r;
};

// orthonormal frame with ez along the axis
void axis_frame(const Vec3& a, const Vec3& b, Vec3& ex, Vec3& ey, Vec3& ez) {
  ez = (b - a).normalized();
  Vec3 ref = std::abs(ez.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  ex = ref.cross(ez).normalized();
  ey = ez.cross(ex);
}

Vec3 place(const Sample& s, const Segment& seg) {
  Vec3 ex, ey, ez;
  axis_frame(seg.a, seg.b, ex, ey, ez);
  Vec3 p;
  if (s.kind == 0) {
    p = seg.a + s.u * (seg.b - seg.a) + seg.r * (s.cs * ex + s.sn * ey);
  } else {
    const Vec3& end = (s.kind == 1) ? seg.a : seg.b;
    double sign = (s.kind == 1) ? -1.0 : 1.0;
    Vec3 d = s.cap_dir.x() * ex + s.cap_dir.y() * ey + sign * s.cap_dir.z() * ez;
    p = end + seg.r * d;
  }
  return p + s.jitter.x() * ex + s.jitter.y() * ey + s.jitter.z() * ez;
}

}  // namespace

void validate(const GaitParams& g) {
  check_range(g.height, 1.4, 2.0, "height out of [1.4, 2.0]");
  check_range(g.leg_length_ratio, 0.40, 0.60, "leg_length_ratio out of [0.40, 0.60]");
  check_range(g.arm_length_ratio, 0.25, 0.45, "arm_length_ratio out of [0.25, 0.45]");
  check_range(g.torso_radius, 0.08, 0.25, "torso_radius out of [0.08, 0.25]");
  check_range(g.limb_radius, 0.03, 0.10, "limb_radius out of [0.03, 0.10]");
  check_range(g.head_radius, 0.07, 0.14, "head_radius out of [0.07, 0.14]");
  check_range(g.stride_length, 0.3, 1.0, "stride_length out of [0.3, 1.0]");
  check_range(g.cadence, 1.2, 2.6, "cadence out of [1.2, 2.6]");
  check_range(g.arm_swing_amplitude, 0.0, 0.9, "arm_swing_amplitude out of [0.0, 0.9]");
  check_range(g.torso_sway_amplitude, 0.0, 0.10, "torso_sway_amplitude out of [0.0, 0.10]");
  require(std::isfinite(g.phase_offset), Err::InvalidParams, "phase_offset not finite");
}

void validate(const WalkSpec& w) {
  require(std::isfinite(w.duration) && w.duration > 0.0, Err::InvalidParams, "duration <= 0");
  require(std::isfinite(w.frame_rate) && w.frame_rate > 0.0, Err::InvalidParams,
          "frame_rate <= 0");
  require(w.heading.head<2>().norm() > 1e-12, Err::InvalidParams,
          "heading must have a horizontal component");
  require(std::abs(w.heading.z()) < 1e-9 * std::max(1.0, w.heading.norm()), Err::InvalidParams,
          "heading must be horizontal");
  require(w.mesh_points >= 200 && w.mesh_points <= 20000, Err::InvalidParams,
          "mesh_points out of [200, 20000]");
}

MeshSequence synth_subject(const GaitParams& gait, const WalkSpec& walk) {
  validate(gait);
  validate(walk);

  const double h = gait.height;
  const double leg_len = gait.leg_length_ratio * h;  // hip height
  const double arm_len = gait.arm_length_ratio * h;
  const double neck_z = h - 2.0 * gait.head_radius;
  const double hip_z = leg_len;
  require(neck_z > hip_z + 0.05, Err::InvalidParams, "torso would be degenerate");
  const double shoulder_w = gait.torso_radius + gait.limb_radius;
  const double hip_w = 0.5 * gait.torso_radius;

  // walk frame: fwd horizontal, right = fwd x up, up = +z
  Vec3 fwd = Vec3(walk.heading.x(), walk.heading.y(), 0.0).normalized();
  Vec3 up(0.0, 0.0, 1.0);
  Vec3 right = fwd.cross(up);

  // per-segment surface areas drive the fixed sample allocation
  struct SegSpec {
    BodyPart part;
    double len, r;
  };
  const std::array<SegSpec, 6> specs = {{
      {BodyPart::Head, 0.0, gait.head_radius},
      {BodyPart::Torso, neck_z - hip_z, gait.torso_radius},
      {BodyPart::LeftArm, arm_len, gait.limb_radius},
      {BodyPart::RightArm, arm_len, gait.limb_radius},
      {BodyPart::LeftLeg, leg_len, gait.limb_radius},
      {BodyPart::RightLeg, leg_len, gait.limb_radius},
  }};
  std::array<double, 6> cyl_area{}, cap_area{};
  double total = 0.0;
  for (int i = 0; i < 6; ++i) {
    cyl_area[i] = kTwoPi * specs[i].r * specs[i].len;
    cap_area[i] = 2.0 * kTwoPi * specs[i].r * specs[i].r;  // both hemispheres
    total += cyl_area[i] + cap_area[i];
  }
  std::array<int, 6> count{};
  int assigned = 0;
  for (int i = 0; i < 6; ++i) {
    count[i] = std::max(8, static_cast<int>(std::lround(
                               walk.mesh_points * (cyl_area[i] + cap_area[i]) / total)));
    assigned += count[i];
  }
  count[1] += walk.mesh_points - assigned;  // torso absorbs rounding residue
  count[1] = std::max(count[1], 8);

  // fixed body-local template, drawn once per walk
  Rng rng(walk.seed);
  std::vector<Sample> tmpl;
  tmpl.reserve(static_cast<std::size_t>(walk.mesh_points) + 64);
  for (int i = 0; i < 6; ++i) {
    double p_cap = cap_area[i] / (cyl_area[i] + cap_area[i]);
    for (int k = 0; k < count[i]; ++k) {
      Sample s;
      s.part = specs[i].part;
      s.segment = i;
      if (specs[i].len <= 1e-12 || rng.uniform() < p_cap) {
        // uniform on a hemisphere (z >= 0 in cap coordinates), split across ends
        double z = rng.uniform();
        double phi = rng.uniform(0.0, kTwoPi);
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        s.kind = rng.uniform() < 0.5 ? 1 : 2;
        s.cap_dir = Vec3(rho * std::cos(phi), rho * std::sin(phi), z);
        s.u = 0.0;
        s.cs = 1.0;
        s.sn = 0.0;
      } else {
        s.kind = 0;
        s.u = rng.uniform();
        double phi = rng.uniform(0.0, kTwoPi);
        s.cs = std::cos(phi);
        s.sn = std::sin(phi);
        s.cap_dir = Vec3::Zero();
      }
      s.jitter = Vec3(rng.gauss(0.0, kJitterSigma), rng.gauss(0.0, kJitterSigma),
                      rng.gauss(0.0, kJitterSigma));
      tmpl.push_back(s);
    }
  }

  const double speed = gait.stride_length * gait.cadence;
  const double omega = kTwoPi * gait.cadence / 2.0;  // gait cycle frequency
  const double theta_leg_max = std::asin(std::min(0.98, gait.stride_length / (2.0 * leg_len)));
  const int n_frames = std::max(1, static_cast<int>(std::lround(walk.duration * walk.frame_rate)));

  MeshSequence seq;
  seq.gait = gait;
  seq.walk = walk;
  seq.frames.reserve(n_frames);

  for (int f = 0; f < n_frames; ++f) {
    double t = static_cast<double>(f) / walk.frame_rate;
    double phase = omega * t + gait.phase_offset;
    Vec3 line = walk.start + speed * t * fwd;  // ground point under the body centre
    Vec3 sway = gait.torso_sway_amplitude * std::sin(phase) * right;

    double th_l_leg = theta_leg_max * std::sin(phase);
    double th_r_leg = theta_leg_max * std::sin(phase + kTwoPi / 2.0);
    double th_l_arm = gait.arm_swing_amplitude * std::sin(phase + kTwoPi / 2.0);
    double th_r_arm = gait.arm_swing_amplitude * std::sin(phase);

    auto leg = [&](double side, double th) {
      Vec3 hip = line + side * hip_w * right + hip_z * up;
      // foot follows the commanded hip angle but stays on the ground plane
      Vec3 foot = line + side * hip_w * right + (leg_len * std::sin(th)) * fwd +
                  gait.limb_radius * up;
      return Segment{hip, foot, gait.limb_radius};
    };
    auto arm = [&](double side, double th) {
      Vec3 shoulder = line + sway + side * shoulder_w * right + neck_z * up;
      Vec3 dir = std::sin(th) * fwd - std::cos(th) * up;
      return Segment{shoulder, shoulder + arm_len * dir, gait.limb_radius};
    };

    std::array<Segment, 6> segs;
    Vec3 head_c = line + sway + (h - gait.head_radius) * up;
    segs[0] = {head_c, head_c + 1e-9 * up, gait.head_radius};
    segs[1] = {line + sway + hip_z * up, line + sway + neck_z * up, gait.torso_radius};
    segs[2] = arm(-1.0, th_l_arm);
    segs[3] = arm(+1.0, th_r_arm);
    segs[4] = leg(-1.0, th_l_leg);
    segs[5] = leg(+1.0, th_r_leg);

    MeshFrame frame;
    frame.t = t;
    frame.points.reserve(tmpl.size());
    Vec3 sum = Vec3::Zero();
    double zmin = 1e300, zmax = -1e300;
    for (const Sample& s : tmpl) {
      Vec3 p = place(s, segs[s.segment]);
      frame.points.push_back({p, s.part});
      sum += p;
      zmin = std::min(zmin, p.z());
      zmax = std::max(zmax, p.z());
    }
    // planar centroid, mid-extent height: the point centroid rides above
    // mid-height (legs are a small area share), which would push the feet
    // outside a centred bounding box for tall subjects
    frame.subject_center = sum / static_cast<double>(frame.points.size());
    frame.subject_center.z() = 0.5 * (zmin + zmax);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

// ================================== cohorts ==================================

namespace {

// geometric level grids; consecutive levels differ by > 5% so distinct levels
// always satisfy the relative-separation test
std::vector<double> levels(double lo, double hi, double factor) {
  std::vector<double> out;
  for (double v = lo; v <= hi * (1.0 + 1e-12); v *= factor) out.push_back(v);
  return out;
}

}  // namespace

std::vector<GaitParams> make_cohort(int n, std::uint64_t seed) {
  require(n >= 2, Err::InvalidParams, "cohort size must be >= 2");
  require(n <= 200, Err::CohortTooLarge, "cohort separation is only guaranteed up to 200");

  const std::vector<double> h_lv = levels(1.45, 1.95, 1.06);    // 6 levels
  const std::vector<double> s_lv = levels(0.40, 0.95, 1.10);    // 10 levels
  const std::vector<double> c_lv = levels(1.30, 2.40, 1.08);    // 8 levels
  const std::vector<double> a_lv = levels(0.25, 0.85, 1.12);    // 11 levels
  const int H = static_cast<int>(h_lv.size());
  const int S = static_cast<int>(s_lv.size());
  const int C = static_cast<int>(c_lv.size());
  const int A = static_cast<int>(a_lv.size());

  // codewords (h, s, c, checksum) have pairwise Hamming distance >= 2, so any
  // two identities differ in >= 2 of the four gait fields by >= 5%
  std::vector<std::array<int, 4>> codes;
  codes.reserve(static_cast<std::size_t>(H) * S * C);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int c = 0; c < C; ++c) codes.push_back({h, s, c, (h + s + c) % A});

  Rng rng(mix_seed(seed, 0xc004ULL));
  rng.shuffle(codes);

  // guarantee height coverage for mid-size cohorts (short and tall present)
  if (n >= 3) {
    auto ensure = [&](auto pred, int slot) {
      for (int i = 0; i < n; ++i)
        if (pred(codes[i])) return;
      for (int i = n; i < static_cast<int>(codes.size()); ++i)
        if (pred(codes[i])) {
          std::swap(codes[slot], codes[i]);
          return;
        }
    };
    ensure([](const std::array<int, 4>& c) { return c[0] <= 1; }, 0);
    ensure([&](const std::array<int, 4>& c) { return c[0] == H - 1; }, 1);
  }

  std::vector<GaitParams> cohort;
  cohort.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& code = codes[i];
    GaitParams g;
    auto jit = [&](double v) { return v * (1.0 + rng.uniform(-0.002, 0.002)); };
    g.height = jit(h_lv[code[0]]);
    g.stride_length = jit(s_lv[code[1]]);
    g.cadence = jit(c_lv[code[2]]);
    g.arm_swing_amplitude = jit(a_lv[code[3]]);
    g.leg_length_ratio = rng.uniform(0.47, 0.53);
    g.arm_length_ratio = rng.uniform(0.32, 0.38);
    g.torso_radius = rng.uniform(0.12, 0.17);
    g.limb_radius = rng.uniform(0.050, 0.070);
    g.head_radius = rng.uniform(0.085, 0.110);
    g.torso_sway_amplitude = rng.uniform(0.010, 0.040);
    g.phase_offset = rng.uniform(0.0, kTwoPi);
    g.identity_id = i;
    validate(g);
    cohort.push_back(g);
  }
  return cohort;
}

}  // namespace xreid
