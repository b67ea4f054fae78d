// SPDX-License-Identifier: Apache-2.0
#include "xreid/signature.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "xreid/geometry.hpp"

namespace xreid {

Trajectory estimate_trajectory(const std::vector<std::vector<Vec3>>& frames) {
  Trajectory traj;
  for (const auto& f : frames) {
    if (f.empty()) continue;
    Vec3 c = Vec3::Zero();
    for (const Vec3& p : f) c += p;
    traj.per_frame_centers.push_back(c / static_cast<double>(f.size()));
  }
  require(traj.per_frame_centers.size() >= 3, Err::InvalidParams,
          "trajectory needs >= 3 non-empty frames");

  traj.origin = traj.per_frame_centers.front();
  Eigen::Vector2d net = (traj.per_frame_centers.back() - traj.origin).head<2>();
  traj.displacement = net.norm();
  require(traj.displacement >= 0.2, Err::SubjectStationary,
          "horizontal displacement below 0.2 m");

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const Vec3& c : traj.per_frame_centers) mean += c.head<2>();
  mean /= static_cast<double>(traj.per_frame_centers.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec3& c : traj.per_frame_centers) {
    Eigen::Vector2d d = c.head<2>() - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Eigen::Vector2d dir = eig.eigenvectors().col(1);  // leading axis
  if (dir.dot(net) < 0.0) dir = -dir;
  traj.direction = Vec3(dir.x(), dir.y(), 0.0).normalized();
  return traj;
}

RigidTransform mesh_to_radar_transform(const MeshSequence& mesh, const Trajectory& radar_traj) {
  std::vector<std::vector<Vec3>> clouds;
  clouds.reserve(mesh.frames.size());
  for (const MeshFrame& f : mesh.frames) {
    std::vector<Vec3> pts;
    pts.reserve(f.points.size());
    for (const LabeledPoint& p : f.points) pts.push_back(p.position);
    clouds.push_back(std::move(pts));
  }
  Trajectory mesh_traj = estimate_trajectory(clouds);
  double ang = std::atan2(
      mesh_traj.direction.x() * radar_traj.direction.y() -
          mesh_traj.direction.y() * radar_traj.direction.x(),
      mesh_traj.direction.head<2>().dot(radar_traj.direction.head<2>()));
  RigidTransform tf = RigidTransform::rot_z(ang);
  tf.t = radar_traj.origin - tf.R * mesh_traj.origin;
  return tf;
}

MeshSequence align_mesh_to_radar(const MeshSequence& mesh, const Trajectory& radar_traj) {
  RigidTransform tf = mesh_to_radar_transform(mesh, radar_traj);
  MeshSequence out;
  out.gait = mesh.gait;
  out.walk = mesh.walk;
  out.frames.reserve(mesh.frames.size());
  for (const MeshFrame& f : mesh.frames) {
    MeshFrame g;
    g.t = f.t;
    g.points = apply_transform(tf, f.points);
    g.subject_center = tf.apply(f.subject_center);
    out.frames.push_back(std::move(g));
  }
  return out;
}

bool is_specular(const Vec3& position, const Vec3& normal, const Vec3& radar_pos,
                 double epsilon_rad) {
  require(epsilon_rad > 0.0 && epsilon_rad <= 3.15, Err::InvalidParams,
          "epsilon must be in (0, pi]");
  Vec3 to_radar = radar_pos - position;
  require(to_radar.norm() > 1e-12, Err::InvalidParams, "point coincides with the sensor");
  return angle_between(normal, to_radar) < epsilon_rad;
}

SignatureFrame synthesize_signature(const MeshFrame& frame, const Vec3& radar_pos,
                                    double epsilon_rad) {
  require(frame.points.size() >= 7, Err::DegenerateNeighborhood,
          "frame has fewer than 7 points");
  std::vector<Vec3> cloud;
  cloud.reserve(frame.points.size());
  for (const LabeledPoint& p : frame.points) cloud.push_back(p.position);
  GridIndex grid(cloud);

  SignatureFrame out;
  out.t = frame.t;
  std::vector<Vec3> nb;
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    std::vector<int> knn = grid.k_nearest(cloud[i], 7);
    nb.clear();
    for (int j : knn) {
      if (j == i) continue;
      nb.push_back(cloud[j]);
      if (nb.size() == 6) break;
    }
    Vec3 n = estimate_normal(nb, cloud[i]);
    if (n.dot(cloud[i] - frame.subject_center) < 0.0) n = -n;
    if (is_specular(cloud[i], n, radar_pos, epsilon_rad)) out.points.push_back(frame.points[i]);
  }
  return out;
}

std::vector<SignatureFrame> synthesize_sequence(const MeshSequence& mesh, const Vec3& radar_pos,
                                                double epsilon_rad) {
  std::vector<SignatureFrame> out;
  out.reserve(mesh.frames.size());
  for (const MeshFrame& f : mesh.frames)
    out.push_back(synthesize_signature(f, radar_pos, epsilon_rad));
  return out;
}

}  // namespace xreid
