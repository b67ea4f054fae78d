// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "xreid/types.hpp"

namespace xreid {

// ============================== rigid transforms ==============================

struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform rot_z(double angle_rad, const Vec3& translation = Vec3::Zero());

  Vec3 apply(const Vec3& p) const { return R * p + t; }
  RigidTransform inverse() const;
  // composition: (a * b)(p) == a(b(p))
  RigidTransform operator*(const RigidTransform& rhs) const;

  // throws InvalidParams unless R is orthonormal with det +1 (1e-9)
  void check() const;
};

std::vector<Vec3> apply_transform(const RigidTransform& tf, const std::vector<Vec3>& pts);
std::vector<LabeledPoint> apply_transform(const RigidTransform& tf,
                                          const std::vector<LabeledPoint>& pts);

// ================================== queries ==================================

// Exact k nearest neighbours of query within cloud, ascending distance,
// distance ties broken by ascending index. k larger than the cloud clamps.
std::vector<int> k_nearest(const std::vector<Vec3>& cloud, const Vec3& query, int k);

// Uniform-grid accelerator with semantics identical to k_nearest.
class GridIndex {
 public:
  explicit GridIndex(const std::vector<Vec3>& cloud);
  std::vector<int> k_nearest(const Vec3& query, int k) const;
  int size() const { return static_cast<int>(pts_.size()); }

 private:
  std::vector<Vec3> pts_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1, nz_ = 1;
  std::vector<std::vector<int>> cells_;
  int cell_of(const Vec3& p) const;
};

// ================================== normals ==================================

// Unit normal of the least-squares plane through the neighbourhood (smallest
// covariance eigenvector). Sign is canonical (largest-|component| positive);
// callers orient it. Throws DegenerateNeighborhood for < 3 points or a
// collinear/coincident neighbourhood. query participates only in error text.
Vec3 estimate_normal(const std::vector<Vec3>& neighborhood, const Vec3& query);

// angle in [0, pi] between two nonzero vectors
double angle_between(const Vec3& a, const Vec3& b);

}  // namespace xreid
