// SPDX-License-Identifier: Apache-2.0
#include "xreid/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace xreid {

const char* err_name(Err e) {
  switch (e) {
    case Err::InvalidParams: return "InvalidParams";
    case Err::DegenerateNeighborhood: return "DegenerateNeighborhood";
    case Err::CohortTooLarge: return "CohortTooLarge";
    case Err::SubjectStationary: return "SubjectStationary";
    case Err::OutOfDomain: return "OutOfDomain";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::EmptyFrame: return "EmptyFrame";
    case Err::EmptySequence: return "EmptySequence";
    case Err::EmptyInput: return "EmptyInput";
    case Err::InsufficientIdentities: return "InsufficientIdentities";
    case Err::NoSubjectsFound: return "NoSubjectsFound";
    case Err::QueryIdentityMissing: return "QueryIdentityMissing";
    case Err::SizeLimitExceeded: return "SizeLimitExceeded";
    case Err::IoError: return "IoError";
    case Err::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

// ============================== rigid transforms ==============================

RigidTransform RigidTransform::rot_z(double angle_rad, const Vec3& translation) {
  RigidTransform tf;
  double c = std::cos(angle_rad), s = std::sin(angle_rad);
  tf.R << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  tf.t = translation;
  return tf;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.R = R.transpose();
  inv.t = -(inv.R * t);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.R = R * rhs.R;
  out.t = R * rhs.t + t;
  return out;
}

void RigidTransform::check() const {
  require(R.allFinite() && t.allFinite(), Err::InvalidParams, "transform has non-finite entries");
  double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  require(ortho <= 1e-9, Err::InvalidParams, "rotation is not orthonormal");
  require(R.determinant() > 0.0, Err::InvalidParams, "rotation is a reflection");
}

std::vector<Vec3> apply_transform(const RigidTransform& tf, const std::vector<Vec3>& pts) {
  tf.check();
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(tf.apply(p));
  return out;
}

std::vector<LabeledPoint> apply_transform(const RigidTransform& tf,
                                          const std::vector<LabeledPoint>& pts) {
  tf.check();
  std::vector<LabeledPoint> out;
  out.reserve(pts.size());
  for (const LabeledPoint& p : pts) out.push_back({tf.apply(p.position), p.part});
  return out;
}

// ================================== queries ==================================

namespace {

std::vector<int> pick_k(std::vector<std::pair<double, int>>& cand, int k) {
  std::sort(cand.begin(), cand.end());
  if (static_cast<int>(cand.size()) > k) cand.resize(k);
  std::vector<int> idx;
  idx.reserve(cand.size());
  for (auto& [d2, i] : cand) idx.push_back(i);
  return idx;
}

}  // namespace

std::vector<int> k_nearest(const std::vector<Vec3>& cloud, const Vec3& query, int k) {
  require(k >= 1, Err::InvalidParams, "k must be >= 1");
  std::vector<std::pair<double, int>> cand;
  cand.reserve(cloud.size());
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i)
    cand.emplace_back((cloud[i] - query).squaredNorm(), i);
  return pick_k(cand, k);
}

GridIndex::GridIndex(const std::vector<Vec3>& cloud) : pts_(cloud) {
  if (pts_.empty()) return;
  Vec3 lo = pts_[0], hi = pts_[0];
  for (const Vec3& p : pts_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vec3 ext = hi - lo;
  double vol = std::max(ext.x(), 1e-6) * std::max(ext.y(), 1e-6) * std::max(ext.z(), 1e-6);
  // ~8 points per cell on average; floors keep the grid small for thin clouds
  cell_ = std::cbrt(vol * 8.0 / static_cast<double>(pts_.size()));
  cell_ = std::max({cell_, ext.maxCoeff() / 96.0, 1e-9});
  origin_ = lo;
  nx_ = std::max(1, static_cast<int>(ext.x() / cell_) + 1);
  ny_ = std::max(1, static_cast<int>(ext.y() / cell_) + 1);
  nz_ = std::max(1, static_cast<int>(ext.z() / cell_) + 1);
  cells_.resize(static_cast<std::size_t>(nx_) * ny_ * nz_);
  for (int i = 0; i < static_cast<int>(pts_.size()); ++i)
    cells_[cell_of(pts_[i])].push_back(i);
}

int GridIndex::cell_of(const Vec3& p) const {
  auto clampi = [](int v, int hi) { return std::min(std::max(v, 0), hi - 1); };
  int cx = clampi(static_cast<int>((p.x() - origin_.x()) / cell_), nx_);
  int cy = clampi(static_cast<int>((p.y() - origin_.y()) / cell_), ny_);
  int cz = clampi(static_cast<int>((p.z() - origin_.z()) / cell_), nz_);
  return (cx * ny_ + cy) * nz_ + cz;
}

std::vector<int> GridIndex::k_nearest(const Vec3& query, int k) const {
  require(k >= 1, Err::InvalidParams, "k must be >= 1");
  if (pts_.empty()) return {};
  auto clampi = [](int v, int hi) { return std::min(std::max(v, 0), hi - 1); };
  int cx = clampi(static_cast<int>((query.x() - origin_.x()) / cell_), nx_);
  int cy = clampi(static_cast<int>((query.y() - origin_.y()) / cell_), ny_);
  int cz = clampi(static_cast<int>((query.z() - origin_.z()) / cell_), nz_);

  std::vector<std::pair<double, int>> cand;
  int max_ring = std::max({nx_, ny_, nz_});
  for (int r = 0; r <= max_ring; ++r) {
    // a cell at Chebyshev ring r is at least (r-1)*cell_ away from the query,
    // so once the k-th best distance is below that bound the search is exact
    if (static_cast<int>(cand.size()) >= k) {
      std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
      double dk = std::sqrt(cand[k - 1].first);
      if (static_cast<double>(r - 1) * cell_ > dk) break;
    }
    bool any_cell = false;
    for (int dx = -r; dx <= r; ++dx) {
      int x = cx + dx;
      if (x < 0 || x >= nx_) continue;
      for (int dy = -r; dy <= r; ++dy) {
        int y = cy + dy;
        if (y < 0 || y >= ny_) continue;
        for (int dz = -r; dz <= r; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
          int z = cz + dz;
          if (z < 0 || z >= nz_) continue;
          any_cell = true;
          for (int i : cells_[(static_cast<std::size_t>(x) * ny_ + y) * nz_ + z])
            cand.emplace_back((pts_[i] - query).squaredNorm(), i);
        }
      }
    }
    if (!any_cell && r > max_ring) break;
  }
  return pick_k(cand, k);
}

// ================================== normals ==================================

Vec3 estimate_normal(const std::vector<Vec3>& neighborhood, const Vec3& query) {
  require(neighborhood.size() >= 3, Err::DegenerateNeighborhood,
          "need >= 3 neighbourhood points near (" + std::to_string(query.x()) + "," +
              std::to_string(query.y()) + "," + std::to_string(query.z()) + ")");
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : neighborhood) mean += p;
  mean /= static_cast<double>(neighborhood.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : neighborhood) {
    Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig;
  eig.computeDirect(cov);  // closed-form 3x3 path; this runs millions of times
  // eigenvalues ascending; rank < 2 means no unique plane
  double l1 = eig.eigenvalues()[1], l2 = eig.eigenvalues()[2];
  require(l1 > 1e-12 * l2 && l2 > 0.0, Err::DegenerateNeighborhood,
          "collinear or coincident neighbourhood");
  Vec3 n = eig.eigenvectors().col(0);
  int dominant = 0;
  n.cwiseAbs().maxCoeff(&dominant);
  if (n[dominant] < 0.0) n = -n;
  return n.normalized();
}

double angle_between(const Vec3& a, const Vec3& b) {
  double na = a.norm(), nb = b.norm();
  require(na > 0.0 && nb > 0.0, Err::InvalidParams, "angle with zero vector");
  double c = a.dot(b) / (na * nb);
  c = std::min(1.0, std::max(-1.0, c));
  return std::acos(c);
}

}  // namespace xreid
