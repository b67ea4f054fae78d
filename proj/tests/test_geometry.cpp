// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <vector>

#include "xreid/geometry.hpp"
#include "xreid/rng.hpp"

using namespace xreid;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent oracle: full sort by (distance, index) with plain loops.
std::vector<int> brute_knn(const std::vector<Vec3>& cloud, const Vec3& q, int k) {
  std::vector<std::pair<double, int>> d;
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i)
    d.push_back({(cloud[i] - q).norm(), i});
  std::sort(d.begin(), d.end());
  std::vector<int> out;
  for (int i = 0; i < std::min<int>(k, d.size()); ++i) out.push_back(d[i].second);
  return out;
}

RigidTransform random_transform(Rng& rng) {
  Vec3 axis(rng.gauss(), rng.gauss(), rng.gauss());
  axis.normalize();
  RigidTransform tf;
  tf.R = Eigen::AngleAxisd(rng.uniform(-kPi, kPi), axis).toRotationMatrix();
  tf.t = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
  return tf;
}

std::vector<Vec3> random_cloud(Rng& rng, int n, double extent) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i)
    pts.push_back(Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                       rng.uniform(-extent, extent)));
  return pts;
}

}  // namespace

TEST_CASE("rigid transform basics") {
  SUBCASE("identity leaves points unchanged") {
    RigidTransform id = RigidTransform::identity();
    Vec3 p(1.2, -3.4, 5.6);
    CHECK((id.apply(p) - p).norm() == doctest::Approx(0.0));
  }
  SUBCASE("90 degree z rotation maps x onto y") {
    RigidTransform tf = RigidTransform::rot_z(kPi / 2);
    Vec3 q = tf.apply(Vec3(1, 0, 0));
    CHECK(q.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q.y() == doctest::Approx(1.0));
    CHECK(q.z() == doctest::Approx(0.0));
  }
  SUBCASE("inverse undoes a random transform") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      RigidTransform tf = random_transform(rng);
      // independent inverse: transpose rotation, negate rotated translation
      Mat3 rt = tf.R.transpose();
      Vec3 ti = -(rt * tf.t);
      RigidTransform inv = tf.inverse();
      CHECK((inv.R - rt).norm() < 1e-12);
      CHECK((inv.t - ti).norm() < 1e-12);
      Vec3 p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
      CHECK((inv.apply(tf.apply(p)) - p).norm() < 1e-9);
    }
  }
  SUBCASE("composition applies right-hand side first") {
    Rng rng(12);
    RigidTransform a = random_transform(rng);
    RigidTransform b = random_transform(rng);
    Vec3 p(0.3, -0.7, 1.1);
    CHECK(((a * b).apply(p) - a.apply(b.apply(p))).norm() < 1e-12);
  }
  SUBCASE("pairwise distances preserved to 1e-9 relative") {
    Rng rng(13);
    RigidTransform tf = random_transform(rng);
    std::vector<Vec3> pts = random_cloud(rng, 30, 4.0);
    std::vector<Vec3> out = apply_transform(tf, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        double d0 = (pts[i] - pts[j]).norm();
        double d1 = (out[i] - out[j]).norm();
        CHECK(std::abs(d1 - d0) <= 1e-9 * std::max(1.0, d0));
      }
  }
  SUBCASE("check rejects a sheared matrix") {
    RigidTransform tf;
    tf.R(0, 1) = 0.1;
    CHECK_THROWS_AS(tf.check(), Error);
  }
  SUBCASE("check rejects a reflection") {
    RigidTransform tf;
    tf.R(2, 2) = -1.0;
    CHECK_THROWS_AS(tf.check(), Error);
  }
}

TEST_CASE("k_nearest exact queries") {
  SUBCASE("three collinear points, k=2") {
    std::vector<Vec3> cloud = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    std::vector<int> nn = k_nearest(cloud, Vec3(0, 0, 0), 2);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0] == 0);
    CHECK(nn[1] == 1);
  }
  SUBCASE("k larger than cloud clamps") {
    std::vector<Vec3> cloud = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    std::vector<int> nn = k_nearest(cloud, Vec3(5, 0, 0), 10);
    REQUIRE(nn.size() == 3);
    CHECK(nn[0] == 2);
    CHECK(nn[1] == 1);
    CHECK(nn[2] == 0);
  }
  SUBCASE("equidistant points break ties by ascending index") {
    std::vector<Vec3> cloud = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0), Vec3(0, -1, 0)};
    std::vector<int> nn = k_nearest(cloud, Vec3(0, 0, 0), 4);
    CHECK(nn == std::vector<int>{0, 1, 2, 3});
  }
  SUBCASE("random clouds match the brute-force oracle") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      int n = 1 + static_cast<int>(rng.index(200));
      std::vector<Vec3> cloud = random_cloud(rng, n, 2.0);
      Vec3 q(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
      int k = 1 + static_cast<int>(rng.index(8));
      CHECK(k_nearest(cloud, q, k) == brute_knn(cloud, q, k));
    }
  }
}

TEST_CASE("grid index matches the exact query") {
  Rng rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 1 + static_cast<int>(rng.index(200));
    std::vector<Vec3> cloud = random_cloud(rng, n, 1.5);
    GridIndex index(cloud);
    for (int q = 0; q < 10; ++q) {
      Vec3 query(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
      int k = 1 + static_cast<int>(rng.index(10));
      CHECK(index.k_nearest(query, k) == brute_knn(cloud, query, k));
    }
  }
  SUBCASE("degenerate cloud of identical points") {
    std::vector<Vec3> cloud(5, Vec3(1, 1, 1));
    GridIndex index(cloud);
    CHECK(index.k_nearest(Vec3(0, 0, 0), 3) == std::vector<int>{0, 1, 2});
  }
}

TEST_CASE("normal estimation") {
  SUBCASE("flat plane gives the z axis") {
    std::vector<Vec3> hood = {Vec3(0.1, 0, 0),  Vec3(-0.1, 0.05, 0), Vec3(0, -0.1, 0),
                              Vec3(0.07, 0.07, 0), Vec3(-0.05, -0.08, 0), Vec3(0.02, 0.11, 0)};
    Vec3 n = estimate_normal(hood, Vec3::Zero());
    CHECK(std::abs(n.z()) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("six points near a sphere pole recover the radial normal within 2 degrees") {
    std::vector<Vec3> hood;
    for (int i = 0; i < 6; ++i) {
      double theta = (4.0 + 1.5 * (i % 2)) * kPi / 180.0;  // polar angles 4 and 5.5 degrees
      double phi = 2.0 * kPi * i / 6.0 + 0.4;
      hood.push_back(Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                          std::cos(theta)));
    }
    Vec3 n = estimate_normal(hood, Vec3(0, 0, 1));
    double ang = angle_between(n, Vec3(0, 0, 1));
    CHECK(std::min(ang, kPi - ang) < 2.0 * kPi / 180.0);
  }
  SUBCASE("coincident points are degenerate") {
    std::vector<Vec3> hood(6, Vec3(1, 2, 3));
    CHECK_THROWS_AS(estimate_normal(hood, Vec3(1, 2, 3)), Error);
  }
  SUBCASE("collinear points are degenerate") {
    std::vector<Vec3> hood;
    for (int i = 0; i < 6; ++i) hood.push_back(Vec3(0.01 * i, 0.02 * i, -0.005 * i));
    CHECK_THROWS_AS(estimate_normal(hood, Vec3::Zero()), Error);
  }
  SUBCASE("fewer than three points are degenerate") {
    std::vector<Vec3> hood = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_AS(estimate_normal(hood, Vec3::Zero()), Error);
  }
  SUBCASE("invariant up to sign under a shared rigid transform") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vec3> hood;
      for (int i = 0; i < 7; ++i)
        hood.push_back(Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                            0.02 * rng.gauss()));
      RigidTransform tf = random_transform(rng);
      Vec3 n0 = estimate_normal(hood, Vec3::Zero());
      Vec3 n1 = estimate_normal(apply_transform(tf, hood), tf.apply(Vec3::Zero()));
      double ang = angle_between(tf.R * n0, n1);
      CHECK(std::min(ang, kPi - ang) < 1e-9);
    }
  }
}

TEST_CASE("angle_between endpoints") {
  CHECK(angle_between(Vec3(1, 0, 0), Vec3(2, 0, 0)) == doctest::Approx(0.0));
  CHECK(angle_between(Vec3(1, 0, 0), Vec3(-3, 0, 0)) == doctest::Approx(kPi));
  CHECK(angle_between(Vec3(1, 0, 0), Vec3(0, 5, 0)) == doctest::Approx(kPi / 2));
}
