// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "xreid/eval.hpp"

namespace xreid {

namespace {

constexpr int kEmdMaxPoints = 128;
constexpr double kResidualTol = 1e-13;

std::vector<double> normalized_weights(const std::vector<double>* w, std::size_t n,
                                       const char* side) {
  std::vector<double> out;
  if (w == nullptr) {
    out.assign(n, 1.0 / static_cast<double>(n));
    return out;
  }
  require(w->size() == n, Err::ShapeMismatch, std::string("weight count mismatch on ") + side);
  double sum = 0.0;
  for (double v : *w) {
    require(v >= 0.0, Err::InvalidParams, std::string("negative weight on ") + side);
    sum += v;
  }
  require(sum > 0.0, Err::InvalidParams, std::string("zero total weight on ") + side);
  out = *w;
  for (double& v : out) v /= sum;
  return out;
}

// deterministic uniform-index decimation to at most cap elements
std::vector<Vec3> decimate(const std::vector<Vec3>& pts, int cap) {
  if (static_cast<int>(pts.size()) <= cap) return pts;
  std::vector<Vec3> out;
  out.reserve(cap);
  for (int i = 0; i < cap; ++i)
    out.push_back(pts[static_cast<std::size_t>(i) * pts.size() / cap]);
  return out;
}

}  // namespace

double emd(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
           const std::vector<double>* wa, const std::vector<double>* wb) {
  require(!a.empty() && !b.empty(), Err::EmptyInput, "emd needs non-empty point sets");
  require(a.size() <= kEmdMaxPoints && b.size() <= kEmdMaxPoints, Err::SizeLimitExceeded,
          "emd supports at most 128 points per side");
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  std::vector<double> supply = normalized_weights(wa, a.size(), "a");
  std::vector<double> demand = normalized_weights(wb, b.size(), "b");

  Eigen::MatrixXd cost(n, m), flow = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) cost(i, j) = (a[i] - b[j]).norm();

  // successive shortest paths with node potentials; every augmentation
  // exhausts a supply or a demand, so at most n + m rounds
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pot(n + m, 0.0), dist(n + m);
  std::vector<int> parent(n + m);
  std::vector<char> done(n + m);
  int guard = 4 * (n + m);

  auto residual_demand = [&] {
    double s = 0.0;
    for (double v : demand) s += v;
    return s;
  };

  while (residual_demand() > kResidualTol && guard-- > 0) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (int i = 0; i < n; ++i)
      if (supply[i] > kResidualTol) dist[i] = 0.0;

    for (int iter = 0; iter < n + m; ++iter) {
      int u = -1;
      double best = inf;
      for (int v = 0; v < n + m; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u < 0) break;
      done[u] = 1;
      if (u < n) {
        for (int j = 0; j < m; ++j) {
          // finalized nodes must keep their parents: a rounding-level
          // re-relaxation could close a cycle in the parent chain
          if (done[n + j]) continue;
          double nd = dist[u] + cost(u, j) + pot[u] - pot[n + j];
          if (nd < dist[n + j] - 1e-18) {
            dist[n + j] = nd;
            parent[n + j] = u;
          }
        }
      } else {
        int j = u - n;
        for (int i = 0; i < n; ++i) {
          if (done[i] || flow(i, j) <= kResidualTol) continue;
          double nd = dist[u] - cost(i, j) + pot[u] - pot[i];
          if (nd < dist[i] - 1e-18) {
            dist[i] = nd;
            parent[i] = u;
          }
        }
      }
    }

    int t = -1;
    double best = inf;
    for (int j = 0; j < m; ++j)
      if (demand[j] > kResidualTol && dist[n + j] < best) {
        best = dist[n + j];
        t = n + j;
      }
    if (t < 0) break;  // numerically exhausted

    // bottleneck along the alternating path back to a seeded source
    double amount = demand[t - n];
    for (int v = t; parent[v] >= 0; v = parent[v])
      if (v < n) amount = std::min(amount, flow(v, parent[v] - n));
    int s = t;
    while (parent[s] >= 0) s = parent[s];
    amount = std::min(amount, supply[s]);
    if (amount <= kResidualTol) break;

    for (int v = t; parent[v] >= 0; v = parent[v]) {
      if (v >= n)
        flow(parent[v], v - n) += amount;
      else
        flow(v, parent[v] - n) -= amount;
    }
    supply[s] -= amount;
    demand[t - n] -= amount;
    for (int v = 0; v < n + m; ++v) pot[v] += std::min(dist[v], dist[t]);
  }

  return flow.cwiseProduct(cost).sum();
}

double emd_similarity(const std::vector<RadarFrame>& radar,
                      const std::vector<SignatureFrame>& sig, int max_offset) {
  require(!radar.empty() && !sig.empty(), Err::EmptyInput, "emd_similarity needs frames");
  require(max_offset >= 0, Err::InvalidParams, "max_offset must be >= 0");
  const int nr = static_cast<int>(radar.size()), ns = static_cast<int>(sig.size());
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int off = -max_offset; off <= max_offset; ++off) {
    double sum = 0.0;
    int used = 0;
    for (int i = std::max(0, -off); i < std::min(nr, ns - off); ++i) {
      const RadarFrame& rf = radar[static_cast<std::size_t>(i)];
      const SignatureFrame& sf = sig[static_cast<std::size_t>(i + off)];
      if (rf.points.empty() || sf.points.empty()) continue;
      std::vector<Vec3> ra, sb;
      ra.reserve(rf.points.size());
      for (const RadarPoint& p : rf.points) ra.push_back(p.position);
      sb.reserve(sf.points.size());
      for (const LabeledPoint& p : sf.points) sb.push_back(p.position);
      sum += emd(decimate(ra, kEmdMaxPoints), decimate(sb, kEmdMaxPoints));
      used += 1;
    }
    if (used == 0) continue;
    any = true;
    best = std::max(best, -sum / used);
  }
  // sequences that never overlap on a non-empty pair are maximally dissimilar
  return any ? best : -std::numeric_limits<double>::infinity();
}

}  // namespace xreid
