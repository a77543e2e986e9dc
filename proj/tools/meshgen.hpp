#pragma once

// Deterministic procedural meshes shared by the asset generator and the
// tests. Everything here is seeded; no call reads external state.

#include "hybridfm/core.hpp"
#include "hybridfm/mesh.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

namespace hfm::meshgen {

/// Icosahedron subdivided `level` times, vertices projected to the given
/// radius. level 3 gives 642 vertices, level 4 gives 2562.
inline Mesh make_icosphere(int level, double radius = 1.0) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Eigen::Vector3i> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : verts) v.normalize();

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d m = (verts[a] + verts[b]).normalized();
      verts.push_back(m);
      int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Eigen::Vector3i> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  Mat V(static_cast<Index>(verts.size()), 3);
  for (Index i = 0; i < V.rows(); ++i) V.row(i) = radius * verts[i];
  Eigen::MatrixXi F(static_cast<Index>(faces.size()), 3);
  for (Index i = 0; i < F.rows(); ++i) F.row(i) = faces[i];
  return finalize_mesh(std::move(V), std::move(F));
}

/// Flat rectangular patch in the z=0 plane, (nx+1) x (ny+1) vertices.
inline Mesh make_grid(Index nx, Index ny, double spacing = 1.0) {
  Mat V((nx + 1) * (ny + 1), 3);
  for (Index j = 0; j <= ny; ++j)
    for (Index i = 0; i <= nx; ++i)
      V.row(j * (nx + 1) + i) << i * spacing, j * spacing, 0.0;
  Eigen::MatrixXi F(2 * nx * ny, 3);
  Index f = 0;
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      Index v00 = j * (nx + 1) + i, v10 = v00 + 1;
      Index v01 = v00 + (nx + 1), v11 = v01 + 1;
      F.row(f++) << v00, v10, v11;
      F.row(f++) << v00, v11, v01;
    }
  return finalize_mesh(std::move(V), std::move(F));
}

/// Closed 10-vertex solid (pentagonal antiprism with triangulated caps),
/// with optional seeded radial jitter to break its symmetry.
inline Mesh make_antiprism(double jitter = 0.0, std::uint64_t seed = 7) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double h = 0.6;
  Mat V(10, 3);
  for (Index k = 0; k < 5; ++k) {
    double a = 2.0 * std::numbers::pi * k / 5.0;
    V.row(k) << std::cos(a), std::sin(a), h;
  }
  for (Index k = 0; k < 5; ++k) {
    double a = 2.0 * std::numbers::pi * (k + 0.5) / 5.0;
    V.row(5 + k) << std::cos(a), std::sin(a), -h;
  }
  if (jitter > 0.0)
    for (Index v = 0; v < 10; ++v) V.row(v) *= 1.0 + jitter * uni(rng);
  Eigen::MatrixXi F(16, 3);
  F << 0, 1, 2, 0, 2, 3, 0, 3, 4,        // top cap
      5, 7, 6, 5, 8, 7, 5, 9, 8,         // bottom cap
      0, 5, 1, 1, 5, 6, 1, 6, 2, 2, 6, 7, 2, 7, 3, 3, 7, 8, 3, 8, 4, 4, 8, 9,
      4, 9, 0, 0, 9, 5;                  // side band
  return finalize_mesh(std::move(V), std::move(F));
}

}  // namespace hfm::meshgen
