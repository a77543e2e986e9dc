#pragma once

#include "hybridfm/core.hpp"

#include <array>
#include <string>
#include <vector>

namespace hfm {

/// Triangle mesh with per-vertex lumped mass and area-weighted normals.
/// Immutable after construction; all derived quantities are computed once
/// by finalize().
struct Mesh {
  Mat vertices;        // n x 3
  Eigen::MatrixXi faces;  // m x 3, 0-based
  Vec vertex_mass;     // n, barycentric lumping (one third of incident areas)
  Mat vertex_normals;  // n x 3, unit length
  double total_area = 0.0;

  Index num_vertices() const { return vertices.rows(); }
  Index num_faces() const { return faces.rows(); }

  Eigen::Vector3d face_normal_area(Index f) const;  // normal scaled by area
  double face_area(Index f) const;
};

/// Validates connectivity, rejects degenerate faces, computes mass/normals.
/// Faces with area < 1e-12 * total_area are an error, not repaired.
Mesh finalize_mesh(Mat vertices, Eigen::MatrixXi faces);

enum class MeshFormat { Auto, OFF, PLY, OBJ };

Mesh load_mesh(const std::string& path, MeshFormat format = MeshFormat::Auto);
void save_off(const std::string& path, const Mesh& mesh);

/// Writes an ASCII PLY with per-vertex colors, used to visualize a
/// correspondence by transferring a color ramp from the matched vertices.
void save_ply_colored(const std::string& path, const Mesh& mesh,
                      const std::vector<std::array<std::uint8_t, 3>>& colors);

enum class IndexBase { Zero, One };

/// Point-to-point map: targets[v] is the vertex of the *source* shape
/// matched to vertex v of the *target* shape (direction S2 -> S1 throughout).
struct Correspondence {
  std::vector<Index> targets;

  Index size() const { return static_cast<Index>(targets.size()); }
  static Correspondence identity(Index n);
};

Correspondence load_correspondence(const std::string& path,
                                   IndexBase indexing = IndexBase::Zero);
void save_correspondence(const std::string& path, const Correspondence& c);

/// Checks every index lies in [0, n_source) and the length matches n_target.
void validate_correspondence(const Correspondence& c, Index n_source,
                             Index n_target);

}  // namespace hfm
