#include "hybridfm/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace hfm {

namespace {

std::string lowercase_ext(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Reads the next line that is neither empty nor a comment. Returns false on EOF.
bool next_content_line(std::istream& in, std::string& line, char comment) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos) continue;
    if (line[pos] == comment) continue;
    return true;
  }
  return false;
}

Mesh parse_off(std::istream& in, const std::string& path) {
  std::string line;
  if (!next_content_line(in, line, '#'))
    throw ParseError("empty OFF file: " + path);
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  Index nv = -1, nf = -1, ne = -1;
  if (magic == "OFF") {
    // counts may follow on the same line or the next one
    if (!(header >> nv >> nf >> ne)) {
      if (!next_content_line(in, line, '#'))
        throw ParseError("OFF missing counts: " + path);
      std::istringstream counts(line);
      if (!(counts >> nv >> nf >> ne))
        throw ParseError("OFF malformed counts: " + path);
    }
  } else {
    // headerless variant: the first line is already the counts
    std::istringstream counts(line);
    if (!(counts >> nv >> nf >> ne))
      throw ParseError("not an OFF file: " + path);
  }
  if (nv < 0 || nf < 0) throw ParseError("OFF negative counts: " + path);

  Mat vertices(nv, 3);
  for (Index i = 0; i < nv; ++i) {
    if (!next_content_line(in, line, '#'))
      throw ParseError("OFF truncated vertex list: " + path);
    std::istringstream ls(line);
    if (!(ls >> vertices(i, 0) >> vertices(i, 1) >> vertices(i, 2)))
      throw ParseError("OFF malformed vertex line: " + path);
  }
  Eigen::MatrixXi faces(nf, 3);
  for (Index i = 0; i < nf; ++i) {
    if (!next_content_line(in, line, '#'))
      throw ParseError("OFF truncated face list: " + path);
    std::istringstream ls(line);
    Index arity;
    if (!(ls >> arity)) throw ParseError("OFF malformed face line: " + path);
    if (arity != 3)
      throw ParseError("OFF non-triangle face (arity " +
                       std::to_string(arity) + "): " + path);
    if (!(ls >> faces(i, 0) >> faces(i, 1) >> faces(i, 2)))
      throw ParseError("OFF malformed face line: " + path);
  }
  return finalize_mesh(std::move(vertices), std::move(faces));
}

Mesh parse_ply_ascii(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty PLY file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw ParseError("not a PLY file: " + path);

  Index nv = -1, nf = -1;
  // element name -> count, in declaration order
  std::vector<std::pair<std::string, Index>> elements;
  // per-vertex property names, to locate x/y/z among extras
  std::vector<std::string> vertex_props;
  std::string current_element;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii")
        throw ParseError("only ASCII PLY is supported: " + path);
    } else if (tok == "element") {
      std::string name;
      Index count;
      if (!(ls >> name >> count))
        throw ParseError("PLY malformed element: " + path);
      elements.emplace_back(name, count);
      current_element = name;
      if (name == "vertex") nv = count;
      if (name == "face") nf = count;
    } else if (tok == "property") {
      if (current_element == "vertex") {
        std::string type, name;
        ls >> type;
        if (type == "list") throw ParseError("PLY list property on vertex: " + path);
        ls >> name;
        vertex_props.push_back(name);
      }
    } else if (tok == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw ParseError("PLY header not terminated: " + path);
  if (nv < 0 || nf < 0) throw ParseError("PLY missing vertex/face element: " + path);

  auto prop_index = [&](const std::string& name) {
    auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
    if (it == vertex_props.end())
      throw ParseError("PLY vertex property '" + name + "' missing: " + path);
    return static_cast<size_t>(it - vertex_props.begin());
  };
  const size_t ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");

  Mat vertices(nv, 3);
  Eigen::MatrixXi faces(nf, 3);
  for (const auto& [name, count] : elements) {
    if (name == "vertex") {
      std::vector<double> row(vertex_props.size());
      for (Index i = 0; i < count; ++i) {
        if (!next_content_line(in, line, '\0'))
          throw ParseError("PLY truncated vertices: " + path);
        std::istringstream ls(line);
        for (double& v : row)
          if (!(ls >> v)) throw ParseError("PLY malformed vertex: " + path);
        vertices(i, 0) = row[ix];
        vertices(i, 1) = row[iy];
        vertices(i, 2) = row[iz];
      }
    } else if (name == "face") {
      for (Index i = 0; i < count; ++i) {
        if (!next_content_line(in, line, '\0'))
          throw ParseError("PLY truncated faces: " + path);
        std::istringstream ls(line);
        Index arity;
        if (!(ls >> arity)) throw ParseError("PLY malformed face: " + path);
        if (arity != 3) throw ParseError("PLY non-triangle face: " + path);
        if (!(ls >> faces(i, 0) >> faces(i, 1) >> faces(i, 2)))
          throw ParseError("PLY malformed face: " + path);
      }
    } else {
      // skip any other element's rows
      for (Index i = 0; i < count; ++i)
        if (!next_content_line(in, line, '\0'))
          throw ParseError("PLY truncated element '" + name + "': " + path);
    }
  }
  return finalize_mesh(std::move(vertices), std::move(faces));
}

Mesh parse_obj(std::istream& in, const std::string& path) {
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> tris;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "v") {
      Eigen::Vector3d p;
      if (!(ls >> p[0] >> p[1] >> p[2]))
        throw ParseError("OBJ malformed vertex: " + path);
      verts.push_back(p);
    } else if (tok == "f") {
      std::vector<Index> idx;
      std::string ref;
      while (ls >> ref) {
        // accept v, v/vt, v//vn, v/vt/vn; only the vertex index is used
        size_t slash = ref.find('/');
        std::string head = (slash == std::string::npos) ? ref : ref.substr(0, slash);
        Index v = 0;
        auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
        if (ec != std::errc() || p != head.data() + head.size())
          throw ParseError("OBJ malformed face reference '" + ref + "': " + path);
        if (v < 0) v = static_cast<Index>(verts.size()) + v + 1;  // relative
        idx.push_back(v - 1);  // OBJ is one-based
      }
      if (idx.size() != 3)
        throw ParseError("OBJ non-triangle face (" + std::to_string(idx.size()) +
                         " vertices): " + path);
      tris.emplace_back(static_cast<int>(idx[0]), static_cast<int>(idx[1]),
                        static_cast<int>(idx[2]));
    }
    // all other records (vn, vt, usemtl, g, ...) are ignored
  }
  Mat vertices(static_cast<Index>(verts.size()), 3);
  for (Index i = 0; i < vertices.rows(); ++i) vertices.row(i) = verts[i];
  Eigen::MatrixXi faces(static_cast<Index>(tris.size()), 3);
  for (Index i = 0; i < faces.rows(); ++i) faces.row(i) = tris[i];
  return finalize_mesh(std::move(vertices), std::move(faces));
}

}  // namespace

Eigen::Vector3d Mesh::face_normal_area(Index f) const {
  Eigen::Vector3d a = vertices.row(faces(f, 0));
  Eigen::Vector3d b = vertices.row(faces(f, 1));
  Eigen::Vector3d c = vertices.row(faces(f, 2));
  return 0.5 * (b - a).cross(c - a);
}

double Mesh::face_area(Index f) const { return face_normal_area(f).norm(); }

Mesh finalize_mesh(Mat vertices, Eigen::MatrixXi faces) {
  const Index n = vertices.rows();
  const Index m = faces.rows();
  if (n == 0 || m == 0) throw EmptyMeshError("mesh has no vertices or faces");
  if (!vertices.allFinite()) throw ParseError("mesh has non-finite coordinates");

  for (Index f = 0; f < m; ++f) {
    for (int c = 0; c < 3; ++c) {
      Index v = faces(f, c);
      if (v < 0 || v >= n)
        throw DegenerateMeshError("face " + std::to_string(f) +
                                  " references vertex " + std::to_string(v) +
                                  " outside [0, " + std::to_string(n) + ")");
    }
    if (faces(f, 0) == faces(f, 1) || faces(f, 1) == faces(f, 2) ||
        faces(f, 0) == faces(f, 2))
      throw DegenerateMeshError("face " + std::to_string(f) +
                                " repeats a vertex index");
  }

  Mesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.faces = std::move(faces);

  Vec areas(m);
  double total = 0.0;
  for (Index f = 0; f < m; ++f) {
    areas[f] = mesh.face_area(f);
    total += areas[f];
  }
  if (!(total > 0.0)) throw DegenerateMeshError("mesh has zero total area");
  for (Index f = 0; f < m; ++f)
    if (areas[f] < 1e-12 * total)
      throw DegenerateMeshError("face " + std::to_string(f) +
                                " is degenerate (area " +
                                std::to_string(areas[f]) + ")");

  mesh.total_area = total;
  mesh.vertex_mass = Vec::Zero(n);
  mesh.vertex_normals = Mat::Zero(n, 3);
  for (Index f = 0; f < m; ++f) {
    Eigen::Vector3d na = mesh.face_normal_area(f);
    for (int c = 0; c < 3; ++c) {
      Index v = mesh.faces(f, c);
      mesh.vertex_mass[v] += areas[f] / 3.0;
      mesh.vertex_normals.row(v) += na;
    }
  }
  for (Index v = 0; v < n; ++v) {
    if (!(mesh.vertex_mass[v] > 0.0))
      throw DegenerateMeshError("vertex " + std::to_string(v) +
                                " is unreferenced or massless");
    double len = mesh.vertex_normals.row(v).norm();
    if (len == 0.0)
      throw DegenerateMeshError("vertex " + std::to_string(v) +
                                " has cancelling face normals");
    mesh.vertex_normals.row(v) /= len;
  }
  return mesh;
}

Mesh load_mesh(const std::string& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open mesh file: " + path);
  if (format == MeshFormat::Auto) {
    std::string ext = lowercase_ext(path);
    if (ext == ".off") format = MeshFormat::OFF;
    else if (ext == ".ply") format = MeshFormat::PLY;
    else if (ext == ".obj") format = MeshFormat::OBJ;
    else throw ParseError("cannot infer mesh format from extension: " + path);
  }
  switch (format) {
    case MeshFormat::OFF: return parse_off(in, path);
    case MeshFormat::PLY: return parse_ply_ascii(in, path);
    case MeshFormat::OBJ: return parse_obj(in, path);
    default: throw ParseError("unknown mesh format");
  }
}

void save_off(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write mesh file: " + path);
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
  char buf[128];
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", mesh.vertices(v, 0),
                  mesh.vertices(v, 1), mesh.vertices(v, 2));
    out << buf;
  }
  for (Index f = 0; f < mesh.num_faces(); ++f)
    out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' '
        << mesh.faces(f, 2) << '\n';
  if (!out) throw IOError("failed writing mesh file: " + path);
}

void save_ply_colored(const std::string& path, const Mesh& mesh,
                      const std::vector<std::array<std::uint8_t, 3>>& colors) {
  if (static_cast<Index>(colors.size()) != mesh.num_vertices())
    throw LengthMismatch("color count does not match vertex count");
  std::ofstream out(path);
  if (!out) throw IOError("cannot write PLY file: " + path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.num_vertices() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.num_faces() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  char buf[160];
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %d %d %d\n",
                  mesh.vertices(v, 0), mesh.vertices(v, 1), mesh.vertices(v, 2),
                  int(colors[v][0]), int(colors[v][1]), int(colors[v][2]));
    out << buf;
  }
  for (Index f = 0; f < mesh.num_faces(); ++f)
    out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' '
        << mesh.faces(f, 2) << '\n';
  if (!out) throw IOError("failed writing PLY file: " + path);
}

Correspondence Correspondence::identity(Index n) {
  Correspondence c;
  c.targets.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) c.targets[static_cast<size_t>(i)] = i;
  return c;
}

Correspondence load_correspondence(const std::string& path, IndexBase indexing) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open correspondence file: " + path);
  Correspondence c;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos) continue;
    size_t end = line.find_last_not_of(" \t");
    std::string tok = line.substr(pos, end - pos + 1);
    Index v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      throw ParseError("correspondence line " + std::to_string(lineno) +
                       " is not an integer: " + path);
    if (indexing == IndexBase::One) v -= 1;
    if (v < 0)
      throw IndexOutOfRange("correspondence line " + std::to_string(lineno) +
                            " maps to negative index " + std::to_string(v));
    c.targets.push_back(v);
  }
  if (c.targets.empty()) throw ParseError("empty correspondence file: " + path);
  return c;
}

void save_correspondence(const std::string& path, const Correspondence& c) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write correspondence file: " + path);
  for (Index t : c.targets) out << t << '\n';
  if (!out) throw IOError("failed writing correspondence file: " + path);
}

void validate_correspondence(const Correspondence& c, Index n_source,
                             Index n_target) {
  if (c.size() != n_target)
    throw LengthMismatch("correspondence has " + std::to_string(c.size()) +
                         " entries, target mesh has " +
                         std::to_string(n_target) + " vertices");
  for (Index v : c.targets)
    if (v < 0 || v >= n_source)
      throw IndexOutOfRange("correspondence index " + std::to_string(v) +
                            " outside [0, " + std::to_string(n_source) + ")");
}

}  // namespace hfm
