#include "hybridfm/operators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

namespace hfm {

namespace {

constexpr double kMembraneMu = 1.0;
constexpr double kMembraneLambda = 1.0;

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

// First fundamental form of a rest face, cached for the membrane terms.
struct FaceRef {
  double ar, br, cr;  // E1.E1, E1.E2, E2.E2
  double det_r;
  double area;
};

FaceRef face_ref(const Mesh& mesh, Index f) {
  Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
  Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
  Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
  Eigen::Vector3d e1 = b - a, e2 = c - a;
  FaceRef r;
  r.ar = e1.dot(e1);
  r.br = e1.dot(e2);
  r.cr = e2.dot(e2);
  r.det_r = r.ar * r.cr - r.br * r.br;
  r.area = 0.5 * std::sqrt(std::max(r.det_r, 0.0));
  return r;
}

// Energy density as a function of the deformed first fundamental form
// (ad, bd, cd). Vanishes with zero derivative when the form matches the
// rest form, i.e. the identity is stress-free.
double membrane_density(const FaceRef& ref, double ad, double bd, double cd) {
  double det_d = ad * cd - bd * bd;
  if (!(det_d > 0.0)) return std::numeric_limits<double>::infinity();
  double trace_g = (ref.cr * ad - 2.0 * ref.br * bd + ref.ar * cd) / ref.det_r;
  double det_g = det_d / ref.det_r;
  constexpr double kappa = 0.5 * kMembraneMu + 0.25 * kMembraneLambda;
  return 0.5 * kMembraneMu * trace_g + 0.25 * kMembraneLambda * det_g -
         kappa * std::log(det_g) - kMembraneMu - 0.25 * kMembraneLambda;
}

double membrane_energy_local(const FaceRef& ref, const Eigen::Vector3d& a,
                             const Eigen::Vector3d& b,
                             const Eigen::Vector3d& c) {
  Eigen::Vector3d e1 = b - a, e2 = c - a;
  return ref.area * membrane_density(ref, e1.dot(e1), e1.dot(e2), e2.dot(e2));
}

// Gradient with respect to the stacked corner positions [a; b; c], via the
// chain rule through the form entries (ad, bd, cd).
Vec9 membrane_grad_local(const FaceRef& ref, const Eigen::Vector3d& a,
                         const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  Eigen::Vector3d e1 = b - a, e2 = c - a;
  double ad = e1.dot(e1), bd = e1.dot(e2), cd = e2.dot(e2);
  double det_d = ad * cd - bd * bd;
  constexpr double kappa = 0.5 * kMembraneMu + 0.25 * kMembraneLambda;
  double wa = 0.5 * kMembraneMu * ref.cr / ref.det_r +
              0.25 * kMembraneLambda * cd / ref.det_r - kappa * cd / det_d;
  double wb = -kMembraneMu * ref.br / ref.det_r -
              0.5 * kMembraneLambda * bd / ref.det_r + 2.0 * kappa * bd / det_d;
  double wc = 0.5 * kMembraneMu * ref.ar / ref.det_r +
              0.25 * kMembraneLambda * ad / ref.det_r - kappa * ad / det_d;
  Eigen::Vector3d ga = -2.0 * wa * e1 - wb * (e1 + e2) - 2.0 * wc * e2;
  Eigen::Vector3d gb = 2.0 * wa * e1 + wb * e2;
  Eigen::Vector3d gc = wb * e1 + 2.0 * wc * e2;
  Vec9 g;
  g << ga, gb, gc;
  return ref.area * g;
}

// Hinge over an interior edge (v0, v1): va opposite in the face traversing
// v0 -> v1, vb opposite in the face traversing v1 -> v0.
struct Hinge {
  Index v0, v1, va, vb;
  double rest_angle;
  double coef;  // rest edge length squared over a third of the wing areas
};

// Signed angle between the two wing normals about the shared edge; zero for
// a flat hinge.
double dihedral_angle(const Eigen::Vector3d& x0, const Eigen::Vector3d& x1,
                      const Eigen::Vector3d& xa, const Eigen::Vector3d& xb) {
  Eigen::Vector3d e = x1 - x0;
  Eigen::Vector3d n1 = e.cross(xa - x0);
  Eigen::Vector3d n2 = (xb - x0).cross(e);
  double s = n1.cross(n2).dot(e) / e.norm();
  return std::atan2(s, n1.dot(n2));
}

void dihedral_grad(const Eigen::Vector3d& x0, const Eigen::Vector3d& x1,
                   const Eigen::Vector3d& xa, const Eigen::Vector3d& xb,
                   Eigen::Vector3d& g0, Eigen::Vector3d& g1,
                   Eigen::Vector3d& ga, Eigen::Vector3d& gb) {
  Eigen::Vector3d e = x1 - x0;
  double len = e.norm();
  Eigen::Vector3d eh = e / len;
  Eigen::Vector3d n1 = e.cross(xa - x0);
  Eigen::Vector3d n2 = (xb - x0).cross(e);
  double n1sq = n1.squaredNorm(), n2sq = n2.squaredNorm();
  ga = -(len / n1sq) * n1;
  gb = -(len / n2sq) * n2;
  g1 = ((xa - x0).dot(eh) / n1sq) * n1 + ((xb - x0).dot(eh) / n2sq) * n2;
  g0 = -(g1 + ga + gb);
}

double bending_energy_local(const Hinge& h, const Eigen::Vector3d& x0,
                            const Eigen::Vector3d& x1,
                            const Eigen::Vector3d& xa,
                            const Eigen::Vector3d& xb) {
  double d = dihedral_angle(x0, x1, xa, xb) - h.rest_angle;
  return h.coef * d * d;
}

Vec12 bending_grad_local(const Hinge& h, const Eigen::Vector3d& x0,
                         const Eigen::Vector3d& x1, const Eigen::Vector3d& xa,
                         const Eigen::Vector3d& xb) {
  Eigen::Vector3d g0, g1, ga, gb;
  dihedral_grad(x0, x1, xa, xb, g0, g1, ga, gb);
  double factor = 2.0 * h.coef * (dihedral_angle(x0, x1, xa, xb) - h.rest_angle);
  Vec12 g;
  g << g0, g1, ga, gb;
  return factor * g;
}

std::vector<Hinge> build_hinges(const Mesh& mesh) {
  struct EdgeSides {
    int count = 0;
    Index opp[2] = {-1, -1};
    bool forward[2] = {false, false};
  };
  std::map<std::pair<Index, Index>, EdgeSides> edges;
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    for (int c = 0; c < 3; ++c) {
      Index u = mesh.faces(f, c);
      Index v = mesh.faces(f, (c + 1) % 3);
      Index w = mesh.faces(f, (c + 2) % 3);
      auto key = std::minmax(u, v);
      EdgeSides& side = edges[{key.first, key.second}];
      if (side.count >= 2)
        throw DegenerateMeshError("edge (" + std::to_string(u) + ", " +
                                  std::to_string(v) +
                                  ") is shared by more than two faces");
      side.opp[side.count] = w;
      side.forward[side.count] = (u < v);
      ++side.count;
    }
  }
  std::vector<Hinge> hinges;
  hinges.reserve(edges.size());
  for (const auto& [key, side] : edges) {
    if (side.count < 2) continue;  // boundary edge carries no bending term
    if (side.forward[0] == side.forward[1])
      throw DegenerateMeshError("faces at edge (" + std::to_string(key.first) +
                                ", " + std::to_string(key.second) +
                                ") are inconsistently oriented");
    Hinge h;
    h.v0 = key.first;
    h.v1 = key.second;
    h.va = side.forward[0] ? side.opp[0] : side.opp[1];
    h.vb = side.forward[0] ? side.opp[1] : side.opp[0];
    Eigen::Vector3d x0 = mesh.vertices.row(h.v0);
    Eigen::Vector3d x1 = mesh.vertices.row(h.v1);
    Eigen::Vector3d xa = mesh.vertices.row(h.va);
    Eigen::Vector3d xb = mesh.vertices.row(h.vb);
    h.rest_angle = dihedral_angle(x0, x1, xa, xb);
    double area_a = 0.5 * (x1 - x0).cross(xa - x0).norm();
    double area_b = 0.5 * (xb - x0).cross(x1 - x0).norm();
    double d = (area_a + area_b) / 3.0;
    h.coef = (x1 - x0).squaredNorm() / d;
    hinges.push_back(h);
  }
  return hinges;
}

void check_deformed_shape(const Mesh& ref, const Mat& deformed) {
  require(deformed.rows() == ref.num_vertices() && deformed.cols() == 3,
          "deformed positions must be n x 3 for the reference mesh");
}

double bbox_diagonal(const Mesh& mesh) {
  Eigen::RowVector3d lo = mesh.vertices.colwise().minCoeff();
  Eigen::RowVector3d hi = mesh.vertices.colwise().maxCoeff();
  return (hi - lo).norm();
}

double max_abs_entry(const SpMat& m) {
  if (m.nonZeros() == 0) return 0.0;
  return Eigen::Map<const Vec>(m.valuePtr(), m.nonZeros()).cwiseAbs().maxCoeff();
}

// M-orthonormalizes the columns of X in place (two Cholesky passes on the
// Gram matrix). Columns that collapse are replaced with fresh random vectors
// and the whole block is retried.
void m_orthonormalize(Mat& X, const Vec& mass, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Vec norms(X.cols());
    for (Index c = 0; c < X.cols(); ++c)
      norms[c] = std::sqrt(X.col(c).dot(mass.cwiseProduct(X.col(c))));
    double max_norm = norms.maxCoeff();
    for (Index c = 0; c < X.cols(); ++c) {
      if (!std::isfinite(norms[c]) || norms[c] <= 1e-10 * max_norm)
        X.col(c) = random_unit_vector(X.rows(), rng);
      else
        X.col(c) /= norms[c];
    }
    bool ok = true;
    for (int pass = 0; pass < 2 && ok; ++pass) {
      Mat G = X.transpose() * mass.asDiagonal() * X;
      G = 0.5 * (G + G.transpose()).eval();
      Eigen::LLT<Mat> llt(G);
      if (llt.info() != Eigen::Success) {
        // rotate so the dependent directions become near-zero columns,
        // which the next attempt replaces
        Eigen::SelfAdjointEigenSolver<Mat> es(G);
        X = (X * es.eigenvectors()).eval();
        ok = false;
        break;
      }
      Mat Y = llt.matrixU().solve<Eigen::OnTheRight>(X);
      if (!Y.allFinite()) {
        ok = false;
        break;
      }
      X = std::move(Y);
    }
    if (ok) return;
  }
  throw NumericalError("subspace orthonormalization failed repeatedly");
}

void canonicalize_sign(Mat& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index at;
    vectors.col(c).cwiseAbs().maxCoeff(&at);
    if (vectors(at, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

}  // namespace

SparseOperator assemble_laplacian(const Mesh& mesh) {
  const Index n = mesh.num_vertices();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.num_faces()) * 12);
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    for (int c = 0; c < 3; ++c) {
      Index i = mesh.faces(f, c);
      Index j = mesh.faces(f, (c + 1) % 3);
      Index k = mesh.faces(f, (c + 2) % 3);
      Eigen::Vector3d u = mesh.vertices.row(i) - mesh.vertices.row(k);
      Eigen::Vector3d v = mesh.vertices.row(j) - mesh.vertices.row(k);
      double cot = u.dot(v) / u.cross(v).norm();
      if (!std::isfinite(cot))
        throw NumericalError("non-finite cotangent weight at face " +
                             std::to_string(f));
      double w = 0.5 * cot;
      trips.emplace_back(i, j, -w);
      trips.emplace_back(j, i, -w);
      trips.emplace_back(i, i, w);
      trips.emplace_back(j, j, w);
    }
  }
  SparseOperator op;
  op.kind = OperatorKind::LaplaceBeltrami;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  op.matrix.makeCompressed();
  op.mass = mesh.vertex_mass;
  return op;
}

double membrane_energy(const Mesh& ref, const Mat& deformed) {
  check_deformed_shape(ref, deformed);
  double total = 0.0;
  for (Index f = 0; f < ref.num_faces(); ++f) {
    FaceRef fr = face_ref(ref, f);
    total += membrane_energy_local(fr, deformed.row(ref.faces(f, 0)),
                                   deformed.row(ref.faces(f, 1)),
                                   deformed.row(ref.faces(f, 2)));
  }
  return total;
}

double bending_energy(const Mesh& ref, const Mat& deformed) {
  check_deformed_shape(ref, deformed);
  double total = 0.0;
  for (const Hinge& h : build_hinges(ref))
    total += bending_energy_local(h, deformed.row(h.v0), deformed.row(h.v1),
                                  deformed.row(h.va), deformed.row(h.vb));
  return total;
}

double elastic_energy(const Mesh& ref, const Mat& deformed,
                      double bending_weight) {
  return membrane_energy(ref, deformed) +
         bending_weight * bending_energy(ref, deformed);
}

Mat elastic_energy_gradient(const Mesh& ref, const Mat& deformed,
                            double bending_weight) {
  check_deformed_shape(ref, deformed);
  Mat grad = Mat::Zero(ref.num_vertices(), 3);
  for (Index f = 0; f < ref.num_faces(); ++f) {
    FaceRef fr = face_ref(ref, f);
    Vec9 g = membrane_grad_local(fr, deformed.row(ref.faces(f, 0)),
                                 deformed.row(ref.faces(f, 1)),
                                 deformed.row(ref.faces(f, 2)));
    for (int c = 0; c < 3; ++c)
      grad.row(ref.faces(f, c)) += g.segment<3>(3 * c).transpose();
  }
  for (const Hinge& h : build_hinges(ref)) {
    Vec12 g = bending_weight *
              bending_grad_local(h, deformed.row(h.v0), deformed.row(h.v1),
                                 deformed.row(h.va), deformed.row(h.vb));
    grad.row(h.v0) += g.segment<3>(0).transpose();
    grad.row(h.v1) += g.segment<3>(3).transpose();
    grad.row(h.va) += g.segment<3>(6).transpose();
    grad.row(h.vb) += g.segment<3>(9).transpose();
  }
  return grad;
}

SparseOperator assemble_elastic_hessian(const Mesh& mesh,
                                        double bending_weight) {
  if (!(bending_weight > 0.0))
    throw Error("bending weight must be positive");
  const Index n = mesh.num_vertices();
  const double h = 1e-5 * bbox_diagonal(mesh);

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.num_faces()) * 81);

  // membrane: 9x9 stencil per face, second differences of the local gradient
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    FaceRef fr = face_ref(mesh, f);
    Index vid[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
    Vec9 base;
    for (int c = 0; c < 3; ++c)
      base.segment<3>(3 * c) = mesh.vertices.row(vid[c]).transpose();
    auto grad_at = [&](const Vec9& x) {
      return membrane_grad_local(fr, x.segment<3>(0), x.segment<3>(3),
                                 x.segment<3>(6));
    };
    Eigen::Matrix<double, 9, 9> hloc;
    for (int j = 0; j < 9; ++j) {
      Vec9 xp = base, xm = base;
      xp[j] += h;
      xm[j] -= h;
      hloc.col(j) = (grad_at(xp) - grad_at(xm)) / (2.0 * h);
    }
    if (!hloc.allFinite())
      throw NumericalError("non-finite membrane second differences at face " +
                           std::to_string(f));
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c)
        trips.emplace_back(3 * vid[r / 3] + r % 3, 3 * vid[c / 3] + c % 3,
                           hloc(r, c));
  }

  // bending: 12x12 stencil per interior edge
  for (const Hinge& hinge : build_hinges(mesh)) {
    Index vid[4] = {hinge.v0, hinge.v1, hinge.va, hinge.vb};
    Vec12 base;
    for (int c = 0; c < 4; ++c)
      base.segment<3>(3 * c) = mesh.vertices.row(vid[c]).transpose();
    auto grad_at = [&](const Vec12& x) {
      return bending_grad_local(hinge, x.segment<3>(0), x.segment<3>(3),
                                x.segment<3>(6), x.segment<3>(9));
    };
    Eigen::Matrix<double, 12, 12> hloc;
    for (int j = 0; j < 12; ++j) {
      Vec12 xp = base, xm = base;
      xp[j] += h;
      xm[j] -= h;
      hloc.col(j) = (grad_at(xp) - grad_at(xm)) / (2.0 * h);
    }
    if (!hloc.allFinite())
      throw NumericalError("non-finite bending second differences at edge (" +
                           std::to_string(hinge.v0) + ", " +
                           std::to_string(hinge.v1) + ")");
    hloc *= bending_weight;
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 12; ++c)
        trips.emplace_back(3 * vid[r / 3] + r % 3, 3 * vid[c / 3] + c % 3,
                           hloc(r, c));
  }

  SpMat raw(3 * n, 3 * n);
  raw.setFromTriplets(trips.begin(), trips.end());
  SparseOperator op;
  op.kind = OperatorKind::ElasticHessian;
  op.matrix = 0.5 * (raw + SpMat(raw.transpose()));
  op.matrix.makeCompressed();
  op.mass.resize(3 * n);
  for (Index v = 0; v < n; ++v)
    op.mass.segment<3>(3 * v).setConstant(mesh.vertex_mass[v]);
  return op;
}

SpectralBasis SpectralBasis::truncated(Index k) const {
  require(k >= 1 && k <= size(), "truncation size out of range");
  SpectralBasis b;
  b.functions = functions.leftCols(k);
  b.eigenvalues = eigenvalues.head(k);
  b.reduced_mass = reduced_mass.topLeftCorner(k, k);
  b.orthonormal = orthonormal;
  b.kind = kind;
  return b;
}

Mat solve_smallest_eigenpairs(const SparseOperator& op, const EigOptions& opts,
                              Vec& eigenvalues_out) {
  const Index n = op.dim();
  const Index k = opts.k;
  require(k >= 1 && k <= n, "eigenpair count out of range");
  require(op.mass.size() == n, "mass length does not match operator size");
  if (op.mass.minCoeff() <= 0.0)
    throw NumericalError("mass matrix must be positive");

  const double anorm = max_abs_entry(op.matrix);

  SpMat mass_sp(n, n);
  {
    std::vector<Triplet> mt;
    mt.reserve(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) mt.emplace_back(i, i, op.mass[i]);
    mass_sp.setFromTriplets(mt.begin(), mt.end());
  }
  SpMat shifted = op.matrix - opts.shift * mass_sp;
  Eigen::SimplicialLDLT<SpMat> factor(shifted);
  if (factor.info() != Eigen::Success)
    throw NumericalError("factorization of the shifted operator failed");

  Rng rng(opts.seed);
  const Index buffer = std::clamp<Index>(k / 2, 16, 64);
  const Index p = std::min(n, k + buffer);
  Mat X(n, p);
  for (Index c = 0; c < p; ++c) X.col(c) = random_unit_vector(n, rng);
  m_orthonormalize(X, op.mass, rng);

  Mat locked(n, 0);
  Vec locked_vals(0);

  for (Index iter = 0; iter < opts.max_iter && locked.cols() < k; ++iter) {
    Mat Z = factor.solve(op.mass.asDiagonal() * X);
    if (factor.info() != Eigen::Success)
      throw NumericalError("backsolve with the shifted operator failed");
    if (locked.cols() > 0)
      Z -= locked * (locked.transpose() * (op.mass.asDiagonal() * Z));
    m_orthonormalize(Z, op.mass, rng);

    Mat AZ = op.matrix * Z;
    Mat S = Z.transpose() * AZ;
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    if (es.info() != Eigen::Success)
      throw NumericalError("dense eigensolve on the projected block failed");
    X = Z * es.eigenvectors();
    Mat AX = AZ * es.eigenvectors();
    Vec theta = es.eigenvalues();

    // lock the leading pairs that meet the residual target, in order, so no
    // smaller eigenvalue can be skipped
    Index newly = 0;
    const Index need = k - locked.cols();
    while (newly < need && newly < X.cols()) {
      Vec resid =
          AX.col(newly) - theta[newly] * op.mass.cwiseProduct(X.col(newly));
      double bound = std::max(opts.tol * anorm * X.col(newly).norm(), 1e-300);
      if (resid.norm() > bound) break;
      ++newly;
    }
    if (newly > 0) {
      Index l0 = locked.cols();
      locked.conservativeResize(n, l0 + newly);
      locked.rightCols(newly) = X.leftCols(newly);
      locked_vals.conservativeResize(l0 + newly);
      locked_vals.tail(newly) = theta.head(newly);
      X = X.rightCols(X.cols() - newly).eval();
    }
  }

  if (locked.cols() < k)
    throw ConvergenceError(
        "eigensolver reached the iteration limit with " +
        std::to_string(locked.cols()) + " of " + std::to_string(k) +
        " pairs converged");

  // locking order is ascending up to cluster-level ties; make it exact
  std::vector<Index> order(static_cast<size_t>(locked.cols()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return locked_vals[a] < locked_vals[b];
  });
  Mat vectors(n, k);
  eigenvalues_out.resize(k);
  for (Index i = 0; i < k; ++i) {
    vectors.col(i) = locked.col(order[static_cast<size_t>(i)]);
    eigenvalues_out[i] = locked_vals[order[static_cast<size_t>(i)]];
  }
  canonicalize_sign(vectors);
  return vectors;
}

SpectralBasis compute_eigenbasis(const SparseOperator& op, const Mesh& mesh,
                                 Index k, bool drop_kernel,
                                 const EigOptions& base_opts) {
  const Index dim = op.dim();
  require(k >= 1, "basis size must be positive");
  if (k > dim) throw RankError("requested more modes than the operator has");

  EigOptions opts = base_opts;
  opts.k = std::min(dim, k + (drop_kernel ? Index(10) : Index(0)));
  Vec evals;
  Mat vecs = solve_smallest_eigenpairs(op, opts, evals);

  Index kdrop = 0;
  if (drop_kernel) {
    auto count_kernel = [&](const Vec& ev) {
      double lmax = ev[ev.size() - 1];
      double thresh = opts.kernel_tol * std::max(lmax, 0.0);
      Index c = 0;
      while (c < ev.size() && ev[c] < thresh) ++c;
      return c;
    };
    kdrop = count_kernel(evals);
    if (vecs.cols() - kdrop < k) {
      if (opts.k == dim)
        throw RankError("fewer than k non-kernel modes available");
      opts.k = std::min(dim, k + kdrop + 4);
      vecs = solve_smallest_eigenpairs(op, opts, evals);
      kdrop = count_kernel(evals);
      if (vecs.cols() - kdrop < k)
        throw RankError("fewer than k non-kernel modes available");
    }
  }

  Mat kept = vecs.middleCols(kdrop, k);
  Vec kept_vals = evals.segment(kdrop, k);

  SpectralBasis basis;
  basis.eigenvalues = kept_vals;
  if (op.kind == OperatorKind::LaplaceBeltrami) {
    require(dim == mesh.num_vertices(),
            "operator size does not match the mesh");
    basis.kind = BasisKind::LaplaceBeltrami;
    basis.functions = kept;
    basis.reduced_mass = Mat::Identity(k, k);
    basis.orthonormal = true;
  } else {
    require(dim == 3 * mesh.num_vertices(),
            "operator size does not match the mesh");
    basis.kind = BasisKind::Elastic;
    const Index n = mesh.num_vertices();
    basis.functions.resize(n, k);
    for (Index j = 0; j < k; ++j)
      for (Index v = 0; v < n; ++v)
        basis.functions(v, j) =
            kept.col(j).segment<3>(3 * v).dot(mesh.vertex_normals.row(v));
    basis.reduced_mass = basis.functions.transpose() *
                         mesh.vertex_mass.asDiagonal() * basis.functions;
    basis.reduced_mass =
        0.5 * (basis.reduced_mass + basis.reduced_mass.transpose()).eval();
    basis.orthonormal = false;
    Eigen::LLT<Mat> llt(basis.reduced_mass);
    if (llt.info() != Eigen::Success)
      throw NotSPD("normal projection produced a rank-deficient basis");
  }
  return basis;
}

SpectralBasis compute_lb_basis(const Mesh& mesh, Index k, std::uint64_t seed) {
  SparseOperator op = assemble_laplacian(mesh);
  EigOptions opts;
  opts.seed = seed;
  return compute_eigenbasis(op, mesh, k, false, opts);
}

SpectralBasis compute_elastic_basis(const Mesh& mesh, Index k,
                                    double bending_weight,
                                    std::uint64_t seed) {
  SparseOperator op = assemble_elastic_hessian(mesh, bending_weight);
  EigOptions opts;
  opts.seed = seed;
  double scale = 0.0;
  if (op.matrix.nonZeros() > 0)
    scale = Eigen::Map<const Vec>(op.matrix.valuePtr(), op.matrix.nonZeros())
                .cwiseAbs()
                .maxCoeff();
  opts.shift = -1e-8 * std::max(1.0, scale);
  return compute_eigenbasis(op, mesh, k, true, opts);
}

HybridBasis compute_hybrid_basis(const Mesh& mesh, Index k_lb, Index k_elas,
                                 double bending_weight, std::uint64_t seed) {
  return {compute_lb_basis(mesh, k_lb, seed),
          compute_elastic_basis(mesh, k_elas, bending_weight, seed)};
}

}  // namespace hfm
