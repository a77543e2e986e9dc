#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybridfm/operators.hpp"
#include "../tools/meshgen.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace hfm;

namespace {

Mat flatten_field(const Mat& per_vertex) {
  Mat out(3 * per_vertex.rows(), 1);
  for (Index v = 0; v < per_vertex.rows(); ++v)
    out.block<3, 1>(3 * v, 0) = per_vertex.row(v).transpose();
  return out;
}

double quad_form(const SpMat& H, const Mat& field) {
  Vec x = field.col(0);
  return x.dot(H * x);
}

}  // namespace

TEST_CASE("cotangent weights on a right triangle") {
  Mat v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  Eigen::MatrixXi f(1, 3);
  f << 0, 1, 2;
  SparseOperator op = assemble_laplacian(finalize_mesh(v, f));
  Mat L = Mat(op.matrix);
  // edges opposite the 45 degree corners carry cot(pi/4)/2, the edge
  // opposite the right angle carries cot(pi/2)/2 = 0
  CHECK(L(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(L(0, 2) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(L(1, 2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(L(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  for (Index i = 0; i < 3; ++i)
    CHECK(L.row(i).sum() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("laplacian annihilates constants and is PSD") {
  Mesh grid = meshgen::make_grid(5, 4, 0.3);
  SparseOperator op = assemble_laplacian(grid);
  Vec ones = Vec::Ones(grid.num_vertices());
  CHECK((op.matrix * ones).cwiseAbs().maxCoeff() < 1e-12);

  Mat L = Mat(op.matrix);
  CHECK((L - L.transpose()).cwiseAbs().maxCoeff() < 1e-10 * L.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Mat> es(L);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8 * es.eigenvalues().maxCoeff());
}

TEST_CASE("sphere spectrum follows l(l+1)") {
  Mesh sphere = meshgen::make_icosphere(2);
  SparseOperator op = assemble_laplacian(sphere);
  EigOptions opts;
  opts.k = 9;
  Vec evals;
  solve_smallest_eigenpairs(op, opts, evals);
  CHECK(std::abs(evals[0]) < 1e-8);
  for (int i = 1; i <= 3; ++i)
    CHECK(evals[i] == doctest::Approx(2.0).epsilon(0.05));
  for (int i = 4; i <= 8; ++i)
    CHECK(evals[i] == doctest::Approx(6.0).epsilon(0.05));
}

TEST_CASE("sparse eigensolver agrees with a dense solve") {
  Mesh sphere = meshgen::make_icosphere(1);
  SparseOperator op = assemble_laplacian(sphere);
  Vec dense_vals;
  Mat dense_vecs;
  oracle::dense_generalized_eig(Mat(op.matrix), op.mass, dense_vals, dense_vecs);

  EigOptions opts;
  opts.k = 12;
  Vec evals;
  Mat vecs = solve_smallest_eigenpairs(op, opts, evals);
  double scale = std::max(1.0, dense_vals.cwiseAbs().maxCoeff());
  for (Index i = 0; i < 12; ++i)
    CHECK(std::abs(evals[i] - dense_vals[i]) < 1e-8 * scale);

  // residuals and pairwise mass-orthonormality
  double anorm = Mat(op.matrix).cwiseAbs().maxCoeff();
  for (Index i = 0; i < 12; ++i) {
    Vec r = op.matrix * vecs.col(i) - evals[i] * op.mass.cwiseProduct(vecs.col(i));
    CHECK(r.norm() <= 1e-8 * anorm * vecs.col(i).norm());
  }
  Mat gram = vecs.transpose() * op.mass.asDiagonal() * vecs;
  CHECK((gram - Mat::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("eigensolver is deterministic and fails loudly") {
  Mesh sphere = meshgen::make_icosphere(1);
  SparseOperator op = assemble_laplacian(sphere);
  EigOptions opts;
  opts.k = 8;
  Vec e1, e2;
  Mat v1 = solve_smallest_eigenpairs(op, opts, e1);
  Mat v2 = solve_smallest_eigenpairs(op, opts, e2);
  CHECK((v1 - v2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e1 - e2).cwiseAbs().maxCoeff() == 0.0);

  opts.max_iter = 0;
  CHECK_THROWS_AS(solve_smallest_eigenpairs(op, opts, e1), ConvergenceError);
}

TEST_CASE("first basis function is the normalized constant") {
  Mesh sphere = meshgen::make_icosphere(2);
  SpectralBasis lb = compute_lb_basis(sphere, 4);
  CHECK(lb.orthonormal);
  CHECK(std::abs(lb.eigenvalues[0]) < 1e-8);
  double expected = 1.0 / std::sqrt(sphere.total_area);
  for (Index v = 0; v < sphere.num_vertices(); ++v)
    CHECK(lb.functions(v, 0) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("basis is mass-orthonormal at k=50") {
  Mesh sphere = meshgen::make_icosphere(2);
  SpectralBasis lb = compute_lb_basis(sphere, 50);
  Mat gram = lb.functions.transpose() * sphere.vertex_mass.asDiagonal() * lb.functions;
  CHECK((gram - Mat::Identity(50, 50)).cwiseAbs().maxCoeff() < 1e-6);
  for (Index i = 1; i < 50; ++i)
    CHECK(lb.eigenvalues[i] >= lb.eigenvalues[i - 1] - 1e-12);
}

TEST_CASE("coordinate reconstruction error shrinks with basis size") {
  Mesh sphere = meshgen::make_icosphere(2);
  SpectralBasis lb = compute_lb_basis(sphere, 100);
  auto recon_error = [&](Index k) {
    SpectralBasis b = lb.truncated(k);
    Mat coeff = b.functions.transpose() * sphere.vertex_mass.asDiagonal() *
                sphere.vertices;
    return (sphere.vertices - b.functions * coeff).norm();
  };
  double e10 = recon_error(10), e50 = recon_error(50), e100 = recon_error(100);
  CHECK(e50 < e10);
  CHECK(e100 < e50);
}

TEST_CASE("truncation keeps the leading modes") {
  Mesh sphere = meshgen::make_icosphere(1);
  SpectralBasis lb = compute_lb_basis(sphere, 20);
  SpectralBasis head = lb.truncated(7);
  CHECK(head.size() == 7);
  CHECK((head.functions - lb.functions.leftCols(7)).norm() == 0.0);
  CHECK((head.eigenvalues - lb.eigenvalues.head(7)).norm() == 0.0);
  CHECK_THROWS_AS(lb.truncated(0), DimensionMismatch);
  CHECK_THROWS_AS(lb.truncated(21), DimensionMismatch);
}

TEST_CASE("requesting too many modes raises") {
  Mesh tri = meshgen::make_antiprism();
  SparseOperator op = assemble_laplacian(tri);
  CHECK_THROWS_AS(compute_eigenbasis(op, tri, 11, false), RankError);
  // the elastic operator has 30 dofs but 6 rigid modes
  CHECK_THROWS_AS(compute_elastic_basis(tri, 25, 1e-2), RankError);
}

TEST_CASE("shell energy vanishes at rest and grows off rest") {
  Mesh m = meshgen::make_antiprism(0.1);
  CHECK(std::abs(elastic_energy(m, m.vertices, 1e-2)) < 1e-12);
  Mat g0 = elastic_energy_gradient(m, m.vertices, 1e-2);
  CHECK(g0.cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat bump = m.vertices;
  for (Index v = 0; v < m.num_vertices(); ++v)
    for (int c = 0; c < 3; ++c) bump(v, c) += 0.02 * gauss(rng);
  CHECK(elastic_energy(m, bump, 1e-2) > 0.0);
  CHECK(membrane_energy(m, bump) > 0.0);
  CHECK(bending_energy(m, bump) > 0.0);
}

TEST_CASE("analytic energy gradient matches finite differences") {
  Mesh m = meshgen::make_antiprism(0.1);
  Rng rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat deformed = m.vertices;
  for (Index v = 0; v < m.num_vertices(); ++v)
    for (int c = 0; c < 3; ++c) deformed(v, c) += 0.05 * gauss(rng);

  const double bw = 1e-2;
  Mat analytic = elastic_energy_gradient(m, deformed, bw);
  Mat fd = oracle::fd_gradient(
      [&](const Mat& x) { return elastic_energy(m, x, bw); }, deformed, 1e-6);
  double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-7 * scale);
}

TEST_CASE("rigid motions are in the hessian kernel") {
  Mesh m = meshgen::make_antiprism(0.1);
  SparseOperator op = assemble_elastic_hessian(m, 1e-2);
  double hmax = Mat(op.matrix).cwiseAbs().maxCoeff();

  Mat asym = Mat(op.matrix) - Mat(op.matrix).transpose();
  CHECK(asym.cwiseAbs().maxCoeff() < 1e-12 * hmax);

  for (int axis = 0; axis < 3; ++axis) {
    Mat trans = Mat::Zero(m.num_vertices(), 3);
    trans.col(axis).setOnes();
    Mat t = flatten_field(trans);
    CHECK((op.matrix * t.col(0)).cwiseAbs().maxCoeff() <
          1e-6 * hmax * t.norm());

    Mat rot(m.num_vertices(), 3);
    Eigen::Vector3d e = Eigen::Vector3d::Unit(axis);
    for (Index v = 0; v < m.num_vertices(); ++v)
      rot.row(v) = e.cross(Eigen::Vector3d(m.vertices.row(v))).transpose();
    Mat r = flatten_field(rot);
    CHECK((op.matrix * r.col(0)).cwiseAbs().maxCoeff() <
          1e-6 * hmax * r.norm());
  }
}

TEST_CASE("assembled hessian matches the brute-force energy hessian") {
  Mesh m = meshgen::make_antiprism(0.1);
  const double bw = 1e-2;
  SparseOperator op = assemble_elastic_hessian(m, bw);
  Mat H = Mat(op.matrix);

  Eigen::RowVector3d lo = m.vertices.colwise().minCoeff();
  Eigen::RowVector3d hi = m.vertices.colwise().maxCoeff();
  double diag = (hi - lo).norm();
  Mat Hfd = oracle::fd_hessian_energy_rich(
      [&](const Mat& x) { return elastic_energy(m, x, bw); }, m.vertices,
      1e-3 * diag);

  double hmax = Hfd.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Index i = 0; i < H.rows(); ++i)
    for (Index j = 0; j < H.cols(); ++j) {
      double denom = std::max(std::abs(Hfd(i, j)), 1e-3 * hmax);
      worst = std::max(worst, std::abs(H(i, j) - Hfd(i, j)) / denom);
    }
  CHECK(worst < 1e-4);
}

TEST_CASE("assembled hessian matches the closed-form rest hessian") {
  Mesh m = meshgen::make_antiprism(0.1);
  const double bw = 1e-2;
  Mat H = Mat(assemble_elastic_hessian(m, bw).matrix);
  Mat Hexact = oracle::exact_rest_hessian(m, bw);
  double hmax = Hexact.cwiseAbs().maxCoeff();
  CHECK((H - Hexact).cwiseAbs().maxCoeff() < 1e-7 * hmax);
}

TEST_CASE("stretching is stiff and bending is soft on a flat patch") {
  Mesh grid = meshgen::make_grid(20, 20, 0.2);
  const double eta = 1e-2;
  SparseOperator op = assemble_elastic_hessian(grid, eta);
  const double L = 20 * 0.2;

  // the same smooth profile moved once inside the plane and once out of it
  Mat stretch = Mat::Zero(grid.num_vertices(), 3);
  Mat bump = Mat::Zero(grid.num_vertices(), 3);
  for (Index v = 0; v < grid.num_vertices(); ++v) {
    double profile = std::sin(std::numbers::pi * grid.vertices(v, 0) / L) *
                     std::sin(std::numbers::pi * grid.vertices(v, 1) / L);
    stretch(v, 0) = profile;
    bump(v, 2) = profile;
  }
  Mat s = flatten_field(stretch), b = flatten_field(bump);
  double qs = quad_form(op.matrix, s) / s.squaredNorm();
  double qb = quad_form(op.matrix, b) / b.squaredNorm();
  CHECK(qs > 0.0);
  CHECK(qb > 0.0);
  double ratio = qb / qs;
  CHECK(ratio < 20 * eta);
  CHECK(ratio > eta / 20);
}

TEST_CASE("bending needs two wings per edge") {
  // single triangle: no interior edges, so only membrane energy remains
  Mat v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  Eigen::MatrixXi f(1, 3);
  f << 0, 1, 2;
  Mesh tri = finalize_mesh(v, f);
  Mat folded = tri.vertices;
  folded(2, 2) += 0.3;
  CHECK(bending_energy(tri, folded) == 0.0);

  // grid patch: boundary edges are skipped but interior hinges bend
  Mesh grid = meshgen::make_grid(4, 3, 0.5);
  Mat lifted = grid.vertices;
  lifted.col(2) = grid.vertices.col(0).cwiseProduct(grid.vertices.col(1));
  CHECK(bending_energy(grid, lifted) > 0.0);
}

TEST_CASE("inconsistent winding is rejected") {
  Mat v(4, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 2, 2, 0;
  Eigen::MatrixXi f(2, 3);
  f << 0, 1, 2, 1, 2, 3;  // both faces traverse edge (1,2) the same way
  Mesh bad = finalize_mesh(v, f);
  CHECK_THROWS_AS(bending_energy(bad, bad.vertices), DegenerateMeshError);
}

TEST_CASE("elastic basis carries its reduced mass") {
  Mesh sphere = meshgen::make_icosphere(1);
  SpectralBasis elas = compute_elastic_basis(sphere, 12, 1e-2);
  CHECK(elas.kind == BasisKind::Elastic);
  CHECK_FALSE(elas.orthonormal);
  CHECK(elas.size() == 12);
  CHECK(elas.functions.rows() == sphere.num_vertices());

  // reduced mass is the actual Gram matrix, SPD and far from identity
  Mat gram = elas.functions.transpose() * sphere.vertex_mass.asDiagonal() *
             elas.functions;
  CHECK((gram - elas.reduced_mass).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::LLT<Mat> llt(elas.reduced_mass);
  CHECK(llt.info() == Eigen::Success);
  CHECK((elas.reduced_mass - Mat::Identity(12, 12)).cwiseAbs().maxCoeff() > 0.01);

  for (Index i = 1; i < 12; ++i)
    CHECK(elas.eigenvalues[i] >= elas.eigenvalues[i - 1] - 1e-12);
}

TEST_CASE("dropping the kernel removes exactly the rigid modes") {
  Mesh sphere = meshgen::make_icosphere(1);
  SparseOperator op = assemble_elastic_hessian(sphere, 1e-2);
  EigOptions opts;
  opts.k = 12;
  opts.shift = -1e-8 * Mat(op.matrix).cwiseAbs().maxCoeff();
  Vec evals;
  solve_smallest_eigenpairs(op, opts, evals);
  double lmax = evals[evals.size() - 1];
  Index near_kernel = 0;
  for (Index i = 0; i < evals.size(); ++i)
    if (evals[i] < 1e-5 * lmax) ++near_kernel;
  CHECK(near_kernel == 6);

  SpectralBasis dropped = compute_eigenbasis(op, sphere, 4, true, opts);
  CHECK(dropped.eigenvalues[0] > 1e-5 * lmax);
  double anorm = Mat(op.matrix).cwiseAbs().maxCoeff();
  // residual of the generalized problem for the kept (unprojected) modes is
  // checked indirectly: eigenvalues must match the full solve
  for (Index i = 0; i < 4; ++i)
    CHECK(dropped.eigenvalues[i] ==
          doctest::Approx(evals[6 + i]).epsilon(1e-6));
  CHECK(anorm > 0.0);
}
