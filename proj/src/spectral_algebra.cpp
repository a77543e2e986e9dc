#include "hybridfm/spectral_algebra.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace hfm {

WeightedSpace weighted_space(const Mat& reduced_mass) {
  require(reduced_mass.rows() == reduced_mass.cols(),
          "reduced mass must be square");
  require(reduced_mass.rows() > 0, "reduced mass must be nonempty");

  // Symmetrize defensively; Gram matrices pick up roundoff asymmetry.
  Mat sym = 0.5 * (reduced_mass + reduced_mass.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of reduced mass failed");

  const Vec& d = eig.eigenvalues();
  double dmax = d.maxCoeff();
  if (dmax <= 0.0 || d.minCoeff() < 1e-12 * dmax)
    throw NotSPD("reduced mass is not positive definite (eigenvalue " +
                 std::to_string(d.minCoeff()) + " vs largest " +
                 std::to_string(dmax) + ")");

  const Mat& q = eig.eigenvectors();
  Vec root = d.cwiseSqrt();

  WeightedSpace space;
  space.reduced_mass = std::move(sym);
  space.sqrt_mass = q * root.asDiagonal() * q.transpose();
  space.inv_sqrt_mass = q * root.cwiseInverse().asDiagonal() * q.transpose();
  return space;
}

WeightedSpace weighted_space(const SpectralBasis& basis) {
  if (basis.orthonormal) {
    WeightedSpace space;
    space.reduced_mass = Mat::Identity(basis.size(), basis.size());
    space.sqrt_mass = space.reduced_mass;
    space.inv_sqrt_mass = space.reduced_mass;
    return space;
  }
  return weighted_space(basis.reduced_mass);
}

Mat Projector::apply(const Mat& fn) const {
  require(fn.rows() == functions.rows(),
          "function rows must match the vertex count of the basis");
  return factor.solve(functions.transpose() * (mass.asDiagonal() * fn));
}

Projector projector(const SpectralBasis& basis, const Mesh& mesh) {
  require(basis.num_vertices() == mesh.num_vertices(),
          "basis and mesh vertex counts differ");

  Mat gram;
  if (basis.orthonormal)
    gram = Mat::Identity(basis.size(), basis.size());
  else
    gram = 0.5 * (basis.reduced_mass + basis.reduced_mass.transpose());

  Projector proj;
  proj.functions = basis.functions;
  proj.mass = mesh.vertex_mass;
  proj.factor.compute(gram);
  if (proj.factor.info() != Eigen::Success)
    throw NotSPD("reduced mass of the basis is not positive definite");
  return proj;
}

double hs_norm(const Mat& A, const WeightedSpace& domain,
               const WeightedSpace& range) {
  require(A.rows() == range.size() && A.cols() == domain.size(),
          "map dimensions must match the weighted spaces");
  return (range.sqrt_mass * A * domain.inv_sqrt_mass).norm();
}

Mat adjoint(const Mat& A, const WeightedSpace& domain,
            const WeightedSpace& range) {
  require(A.rows() == range.size() && A.cols() == domain.size(),
          "map dimensions must match the weighted spaces");
  return domain.inv_sqrt_mass * domain.inv_sqrt_mass *
         (A.transpose() * range.reduced_mass);
}

Mat kron(const Mat& A, const Mat& B) {
  Mat out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

Vec vec_stack(const Mat& F) {
  return Eigen::Map<const Vec>(F.data(), F.size());
}

Mat unvec(const Vec& v, Index rows, Index cols) {
  require(v.size() == rows * cols, "vector length does not match shape");
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Vec kron_vec_apply(const Mat& E, const Mat& F, const Mat& G) {
  require(E.cols() == F.rows() && F.cols() == G.rows(),
          "inner dimensions must chain");
  Mat out = E * F * G;
  return vec_stack(out);
}

}  // namespace hfm
