#include "hybridfm/fmap.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace hfm {

namespace {

constexpr Index kHsSizeGuard = 128;

void check_solver_inputs(const Mat& d1, const Mat& d2, const Vec& evals1,
                         const Vec& evals2, double lambda) {
  require(d1.cols() == d2.cols(), "descriptor counts must match");
  require(d1.cols() > 0, "need at least one descriptor");
  require(d1.rows() > 0 && d2.rows() > 0, "basis sizes must be positive");
  require(evals1.size() == d1.rows(), "eigenvalue count must match rows of D1");
  require(evals2.size() == d2.rows(), "eigenvalue count must match rows of D2");
  require(lambda >= 0.0, "regularizer weight must be nonnegative");
  double scale = std::max(evals1.cwiseAbs().maxCoeff(),
                          evals2.cwiseAbs().maxCoeff());
  require(evals1.minCoeff() >= -1e-10 * (1.0 + scale) &&
              evals2.minCoeff() >= -1e-10 * (1.0 + scale),
          "eigenvalues must be nonnegative");
}

// Adds w * kron(left, right) onto acc without materializing the product.
void add_kron(Mat& acc, const Mat& left, const Mat& right, double w) {
  Index rows = right.rows(), cols = right.cols();
  for (Index i = 0; i < left.rows(); ++i)
    for (Index j = 0; j < left.cols(); ++j)
      acc.block(i * rows, j * cols, rows, cols) += (w * left(i, j)) * right;
}

}  // namespace

FunctionalMap solve_standard(const Mat& d1, const Mat& d2, const Vec& evals1,
                             const Vec& evals2, double lambda) {
  check_solver_inputs(d1, d2, evals1, evals2, lambda);
  Index k1 = d1.rows(), k2 = d2.rows();

  Mat gram = d1 * d1.transpose();
  Mat rhs_all = d1 * d2.transpose();  // column i is the rhs of row i

  FunctionalMap map;
  map.matrix.resize(k2, k1);
  for (Index i = 0; i < k2; ++i) {
    Mat lhs = gram;
    if (lambda > 0.0)
      lhs.diagonal() +=
          lambda * (evals1.array() - evals2[i]).square().matrix();

    Eigen::LLT<Mat> llt(lhs);
    if (llt.info() != Eigen::Success)
      throw SingularSystem("row system " + std::to_string(i) +
                           " is not positive definite");
    Vec diag = llt.matrixLLT().diagonal();
    double ratio = diag.maxCoeff() / diag.minCoeff();
    if (ratio * ratio > 1e14)
      throw SingularSystem("row system " + std::to_string(i) +
                           " has estimated condition beyond 1e14");
    map.matrix.row(i) = llt.solve(rhs_all.col(i)).transpose();
  }
  if (!map.matrix.allFinite())
    throw NumericalError("solver produced non-finite map entries");
  return map;
}

FunctionalMap solve_hs(const Mat& d1, const Mat& d2, const Vec& evals1,
                       const Vec& evals2, const WeightedSpace& space1,
                       const WeightedSpace& space2, double lambda) {
  check_solver_inputs(d1, d2, evals1, evals2, lambda);
  Index k = d1.rows();
  if (d2.rows() != k)
    throw DimensionError("weighted solver expects equal basis sizes");
  if (k > kHsSizeGuard)
    throw DimensionError("basis size " + std::to_string(k) +
                         " exceeds the dense-system guard of " +
                         std::to_string(kHsSizeGuard));
  require(space1.size() == k && space2.size() == k,
          "weighted spaces must match the basis size");

  // Normal matrix (D1 D1^T) kron M2 + lambda zeta^T zeta, with zeta given
  // by P kron Q - R kron S below; the four cross products stay k x k.
  Mat gram = d1 * d1.transpose();
  Mat acc = Mat::Zero(k * k, k * k);
  add_kron(acc, gram, space2.reduced_mass, 1.0);

  if (lambda > 0.0) {
    // vec(sqrt(M2) C L1 sqrt(M1^-1)) = (sqrt(M1^-1) L1 kron sqrt(M2)) vec C
    // and likewise for the L2 side; the domain factor sits on the left.
    Mat p = space1.inv_sqrt_mass * evals1.asDiagonal();
    const Mat& q = space2.sqrt_mass;
    const Mat& r = space1.inv_sqrt_mass;
    Mat s = space2.sqrt_mass * evals2.asDiagonal();

    Mat pr = p.transpose() * r;
    Mat qs = q.transpose() * s;
    add_kron(acc, p.transpose() * p, q.transpose() * q, lambda);
    add_kron(acc, pr, qs, -lambda);
    add_kron(acc, pr.transpose(), qs.transpose(), -lambda);
    add_kron(acc, r.transpose() * r, s.transpose() * s, lambda);
  }

  Vec rhs = vec_stack(space2.reduced_mass * d2 * d1.transpose());

  Eigen::LLT<Mat> llt(acc);
  if (llt.info() != Eigen::Success) {
    acc.diagonal().array() += 1e-12 * acc.trace();
    llt.compute(acc);
    if (llt.info() != Eigen::Success)
      throw SingularSystem("weighted normal equations are singular");
  }
  Vec solution = llt.solve(rhs);

  FunctionalMap map;
  map.matrix = unvec(solution, k, k);
  if (!map.matrix.allFinite())
    throw NumericalError("solver produced non-finite map entries");
  return map;
}

HybridMap solve_hybrid(const StandardInputs& lb_inputs,
                       const HsInputs& elastic_inputs) {
  HybridMap map;
  map.lb_block =
      solve_standard(lb_inputs.d1, lb_inputs.d2, lb_inputs.evals1,
                     lb_inputs.evals2, lb_inputs.lambda);
  map.lb_block.domain_kind = BasisKind::LaplaceBeltrami;
  map.lb_block.range_kind = BasisKind::LaplaceBeltrami;

  map.elastic_block = solve_hs(
      elastic_inputs.d1, elastic_inputs.d2, elastic_inputs.evals1,
      elastic_inputs.evals2, elastic_inputs.space1, elastic_inputs.space2,
      elastic_inputs.lambda);
  map.elastic_block.domain_kind = BasisKind::Elastic;
  map.elastic_block.range_kind = BasisKind::Elastic;
  return map;
}

double standard_energy(const Mat& c, const Mat& d1, const Mat& d2,
                       const Vec& evals1, const Vec& evals2, double lambda) {
  double data = (c * d1 - d2).squaredNorm();
  Mat commutator = c * evals1.asDiagonal() - evals2.asDiagonal() * c;
  return data + lambda * commutator.squaredNorm();
}

double hs_energy(const Mat& c, const Mat& d1, const Mat& d2,
                 const Vec& evals1, const Vec& evals2,
                 const WeightedSpace& space1, const WeightedSpace& space2,
                 double lambda) {
  double data = (space2.sqrt_mass * (c * d1 - d2)).squaredNorm();
  Mat commutator = c * evals1.asDiagonal() - evals2.asDiagonal() * c;
  double reg =
      (space2.sqrt_mass * commutator * space1.inv_sqrt_mass).squaredNorm();
  return data + lambda * reg;
}

double loss_bijectivity(const FunctionalMap& c12, const FunctionalMap& c21) {
  const Mat& a = c12.matrix;
  const Mat& b = c21.matrix;
  require(a.rows() == b.cols() && a.cols() == b.rows(),
          "maps must compose in both orders");
  Index k2 = a.rows(), k1 = a.cols();
  return (a * b - Mat::Identity(k2, k2)).squaredNorm() +
         (b * a - Mat::Identity(k1, k1)).squaredNorm();
}

double loss_orthogonality_hs(const FunctionalMap& c12,
                             const FunctionalMap& c21,
                             const WeightedSpace& space1,
                             const WeightedSpace& space2) {
  Index k1 = space1.size(), k2 = space2.size();
  require(c12.matrix.rows() == k2 && c12.matrix.cols() == k1,
          "forward map must go from space 1 to space 2");
  require(c21.matrix.rows() == k1 && c21.matrix.cols() == k2,
          "backward map must go from space 2 to space 1");

  Mat fwd = adjoint(c12.matrix, space1, space2) * c12.matrix;
  Mat bwd = adjoint(c21.matrix, space2, space1) * c21.matrix;
  return (fwd - Mat::Identity(k1, k1)).squaredNorm() +
         (bwd - Mat::Identity(k2, k2)).squaredNorm();
}

double loss_couple_hs(const FunctionalMap& c12, const FunctionalMap& c21,
                      const Correspondence& pi12, const Correspondence& pi21,
                      const SpectralBasis& basis1, const SpectralBasis& basis2,
                      const Mesh& mesh1, const Mesh& mesh2,
                      const WeightedSpace& space1,
                      const WeightedSpace& space2) {
  validate_correspondence(pi12, mesh2.num_vertices(), mesh1.num_vertices());
  validate_correspondence(pi21, mesh1.num_vertices(), mesh2.num_vertices());
  Index k1 = basis1.size(), k2 = basis2.size();
  require(c12.matrix.rows() == k2 && c12.matrix.cols() == k1,
          "forward map size must match the bases");
  require(c21.matrix.rows() == k1 && c21.matrix.cols() == k2,
          "backward map size must match the bases");

  Mat gathered21(mesh2.num_vertices(), k1);
  for (Index v = 0; v < mesh2.num_vertices(); ++v)
    gathered21.row(v) = basis1.functions.row(pi21.targets[v]);
  Mat induced12 = projector(basis2, mesh2).apply(gathered21);

  Mat gathered12(mesh1.num_vertices(), k2);
  for (Index v = 0; v < mesh1.num_vertices(); ++v)
    gathered12.row(v) = basis2.functions.row(pi12.targets[v]);
  Mat induced21 = projector(basis1, mesh1).apply(gathered12);

  double fwd = hs_norm(c12.matrix - induced12, space1, space2);
  double bwd = hs_norm(c21.matrix - induced21, space2, space1);
  return fwd * fwd + bwd * bwd;
}

double loss_gt_hs(const FunctionalMap& c, const FunctionalMap& c_gt,
                  const WeightedSpace& space1, const WeightedSpace& space2) {
  require(c.matrix.rows() == c_gt.matrix.rows() &&
              c.matrix.cols() == c_gt.matrix.cols(),
          "maps must have equal shapes");
  double dist = hs_norm(c.matrix - c_gt.matrix, space1, space2);
  return dist * dist;
}

AnnealState annealing_and_scales(Index step, Index ramp_steps, Index k_total,
                                 Index k_lb, Index k_elas) {
  require(step >= 0, "step must be nonnegative");
  require(ramp_steps > 0, "ramp length must be positive");
  require(k_lb > 0 && k_elas > 0, "block sizes must be positive");
  require(k_lb + k_elas == k_total, "block sizes must add up");

  AnnealState state;
  state.mu = std::min(static_cast<double>(step) /
                          static_cast<double>(ramp_steps),
                      1.0);
  double k = static_cast<double>(k_total);
  state.alpha = 0.5 * k * k / (static_cast<double>(k_lb) * k_lb);
  state.beta = 0.5 * k * k / (static_cast<double>(k_elas) * k_elas);
  return state;
}

}  // namespace hfm
