#pragma once

#include "hybridfm/core.hpp"
#include "hybridfm/mesh.hpp"
#include "hybridfm/operators.hpp"

#include <Eigen/Cholesky>

namespace hfm {

/// Mass metric of a coefficient space with its symmetric principal square
/// root and inverse root, precomputed once and reused by norms, adjoints
/// and solvers.
struct WeightedSpace {
  Mat reduced_mass;
  Mat sqrt_mass;
  Mat inv_sqrt_mass;

  Index size() const { return reduced_mass.rows(); }
};

/// Builds the space from an explicit SPD matrix via symmetric
/// eigendecomposition. Eigenvalues below 1e-12 of the largest raise NotSPD;
/// a near-singular reduced mass signals a degenerate basis upstream.
WeightedSpace weighted_space(const Mat& reduced_mass);
WeightedSpace weighted_space(const SpectralBasis& basis);

/// Projection of vertex functions onto a (possibly non-orthogonal) basis:
/// f -> M_k^{-1} Psi^T M f. For orthonormal bases this is plain Phi^T M f.
struct Projector {
  Mat functions;           // n x k
  Vec mass;                // n
  Eigen::LLT<Mat> factor;  // of the reduced mass

  Mat apply(const Mat& fn) const;
};

Projector projector(const SpectralBasis& basis, const Mesh& mesh);

/// Hilbert-Schmidt norm of a map between two weighted coefficient spaces,
/// computed as the Frobenius norm of sqrt(M_2) A sqrt(M_1^{-1}).
double hs_norm(const Mat& A, const WeightedSpace& domain,
               const WeightedSpace& range);

/// Adjoint with respect to the two mass inner products:
/// A* = M_1^{-1} A^T M_2, satisfying <A x, y>_{M2} = <x, A* y>_{M1}.
Mat adjoint(const Mat& A, const WeightedSpace& domain,
            const WeightedSpace& range);

/// Explicit Kronecker product, materialized. Kept small-scale; the solvers
/// assemble their systems blockwise instead of calling this on big inputs.
Mat kron(const Mat& A, const Mat& B);

/// Column-stacked vectorization and its inverse.
Vec vec_stack(const Mat& F);
Mat unvec(const Vec& v, Index rows, Index cols);

/// vec(E F G), evaluated as the product without forming a Kronecker matrix.
Vec kron_vec_apply(const Mat& E, const Mat& F, const Mat& G);

}  // namespace hfm
