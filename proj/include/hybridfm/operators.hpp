#pragma once

#include "hybridfm/core.hpp"
#include "hybridfm/mesh.hpp"

namespace hfm {

enum class OperatorKind { LaplaceBeltrami, ElasticHessian };

/// Symmetric sparse operator paired with the mass matrix it is measured
/// against. dim is n for the Laplacian and 3n for the shell Hessian, whose
/// mass replicates the vertex masses once per coordinate.
struct SparseOperator {
  SpMat matrix;
  Vec mass;  // diagonal of the lumped mass matrix, length dim
  OperatorKind kind = OperatorKind::LaplaceBeltrami;

  Index dim() const { return matrix.rows(); }
};

/// Cotangent Laplacian (positive semi-definite, kernel = constants on a
/// connected mesh) together with the barycentric vertex masses.
SparseOperator assemble_laplacian(const Mesh& mesh);

/// Membrane energy of a deformed copy of `ref` whose vertex positions are
/// `deformed` (n x 3). Measures in-plane stretching via the Cauchy-Green
/// tensor of each face; zero when the deformation is an isometry.
double membrane_energy(const Mesh& ref, const Mat& deformed);

/// Bending energy: squared deviation of dihedral angles from their rest
/// values, weighted per interior edge. Boundary edges do not contribute.
double bending_energy(const Mesh& ref, const Mat& deformed);

/// Total shell energy W = membrane + bending_weight * bending.
double elastic_energy(const Mesh& ref, const Mat& deformed,
                      double bending_weight);

/// Gradient of elastic_energy with respect to the deformed positions,
/// returned as n x 3. Used by the Hessian assembly and by tests.
Mat elastic_energy_gradient(const Mesh& ref, const Mat& deformed,
                            double bending_weight);

/// Hessian of the shell energy at the rest configuration (3n x 3n, symmetric
/// positive semi-definite with the rigid motions in its kernel). Coordinates
/// are interleaved per vertex: index 3v+c is coordinate c of vertex v.
SparseOperator assemble_elastic_hessian(const Mesh& mesh,
                                        double bending_weight);

enum class BasisKind { LaplaceBeltrami, Elastic };

/// Truncated generalized eigenbasis of an operator against its mass matrix.
/// Laplacian modes are stored mass-orthonormal (reduced_mass = I); elastic
/// modes are stored as raw normal projections, so reduced_mass carries the
/// actual Gram matrix Psi^T M Psi.
struct SpectralBasis {
  Mat functions;     // n x k, one mode per column
  Vec eigenvalues;   // k, ascending
  Mat reduced_mass;  // k x k, symmetric positive definite
  bool orthonormal = false;  // true iff reduced_mass is the identity
  BasisKind kind = BasisKind::LaplaceBeltrami;

  Index size() const { return functions.cols(); }
  Index num_vertices() const { return functions.rows(); }

  /// First k columns as a basis in their own right (prefix property).
  SpectralBasis truncated(Index k) const;
};

struct EigOptions {
  Index k = 0;                 // number of modes requested
  double shift = -1e-8;        // spectral shift for the inverted operator
  bool drop_kernel = false;    // discard near-zero modes before truncating
  double kernel_tol = 1e-5;    // relative threshold for "near-zero"
  double tol = 1e-10;          // relative residual target
  Index max_iter = 500;
  std::uint64_t seed = 42;
};

/// Smallest-eigenvalue part of the pencil (op.matrix, diag(op.mass)) via
/// shift-inverted block subspace iteration with Rayleigh-Ritz extraction and
/// locking of converged pairs. Deterministic for a fixed seed. Throws
/// ConvergenceError if the requested accuracy is not reached within max_iter
/// iterations.
Mat solve_smallest_eigenpairs(const SparseOperator& op, const EigOptions& opts,
                              Vec& eigenvalues_out);

/// Spectral basis of an operator against its mass: k smallest modes, with
/// near-kernel modes (eigenvalue below kernel_tol relative to the largest
/// computed one) discarded first when drop_kernel is set. Elastic modes are
/// reduced to scalar functions by projecting each per-vertex displacement
/// onto the vertex normal. Throws RankError when fewer than k non-kernel
/// modes exist.
SpectralBasis compute_eigenbasis(const SparseOperator& op, const Mesh& mesh,
                                 Index k, bool drop_kernel,
                                 const EigOptions& base_opts = {});

/// Laplacian basis: k mass-orthonormal modes, eigenvalues ascending,
/// including the constant mode.
SpectralBasis compute_lb_basis(const Mesh& mesh, Index k, std::uint64_t seed = 42);

/// Elastic basis: k modes of the shell Hessian with the rigid-motion kernel
/// removed, each 3n-dimensional mode projected onto the vertex normals to
/// give a scalar function per vertex. Stored unnormalized with its Gram
/// matrix as reduced_mass.
SpectralBasis compute_elastic_basis(const Mesh& mesh, Index k,
                                    double bending_weight,
                                    std::uint64_t seed = 42);

/// A Laplacian and an elastic basis on the same mesh, used jointly.
struct HybridBasis {
  SpectralBasis lb;
  SpectralBasis elastic;

  Index total_size() const { return lb.size() + elastic.size(); }
  HybridBasis truncated(Index k_lb, Index k_elas) const {
    return {lb.truncated(k_lb), elastic.truncated(k_elas)};
  }
};

HybridBasis compute_hybrid_basis(const Mesh& mesh, Index k_lb, Index k_elas,
                                 double bending_weight,
                                 std::uint64_t seed = 42);

}  // namespace hfm
