#pragma once

#include "hybridfm/core.hpp"
#include "hybridfm/mesh.hpp"
#include "hybridfm/operators.hpp"
#include "hybridfm/spectral_algebra.hpp"

namespace hfm {

/// Linear map between coefficient spaces, taking functions on the source
/// shape (1) to functions on the target shape (2). The matrix is k2 x k1.
struct FunctionalMap {
  Mat matrix;
  BasisKind domain_kind = BasisKind::LaplaceBeltrami;
  BasisKind range_kind = BasisKind::LaplaceBeltrami;
  int source_shape = 1;
  int target_shape = 2;
};

/// Map over a hybrid basis. Coupling between the two basis families is
/// forced to zero, so only the diagonal blocks exist.
struct HybridMap {
  FunctionalMap lb_block;
  FunctionalMap elastic_block;
};

/// Closed-form solver for orthonormal bases: minimizes
///   |C D1 - D2|_F^2 + lambda |C L1 - L2 C|_F^2
/// one row of C at a time, each row being an independent k1 x k1 system.
FunctionalMap solve_standard(const Mat& d1, const Mat& d2, const Vec& evals1,
                             const Vec& evals2, double lambda);

/// Solver for non-orthonormal bases under the mass-weighted norm: minimizes
///   |sqrt(M2)(C D1 - D2)|_F^2
///     + lambda |sqrt(M2)(C L1 - L2 C) sqrt(M1^-1)|_F^2
/// by assembling the k^2 x k^2 normal equations. Requires k1 = k2 <= 128.
FunctionalMap solve_hs(const Mat& d1, const Mat& d2, const Vec& evals1,
                       const Vec& evals2, const WeightedSpace& space1,
                       const WeightedSpace& space2, double lambda);

struct StandardInputs {
  Mat d1, d2;
  Vec evals1, evals2;
  double lambda = 1e-3;
};

struct HsInputs {
  Mat d1, d2;
  Vec evals1, evals2;
  WeightedSpace space1, space2;
  double lambda = 5e-4;
};

/// Block-diagonal solve over a hybrid basis. The joint problem separates,
/// so each block is handled by its own solver.
HybridMap solve_hybrid(const StandardInputs& lb_inputs,
                       const HsInputs& elastic_inputs);

/// Objective values of the two solvers, for diagnostics and tests.
double standard_energy(const Mat& c, const Mat& d1, const Mat& d2,
                       const Vec& evals1, const Vec& evals2, double lambda);
double hs_energy(const Mat& c, const Mat& d1, const Mat& d2,
                 const Vec& evals1, const Vec& evals2,
                 const WeightedSpace& space1, const WeightedSpace& space2,
                 double lambda);

/// |C12 C21 - I|_F^2 + |C21 C12 - I|_F^2.
double loss_bijectivity(const FunctionalMap& c12, const FunctionalMap& c21);

/// |C12* C12 - I|_F^2 + |C21* C21 - I|_F^2 with mass-weighted adjoints.
/// Both products act on a single space, where the weighted and Frobenius
/// norms agree.
double loss_orthogonality_hs(const FunctionalMap& c12,
                             const FunctionalMap& c21,
                             const WeightedSpace& space1,
                             const WeightedSpace& space2);

/// Residual between the maps and the ones induced by pointwise
/// correspondences, in the mass-weighted norm. pi21 sends vertices of
/// shape 2 to shape 1 and grounds C12; pi12 mirrors it. The permutation
/// matrices are realized as row gathers.
double loss_couple_hs(const FunctionalMap& c12, const FunctionalMap& c21,
                      const Correspondence& pi12, const Correspondence& pi21,
                      const SpectralBasis& basis1, const SpectralBasis& basis2,
                      const Mesh& mesh1, const Mesh& mesh2,
                      const WeightedSpace& space1, const WeightedSpace& space2);

/// Mass-weighted squared distance to a ground-truth map.
double loss_gt_hs(const FunctionalMap& c, const FunctionalMap& c_gt,
                  const WeightedSpace& space1, const WeightedSpace& space2);

struct AnnealState {
  double mu;     // ramp weight in [0, 1]
  double alpha;  // entry-count normalization of the full matrix vs LB block
  double beta;   // same vs elastic block
};

/// Linear ramp mu = min(step/ramp_steps, 1) plus the per-block loss scales
/// alpha = k^2/(2 k_lb^2), beta = k^2/(2 k_elas^2).
AnnealState annealing_and_scales(Index step, Index ramp_steps, Index k_total,
                                 Index k_lb, Index k_elas);

}  // namespace hfm
