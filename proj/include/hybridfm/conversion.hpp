#pragma once

#include "hybridfm/core.hpp"
#include "hybridfm/fmap.hpp"
#include "hybridfm/mesh.hpp"
#include "hybridfm/operators.hpp"
#include "hybridfm/spectral_algebra.hpp"

#include <utility>
#include <vector>

namespace hfm {

// Direction conventions, used consistently below: a FunctionalMap takes
// functions on shape 1 to shape 2, while a Correspondence assigns to every
// vertex of shape 2 a vertex of shape 1.

/// Per-vertex coordinates used for nearest-neighbor matching.
struct SpectralEmbedding {
  Mat coords;  // n x k, one row per vertex

  Index size() const { return coords.rows(); }
  Index width() const { return coords.cols(); }
};

/// Embeddings whose nearest-neighbor pairs realize the pointwise map that
/// best matches C. Rows of the first embedding come from the columns of
/// sqrt(M_2) C M_1^-1 Psi_1^T, rows of the second from sqrt(M_2^-1) Psi_2^T;
/// with orthonormal bases these reduce to Phi_1 C^T and Phi_2.
std::pair<SpectralEmbedding, SpectralEmbedding> embed_for_matching(
    const FunctionalMap& map, const SpectralBasis& basis1,
    const SpectralBasis& basis2, const WeightedSpace& space1,
    const WeightedSpace& space2);

/// For every row of emb2, the index of the nearest row of emb1 in Euclidean
/// distance; ties go to the smallest index. Dispatches to a linear scan for
/// small inputs and a KD-tree beyond 20k reference rows; both tie-break
/// identically.
Correspondence extract_p2p(const SpectralEmbedding& emb1,
                           const SpectralEmbedding& emb2);

/// The two search strategies behind extract_p2p, exposed so their exact
/// agreement (including ties) can be checked directly.
Correspondence extract_p2p_scan(const SpectralEmbedding& emb1,
                                const SpectralEmbedding& emb2);
Correspondence extract_p2p_tree(const SpectralEmbedding& emb1,
                                const SpectralEmbedding& emb2);

/// Joint nearest-neighbor search over the concatenated per-block
/// embeddings of a hybrid map. An empty elastic block degenerates to the
/// single-basis search on the LB block.
Correspondence extract_p2p_hybrid(const HybridMap& map,
                                  const HybridBasis& hybrid1,
                                  const HybridBasis& hybrid2);

/// Spectral encoding of a pointwise correspondence: C = Psi_2^dagger
/// applied to the rows of Psi_1 gathered by the correspondence. The
/// permutation matrix is never materialized.
FunctionalMap encode_gt(const Correspondence& pi, const SpectralBasis& basis1,
                        const SpectralBasis& basis2, const Mesh& mesh2);

/// Spectral upsampling: alternately converts the map to a pointwise
/// correspondence at the current resolution and re-encodes it at the next
/// size from the schedule of (k1, k2) targets. Sizes must be nondecreasing
/// and start at or above the input map's size. The correspondence from the
/// last round is written to last_pi when given.
FunctionalMap zoomout(const FunctionalMap& c0, const SpectralBasis& basis1,
                      const SpectralBasis& basis2, const Mesh& mesh2,
                      const std::vector<std::pair<Index, Index>>& schedule,
                      Correspondence* last_pi = nullptr);

/// Hybrid upsampling: one joint pointwise search per round, then each block
/// is re-encoded in its own basis. Schedule entries are (k_lb, k_elas),
/// applied to both shapes; a zero elastic target drops that block.
HybridMap zoomout_hybrid(const HybridMap& h0, const HybridBasis& hybrid1,
                         const HybridBasis& hybrid2, const Mesh& mesh2,
                         const std::vector<std::pair<Index, Index>>& schedule,
                         Correspondence* last_pi = nullptr);

}  // namespace hfm
