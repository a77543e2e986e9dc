#pragma once

#include "hybridfm/core.hpp"
#include "hybridfm/mesh.hpp"
#include "hybridfm/operators.hpp"
#include "hybridfm/spectral_algebra.hpp"

#include <string>
#include <vector>

namespace hfm {

enum class DescriptorSource { WKS, HKS, XYZ, External };

/// Per-vertex descriptor functions, one column per descriptor.
struct DescriptorSet {
  Mat values;  // n x d
  std::vector<std::string> names;
  DescriptorSource source = DescriptorSource::External;

  Index count() const { return values.cols(); }
  Index num_vertices() const { return values.rows(); }
};

/// Wave kernel signatures evaluated on a Laplace-Beltrami eigenbasis.
/// Energies are spaced uniformly over the log-eigenvalue range, shrunk by
/// two standard deviations at each end; near-zero eigenvalues are skipped.
DescriptorSet wks(const SpectralBasis& basis, Index num_energies = 100,
                  double variance_scale = 7.0);

/// Heat kernel signatures over log-spaced diffusion times spanning
/// [4 ln 10 / lambda_max, 4 ln 10 / lambda_min] of the nonzero spectrum.
DescriptorSet hks(const SpectralBasis& basis, Index num_times = 100);

/// Raw vertex coordinates as three descriptor columns.
DescriptorSet xyz_descriptors(const Mesh& mesh);

/// Projects descriptor columns into basis coefficients, k x d.
Mat project_descriptors(const DescriptorSet& descriptors,
                        const SpectralBasis& basis, const Mesh& mesh);

}  // namespace hfm
