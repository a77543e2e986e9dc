#include "hybridfm/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace hfm {

namespace {

// Indices of eigenvalues that are safely away from zero; the kernel modes
// carry no spectral localization and would blow up the log/(1/lambda) maps.
std::vector<Index> nonzero_modes(const Vec& eigenvalues) {
  std::vector<Index> kept;
  if (eigenvalues.size() == 0) return kept;
  double scale = eigenvalues.cwiseAbs().maxCoeff();
  if (scale <= 0.0) return kept;
  for (Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues[i] > 1e-8 * scale) kept.push_back(i);
  return kept;
}

void check_finite(const Mat& values, const char* what) {
  if (!values.allFinite())
    throw NumericalError(std::string(what) + " produced non-finite values");
}

}  // namespace

DescriptorSet wks(const SpectralBasis& basis, Index num_energies,
                  double variance_scale) {
  require(num_energies >= 1, "need at least one energy");
  require(variance_scale > 0.0, "variance scale must be positive");

  std::vector<Index> modes = nonzero_modes(basis.eigenvalues);
  if (modes.size() < 2)
    throw InsufficientSpectrum(
        "wave kernel signatures need at least two nonzero eigenvalues, got " +
        std::to_string(modes.size()));

  double log_lo = std::log(basis.eigenvalues[modes.front()]);
  double log_hi = std::log(basis.eigenvalues[modes.back()]);
  if (!(log_hi > log_lo))
    throw InsufficientSpectrum("nonzero spectrum has no spread");

  double sigma = variance_scale * (log_hi - log_lo) /
                 static_cast<double>(num_energies);
  double e_lo = log_lo + 2.0 * sigma;
  double e_hi = log_hi - 2.0 * sigma;

  Index n = basis.num_vertices();
  Mat squared(n, static_cast<Index>(modes.size()));
  for (size_t m = 0; m < modes.size(); ++m)
    squared.col(static_cast<Index>(m)) =
        basis.functions.col(modes[m]).array().square();

  DescriptorSet out;
  out.values.resize(n, num_energies);
  out.source = DescriptorSource::WKS;
  for (Index e = 0; e < num_energies; ++e) {
    double energy =
        num_energies == 1
            ? 0.5 * (e_lo + e_hi)
            : e_lo + (e_hi - e_lo) * static_cast<double>(e) /
                         static_cast<double>(num_energies - 1);
    Vec weights(static_cast<Index>(modes.size()));
    for (size_t m = 0; m < modes.size(); ++m) {
      double gap = energy - std::log(basis.eigenvalues[modes[m]]);
      weights[static_cast<Index>(m)] =
          std::exp(-gap * gap / (2.0 * sigma * sigma));
    }
    double total = weights.sum();
    if (total <= 0.0)
      throw NumericalError("wave kernel weights vanished at an energy");
    out.values.col(e) = squared * (weights / total);
    out.names.push_back("wks_e" + std::to_string(e));
  }
  check_finite(out.values, "wave kernel signature");
  return out;
}

DescriptorSet hks(const SpectralBasis& basis, Index num_times) {
  require(num_times >= 1, "need at least one diffusion time");

  std::vector<Index> modes = nonzero_modes(basis.eigenvalues);
  if (modes.empty())
    throw InsufficientSpectrum(
        "heat kernel signatures need a nonzero eigenvalue");

  double lambda_lo = basis.eigenvalues[modes.front()];
  double lambda_hi = basis.eigenvalues[modes.back()];
  double t_lo = 4.0 * std::log(10.0) / lambda_hi;
  double t_hi = 4.0 * std::log(10.0) / lambda_lo;
  double log_t_lo = std::log(t_lo);
  double log_t_hi = std::log(t_hi);

  Index n = basis.num_vertices();
  Mat squared(n, static_cast<Index>(modes.size()));
  for (size_t m = 0; m < modes.size(); ++m)
    squared.col(static_cast<Index>(m)) =
        basis.functions.col(modes[m]).array().square();

  DescriptorSet out;
  out.values.resize(n, num_times);
  out.source = DescriptorSource::HKS;
  for (Index s = 0; s < num_times; ++s) {
    double log_t =
        num_times == 1
            ? 0.5 * (log_t_lo + log_t_hi)
            : log_t_lo + (log_t_hi - log_t_lo) * static_cast<double>(s) /
                             static_cast<double>(num_times - 1);
    double t = std::exp(log_t);
    Vec weights(static_cast<Index>(modes.size()));
    for (size_t m = 0; m < modes.size(); ++m)
      weights[static_cast<Index>(m)] =
          std::exp(-basis.eigenvalues[modes[m]] * t);
    out.values.col(s) = squared * weights;
    out.names.push_back("hks_t" + std::to_string(s));
  }
  check_finite(out.values, "heat kernel signature");
  return out;
}

DescriptorSet xyz_descriptors(const Mesh& mesh) {
  DescriptorSet out;
  out.values = mesh.vertices;
  out.names = {"x", "y", "z"};
  out.source = DescriptorSource::XYZ;
  return out;
}

Mat project_descriptors(const DescriptorSet& descriptors,
                        const SpectralBasis& basis, const Mesh& mesh) {
  require(descriptors.num_vertices() == mesh.num_vertices(),
          "descriptor rows must match the mesh vertex count");
  return projector(basis, mesh).apply(descriptors.values);
}

}  // namespace hfm
