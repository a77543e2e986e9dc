#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hfm {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };
struct EmptyMeshError : Error { using Error::Error; };
struct DegenerateMeshError : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct BoundaryError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct RankError : Error { using Error::Error; };
struct NotSPD : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
using DimensionError = DimensionMismatch;
struct SingularSystem : Error { using Error::Error; };
struct ScheduleError : Error { using Error::Error; };
struct EmptyEmbedding : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct InsufficientSpectrum : Error { using Error::Error; };

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionMismatch(msg);
}

/// Deterministic 64-bit PRNG; all stochastic pieces (eigensolver start
/// vectors, test instances) draw from one of these with an explicit seed.
using Rng = std::mt19937_64;

inline Vec random_unit_vector(Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
  double norm = v.norm();
  if (norm == 0.0) v[0] = 1.0; else v /= norm;
  return v;
}

}  // namespace hfm
