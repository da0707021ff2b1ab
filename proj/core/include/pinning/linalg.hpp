#pragma once

// Small dense linear algebra and graph structure for coupling matrices.
//
// Everything here works on m x m matrices with m in the tens, so the
// algorithms favour determinism over asymptotic speed.

#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pinning/errors.hpp"

namespace pinning {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Spectrum of a symmetric matrix. Eigenvalues are sorted descending and
/// column k of `eigenvectors` belongs to `eigenvalues[k]`.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Strongly connected components of the directed graph of a coupling matrix,
/// where a_ij > 0 (i != j) is an edge j -> i. Blocks are ordered so that the
/// permuted matrix is block lower-triangular: every cross-block edge goes
/// from an earlier block to a later one.
struct Condensation {
  /// 0-based node indices; each block sorted ascending.
  std::vector<std::vector<std::size_t>> blocks;
  /// (later block, earlier block) pairs joined by at least one nonzero entry.
  std::set<std::pair<std::size_t, std::size_t>> block_edges;

  std::size_t block_count() const { return blocks.size(); }
  bool irreducible() const { return blocks.size() == 1; }
  /// Index of the block containing `node`.
  std::size_t block_of(std::size_t node) const;
  /// Concatenated block order, a permutation of 0..m-1.
  std::vector<std::size_t> order() const;
  /// Blocks receiving no cross-block input.
  std::vector<std::size_t> root_blocks() const;
};

/// Raised when an operation needs an irreducible matrix.
class ReducibilityError : public Error {
 public:
  ReducibilityError(const std::string& what, Condensation condensation)
      : Error(what), condensation_(std::move(condensation)) {}

  const Condensation& condensation() const { return condensation_; }

 private:
  Condensation condensation_;
};

/// Absolute tolerance used for the symmetry precondition.
inline constexpr double kSymmetryTolerance = 1e-12;

/// max_i sum_j |a_ij|
double inf_norm(const Matrix& a);

/// True when `value` is negative beyond numerical noise relative to `scale`:
/// value < -1e-9 * (1 + |scale|).
bool is_strictly_negative(double value, double scale);

/// Throws DomainError unless `a` is square with finite entries.
void require_square_finite(const Matrix& a, const char* what);

/// Cyclic Jacobi eigensolver. Throws SymmetryError when `a` is asymmetric by
/// more than kSymmetryTolerance and DomainError on non-finite input.
EigenDecomposition sym_eigen(const Matrix& a);

/// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue(const Matrix& a);

/// Largest eigenvalue of (a + a^T) / 2.
double max_eigenvalue_of_symmetric_part(const Matrix& a);

Condensation scc_condensation(const Matrix& a);

/// Left null vector xi of a zero-row-sum matrix, xi^T a = 0, normalized to
/// sum(xi) = 1. With `require_irreducible` set, reducible input raises
/// ReducibilityError carrying the condensation.
Vector left_null_vector(const Matrix& a, bool require_irreducible = true);

/// (Xi a + a^T Xi) / 2 with Xi = diag(xi); xi must be strictly positive.
Matrix symmetrize_weighted(const Matrix& a, const Vector& xi);

}  // namespace pinning
