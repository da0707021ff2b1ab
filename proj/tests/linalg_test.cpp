#include "pinning/linalg.hpp"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace pinning {
namespace {

Matrix mat3(std::initializer_list<double> v) {
  Matrix a(3, 3);
  auto it = v.begin();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = *it++;
  }
  return a;
}

TEST(SymEigen, OneByOne) {
  Matrix a(1, 1);
  a << -1.0;
  const auto eig = sym_eigen(a);
  ASSERT_EQ(eig.eigenvalues.size(), 1);
  EXPECT_DOUBLE_EQ(eig.eigenvalues(0), -1.0);
  EXPECT_DOUBLE_EQ(std::abs(eig.eigenvectors(0, 0)), 1.0);
}

TEST(SymEigen, TwoByTwoMatchesQuadraticFormula) {
  Matrix a(2, 2);
  a << -2.0, 1.0, 1.0, -1.0;
  const auto eig = sym_eigen(a);
  EXPECT_NEAR(eig.eigenvalues(0), (-3.0 + std::sqrt(5.0)) / 2.0, 1e-14);
  EXPECT_NEAR(eig.eigenvalues(1), (-3.0 - std::sqrt(5.0)) / 2.0, 1e-14);
}

TEST(SymEigen, ExamplePinnedMatrixAgainstCharacteristicPolynomial) {
  const Matrix a = mat3({-10.0, 5.0, 0.1, 5.0, -11.0, 6.0, 0.1, 6.0, -6.1});
  const auto eig = sym_eigen(a);
  const auto roots = oracle::char_poly_roots(a);
  ASSERT_EQ(roots.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(eig.eigenvalues(k), roots[k], 1e-9);
  EXPECT_NEAR(eig.eigenvalues(0), -1.011, 1e-3);
  EXPECT_NEAR(10.0 * eig.eigenvalues(0), -10.11, 0.02);
}

TEST(SymEigen, DecompositionInvariants) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto rng = oracle::case_rng(7, seed);
    std::uniform_int_distribution<int> size(1, 15);
    std::uniform_real_distribution<double> unit(-5.0, 5.0);
    const int m = size(rng);
    Matrix a(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = i; j < m; ++j) a(i, j) = a(j, i) = unit(rng);
    }
    const auto eig = sym_eigen(a);
    const double tol = 1e-9 * (1.0 + inf_norm(a));
    for (int k = 0; k < m; ++k) {
      const Vector residual = a * eig.eigenvectors.col(k) - eig.eigenvalues(k) * eig.eigenvectors.col(k);
      EXPECT_LE(residual.cwiseAbs().maxCoeff(), tol);
      if (k > 0) EXPECT_GE(eig.eigenvalues(k - 1), eig.eigenvalues(k));
    }
    const Matrix gram = eig.eigenvectors.transpose() * eig.eigenvectors;
    EXPECT_LE((gram - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-9);
    const Matrix rebuilt =
        eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
    EXPECT_LE((rebuilt - a).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SymEigen, RejectsAsymmetricAndNonFinite) {
  Matrix a(2, 2);
  a << -1.0, 1.0, 0.5, -1.0;
  EXPECT_THROW(sym_eigen(a), SymmetryError);
  a << -1.0, std::numeric_limits<double>::quiet_NaN(), 1.0, -1.0;
  EXPECT_THROW(sym_eigen(a), DomainError);
  EXPECT_THROW(sym_eigen(Matrix(2, 3)), DomainError);
}

TEST(SymEigen, ZeroRowSumHasConsensusMode) {
  const Matrix a = mat3({-5.1, 5.0, 0.1, 5.0, -11.0, 6.0, 0.1, 6.0, -6.1});
  const auto eig = sym_eigen(a);
  EXPECT_NEAR(eig.eigenvalues(0), 0.0, 1e-9);
  const Vector w = eig.eigenvectors.col(0);
  EXPECT_NEAR(std::abs(w.sum()) / std::sqrt(3.0), 1.0, 1e-9);
  EXPECT_LT(eig.eigenvalues(1), 0.0);
}

TEST(LeftNullVector, SymmetricPairIsUniform) {
  Matrix a(2, 2);
  a << -1.0, 1.0, 1.0, -1.0;
  const Vector xi = left_null_vector(a);
  EXPECT_NEAR(xi(0), 0.5, 1e-12);
  EXPECT_NEAR(xi(1), 0.5, 1e-12);
}

TEST(LeftNullVector, ExampleAsymmetricMatrix) {
  const Matrix a = mat3({-2, 1, 1, 1, -2, 1, 0, 1, -1});
  const Vector xi = left_null_vector(a);
  EXPECT_NEAR(xi(0), 1.0 / 6.0, 1e-10);
  EXPECT_NEAR(xi(1), 2.0 / 6.0, 1e-10);
  EXPECT_NEAR(xi(2), 3.0 / 6.0, 1e-10);
  EXPECT_LE((a.transpose() * xi).cwiseAbs().maxCoeff(), 1e-10 * inf_norm(a));
}

TEST(LeftNullVector, DirectedCycle) {
  const Matrix a = mat3({-1, 1, 0, 0, -1, 1, 1, 0, -1});
  const Vector xi = left_null_vector(a);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(xi(i), 1.0 / 3.0, 1e-12);
}

TEST(LeftNullVector, ScaleInvariant) {
  const Matrix a = mat3({-2, 1, 1, 1, -2, 1, 0, 1, -1});
  const Vector xi = left_null_vector(a);
  for (double gamma : {1e-3, 0.5, 7.0, 1e4}) {
    EXPECT_LE((left_null_vector(gamma * a) - xi).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LeftNullVector, ReducibleInputCarriesCondensation) {
  const Matrix a = mat3({-1, 1, 0, 1, -1, 0, 1, 1, -2});
  try {
    left_null_vector(a, true);
    FAIL() << "expected ReducibilityError";
  } catch (const ReducibilityError& e) {
    EXPECT_EQ(e.condensation().block_count(), 2u);
  }
  // Without the irreducibility requirement the root block carries the mass.
  const Vector xi = left_null_vector(a, false);
  EXPECT_NEAR(xi(2), 0.0, 1e-10);
  EXPECT_NEAR(xi(0) + xi(1), 1.0, 1e-12);
}

TEST(LeftNullVector, RejectsNonZeroRowSums) {
  Matrix a(2, 2);
  a << -1.0, 0.5, 1.0, -1.0;
  EXPECT_THROW(left_null_vector(a), DomainError);
}

TEST(SccCondensation, IrreducibleIsOneBlock) {
  const auto c = scc_condensation(mat3({-2, 1, 1, 1, -2, 1, 0, 1, -1}));
  ASSERT_EQ(c.block_count(), 1u);
  EXPECT_EQ(c.blocks[0], (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(c.block_edges.empty());
}

TEST(SccCondensation, TwoBlocks) {
  const auto c = scc_condensation(mat3({-1, 1, 0, 1, -1, 0, 1, 1, -2}));
  ASSERT_EQ(c.block_count(), 2u);
  EXPECT_EQ(c.blocks[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(c.blocks[1], (std::vector<std::size_t>{2}));
  EXPECT_EQ(c.block_edges, (std::set<std::pair<std::size_t, std::size_t>>{{1, 0}}));
  EXPECT_EQ(c.root_blocks(), (std::vector<std::size_t>{0}));
}

TEST(SccCondensation, SingleNode) {
  Matrix a(1, 1);
  a << 0.0;
  const auto c = scc_condensation(a);
  ASSERT_EQ(c.block_count(), 1u);
  EXPECT_EQ(c.blocks[0], (std::vector<std::size_t>{0}));
}

TEST(SccCondensation, MatchesReachabilityOracleAndIsBlockLowerTriangular) {
  for (std::uint64_t k = 0; k < 300; ++k) {
    auto rng = oracle::case_rng(11, k);
    std::uniform_int_distribution<int> size(1, 9);
    const int m = size(rng);
    // Sparse directed graphs to get plenty of reducible cases.
    std::bernoulli_distribution edge(0.25);
    Matrix a = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (i != j && edge(rng)) a(i, j) = 1.0;
      }
      a(i, i) = -a.row(i).sum();
    }
    const auto c = scc_condensation(a);
    const auto reach = oracle::reachability(a);
    const auto order = c.order();
    ASSERT_EQ(order.size(), static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
        const bool same = reach[ui][uj] && reach[uj][ui];
        EXPECT_EQ(same, c.block_of(ui) == c.block_of(uj));
        // Nonzero entry a_ij: j's block is no later than i's block.
        if (i != j && a(i, j) > 0.0) EXPECT_LE(c.block_of(uj), c.block_of(ui));
      }
    }
    for (const auto& [later, earlier] : c.block_edges) EXPECT_GT(later, earlier);
  }
}

TEST(SymmetrizeWeighted, UniformWeightsScale) {
  const Matrix a = mat3({-5.1, 5.0, 0.1, 5.0, -11.0, 6.0, 0.1, 6.0, -6.1});
  const Matrix out = symmetrize_weighted(a, Vector::Constant(3, 1.0 / 3.0));
  EXPECT_LE((out - a / 3.0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SymmetrizeWeighted, ExamplePinnedMatrix) {
  const Matrix a = mat3({-4, 1, 1, 1, -2, 1, 0, 1, -1});
  Vector xi(3);
  xi << 1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0;
  const Matrix expected =
      mat3({-2.0 / 3.0, 0.25, 1.0 / 12.0, 0.25, -2.0 / 3.0, 5.0 / 12.0, 1.0 / 12.0, 5.0 / 12.0, -0.5});
  const Matrix out = symmetrize_weighted(a, xi);
  EXPECT_LE((out - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(out, out.transpose());
}

TEST(SymmetrizeWeighted, ZeroMatrixAndBadWeights) {
  Vector xi(3);
  xi << 0.2, 0.3, 0.5;
  EXPECT_EQ(symmetrize_weighted(Matrix::Zero(3, 3), xi), Matrix::Zero(3, 3));
  xi(1) = 0.0;
  EXPECT_THROW(symmetrize_weighted(Matrix::Zero(3, 3), xi), DomainError);
  EXPECT_THROW(symmetrize_weighted(Matrix::Zero(3, 3), Vector::Ones(2)), DomainError);
}

TEST(Tolerance, StrictNegativity) {
  EXPECT_TRUE(is_strictly_negative(-1e-6, 1.0));
  EXPECT_FALSE(is_strictly_negative(-1e-12, 1.0));
  EXPECT_FALSE(is_strictly_negative(0.0, 0.0));
}

}  // namespace
}  // namespace pinning
