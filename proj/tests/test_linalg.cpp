#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "sdca_admm/linalg.hpp"

using namespace sdca_admm;

namespace {

SparseColumnMatrix to_sparse(const oracle::Dense& d) {
  return SparseColumnMatrix::from_dense(d.rows, d.cols, d.a);
}

}  // namespace

TEST(Matvec, IdentityReturnsInput) {
  const auto I = SparseColumnMatrix::identity(3);
  EXPECT_EQ(matvec(I, Vector{1, 2, 3}), (Vector{1, 2, 3}));
  EXPECT_EQ(matvec_transpose(I, Vector{1, 2, 3}), (Vector{1, 2, 3}));
}

TEST(Matvec, ZeroMatrixGivesZero) {
  const SparseColumnMatrix Z(4, 3);
  EXPECT_EQ(matvec(Z, Vector{5, -1, 2}), Vector(4, 0.0));
}

TEST(Matvec, TwoByTwoByHand) {
  // columns (1,3) and (2,4)
  const auto M = SparseColumnMatrix::from_columns(2, {{{0, 1.0}, {1, 3.0}}, {{0, 2.0}, {1, 4.0}}});
  EXPECT_EQ(matvec(M, Vector{1, 1}), (Vector{3, 7}));
}

TEST(Matvec, DimensionMismatchThrows) {
  const auto I = SparseColumnMatrix::identity(3);
  EXPECT_THROW(matvec(I, Vector{1, 2}), std::invalid_argument);
  EXPECT_THROW(matvec_transpose(I, Vector{1, 2, 3, 4}), std::invalid_argument);
}

TEST(MatvecTranspose, SingleEntryColumn) {
  // column 1 = 2.5 * e_2
  const auto M = SparseColumnMatrix::from_columns(3, {{}, {{2, 2.5}}});
  const Vector out = matvec_transpose(M, Vector{1, 2, 4});
  EXPECT_DOUBLE_EQ(out[0], 0.0);
  EXPECT_DOUBLE_EQ(out[1], 2.5 * 4.0);
}

TEST(MatvecTranspose, MatchesDenseTranspose) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto D = oracle::random_sparse_dense(5, 4, 0.5, rng);
    oracle::Vec v(5);
    for (auto& e : v) e = unif(rng);
    const Vector got = matvec_transpose(to_sparse(D), v);
    const auto want = oracle::multiply_transpose(D, v);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(got[j], want[j], 1e-12);
  }
}

TEST(MatvecTranspose, GramProductMatchesDense) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unif(-2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto D = oracle::random_sparse_dense(7, 5, 0.4, rng);
    oracle::Vec v(5);
    for (auto& e : v) e = unif(rng);
    const auto M = to_sparse(D);
    const Vector got = matvec_transpose(M, matvec(M, v));
    const auto want = oracle::multiply(oracle::gram(D), v);
    const double scale = 1.0 + *std::max_element(want.begin(), want.end(),
                                                 [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(got[j], want[j], 1e-10 * std::abs(scale));
  }
}

TEST(SparseColumnMatrix, RejectsBadEntries) {
  EXPECT_THROW(SparseColumnMatrix::from_columns(2, {{{2, 1.0}}}), std::invalid_argument);
  EXPECT_THROW(SparseColumnMatrix::from_columns(2, {{{1, 1.0}, {1, 2.0}}}), std::invalid_argument);
  EXPECT_THROW(SparseColumnMatrix::from_columns(2, {{{0, std::nan("")}}}), std::invalid_argument);
}

TEST(SparseColumnMatrix, SortsRowsAndDropsZeros) {
  const auto M = SparseColumnMatrix::from_columns(3, {{{2, 1.0}, {0, 0.0}, {1, -1.0}}});
  ASSERT_EQ(M.nonzeros(), 2u);
  const auto rows = M.column_rows(0);
  EXPECT_EQ(rows[0], 1u);
  EXPECT_EQ(rows[1], 2u);
}

TEST(SelectColumns, AllColumnsInOrderIsIdentity) {
  std::mt19937_64 rng(3);
  const auto M = to_sparse(oracle::random_sparse_dense(4, 3, 0.6, rng));
  EXPECT_EQ(select_columns(M, IndexList{0, 1, 2}), M);
}

TEST(SelectColumns, EmptySelection) {
  const auto M = SparseColumnMatrix::identity(3);
  const auto S = select_columns(M, IndexList{});
  EXPECT_EQ(S.cols(), 0u);
  EXPECT_EQ(S.rows(), 3u);
}

TEST(SelectColumns, ReordersColumns) {
  std::mt19937_64 rng(4);
  const auto D = oracle::random_sparse_dense(4, 3, 0.8, rng);
  const auto S = select_columns(to_sparse(D), IndexList{2, 0});
  const auto dense = S.to_dense();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(dense[i * 2 + 0], D(i, 2));
    EXPECT_EQ(dense[i * 2 + 1], D(i, 0));
  }
}

TEST(SelectColumns, RejectsOutOfRangeAndDuplicates) {
  const auto M = SparseColumnMatrix::identity(3);
  EXPECT_THROW(select_columns(M, IndexList{3}), std::invalid_argument);
  EXPECT_THROW(select_columns(M, IndexList{1, 1}), std::invalid_argument);
}

TEST(SpectralNormGram, Identity) {
  const auto est = spectral_norm_gram(SparseColumnMatrix::identity(5));
  EXPECT_TRUE(est.converged);
  EXPECT_NEAR(est.value, 1.0, 1e-12);
}

TEST(SpectralNormGram, Diagonal) {
  const auto M = SparseColumnMatrix::from_columns(2, {{{0, 3.0}}, {{1, 2.0}}});
  EXPECT_NEAR(spectral_norm_gram(M, 1e-14, 100000).value, 9.0, 1e-9);
}

TEST(SpectralNormGram, MatchesJacobiOracle) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const auto D = oracle::random_sparse_dense(6, 4, 1.0, rng);
    const double want = oracle::max_eigenvalue(oracle::gram(D));
    const auto est = spectral_norm_gram(to_sparse(D), 1e-15, 200000);
    EXPECT_NEAR(est.value, want, 1e-8 * want);
  }
}

TEST(SpectralNormGram, ColumnPermutationAndScaling) {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 10; ++rep) {
    const auto M = to_sparse(oracle::random_sparse_dense(8, 5, 0.7, rng));
    if (M.nonzeros() == 0) continue;
    const double base = spectral_norm_gram(M, 1e-14, 200000).value;
    IndexList perm{3, 1, 4, 0, 2};
    EXPECT_NEAR(spectral_norm_gram(select_columns(M, perm), 1e-14, 200000).value, base, 1e-8 * base);
    EXPECT_NEAR(spectral_norm_gram(M.scaled(-2.5), 1e-14, 200000).value, 6.25 * base, 1e-8 * 6.25 * base);
  }
}

TEST(SpectralNormGram, ReportsNonConvergence) {
  // two nearly equal singular values make power iteration slow
  const auto M = SparseColumnMatrix::from_columns(2, {{{0, 1.0}}, {{1, 1.0 - 1e-9}}});
  const auto est = spectral_norm_gram(M, 1e-16, 3);
  EXPECT_FALSE(est.converged);
  EXPECT_EQ(est.iterations, 3u);
  EXPECT_GT(est.value, 0.0);
}

TEST(SpectralNormGram, RejectsEmpty) {
  EXPECT_THROW(spectral_norm_gram(SparseColumnMatrix(3, 0)), std::invalid_argument);
}
