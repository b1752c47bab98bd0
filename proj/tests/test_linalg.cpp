#include <gtest/gtest.h>

#include <cmath>

#include "gmrfsel/linalg.hpp"
#include "gmrfsel/model.hpp"
#include "oracles.hpp"

using namespace gmrfsel;

namespace {

SupportedMatrix mat(std::initializer_list<std::initializer_list<double>> rows, IndexSet support = {}) {
  const int k = static_cast<int>(rows.size());
  Eigen::MatrixXd b(k, k);
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) b(i, j++) = v;
    ++i;
  }
  if (support.empty())
    for (int v = 0; v < k; ++v) support.push_back(v);
  const int n = support.back() + 1;
  return SupportedMatrix(n, support, b);
}

SupportedMatrix random_supported(int n, Rng& rng, unsigned seed) {
  IndexSet support;
  for (int v = 0; v < n; ++v)
    if (rng.bernoulli(0.7)) support.push_back(v);
  if (support.empty()) support.push_back(rng.below(n));
  return SupportedMatrix(n, support, oracle::random_pd(static_cast<int>(support.size()), seed));
}

IndexSet random_subset_of(const IndexSet& s, Rng& rng) {
  IndexSet out;
  for (int v : s)
    if (rng.bernoulli(0.4)) out.push_back(v);
  return out;
}

}  // namespace

TEST(SupportedMatrix, RejectsAsymmetricBlock) {
  Eigen::MatrixXd b(2, 2);
  b << 1, 0.5, 0.4, 1;
  EXPECT_THROW(SupportedMatrix(2, {0, 1}, b), Error);
}

TEST(SupportedMatrix, EntriesOutsideSupportAreZero) {
  const SupportedMatrix m = mat({{2, -1}, {-1, 2}}, {1, 3});
  EXPECT_EQ(m.ambient_dim(), 4);
  EXPECT_DOUBLE_EQ(m.entry(1, 3), -1.0);
  EXPECT_DOUBLE_EQ(m.entry(0, 0), 0.0);
  EXPECT_EQ(m.local_index(3), 1);
  EXPECT_EQ(m.local_index(2), -1);
}

TEST(SupportedMatrix, CheckPsdFlagsNegativeEigenvalue) {
  EXPECT_NO_THROW(mat({{1, 0}, {0, 0}}).check_psd());
  EXPECT_THROW(mat({{1, 2}, {2, 1}}).check_psd(), Error);
}

TEST(Obs, EmptySetLeavesMatrixUnchanged) {
  const SupportedMatrix m = mat({{2, -1, 0}, {-1, 2, -1}, {0, -1, 2}});
  EXPECT_EQ(obs(m, {}).dense(), m.dense());
}

TEST(Obs, FullSetGivesEmptySupport) {
  const SupportedMatrix m = mat({{2, -1}, {-1, 2}});
  const SupportedMatrix r = obs(m, {0, 1});
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.ambient_dim(), 2);
  EXPECT_TRUE(r.dense().isZero());
}

TEST(Obs, MiddleOfUnitPathLeavesTwoIsolatedEnds) {
  const SupportedMatrix lap = laplacian(GffModel(3, {{0, 1, 1.0}, {1, 2, 1.0}}));
  const SupportedMatrix r = obs(lap, {1});
  EXPECT_EQ(r.support(), (IndexSet{0, 2}));
  EXPECT_DOUBLE_EQ(r.entry(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(r.entry(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(r.entry(0, 2), 0.0);
}

TEST(Obs, RejectsIndexOutsideSupport) {
  const SupportedMatrix m = mat({{1}}, {2});
  try {
    obs(m, {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfSupport);
  }
}

TEST(Marginal, KeepingEverythingIsIdentity) {
  const SupportedMatrix m = mat({{3, 1}, {1, 2}});
  EXPECT_TRUE(marginal(m, {0, 1}).dense().isApprox(m.dense()));
}

TEST(Marginal, TwoByTwoMatchesInverseOfCovarianceEntry) {
  const SupportedMatrix m = mat({{2, -1}, {-1, 2}});
  const SupportedMatrix r = marginal(m, {0});
  // Marginal precision is the inverse of the marginal covariance.
  const double via_inverse = 1.0 / m.dense().inverse()(0, 0);
  EXPECT_NEAR(r.entry(0, 0), 1.5, 1e-14);
  EXPECT_NEAR(r.entry(0, 0), via_inverse, 1e-14);
}

TEST(Marginal, DiagonalMatrixKeepsDiagonalSubmatrix) {
  const SupportedMatrix m = mat({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}});
  const SupportedMatrix r = marginal(m, {0, 2});
  EXPECT_EQ(r.support(), (IndexSet{0, 2}));
  EXPECT_DOUBLE_EQ(r.entry(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(r.entry(2, 2), 3.0);
  EXPECT_DOUBLE_EQ(r.entry(0, 2), 0.0);
}

TEST(Marginal, SingularEliminatedBlockIsReported) {
  const SupportedMatrix m = mat({{1, 0}, {0, 0}});
  try {
    marginal(m, {0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularComplement);
  }
}

TEST(Marginal, MatchesInverseOfCovarianceBlock) {
  Rng rng(5);
  for (unsigned t = 0; t < 30; ++t) {
    const Eigen::MatrixXd p = oracle::random_pd(6, 100 + t);
    const SupportedMatrix m = SupportedMatrix::full(p);
    const IndexSet keep = make_index_set({0, 2 + rng.below(4)});
    const Eigen::MatrixXd cov = p.inverse();
    Eigen::MatrixXd cov_keep(2, 2);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) cov_keep(a, b) = cov(keep[a], keep[b]);
    EXPECT_TRUE(marginal(m, keep).block().isApprox(cov_keep.inverse(), 1e-10));
  }
}

TEST(Marginal, CommutesWithObservation) {
  Rng rng(11);
  for (unsigned t = 0; t < 40; ++t) {
    const SupportedMatrix m = SupportedMatrix::full(oracle::random_pd(6, 200 + t));
    const IndexSet o = random_subset_of(m.support(), rng);
    const IndexSet delta = make_index_set({rng.below(6), rng.below(6), rng.below(6)});
    const IndexSet keep = set_difference(delta, o);
    const SupportedMatrix a = marginal(obs(m, o), keep);
    // Restrict first by hand, then take the Schur complement directly.
    const IndexSet alive = set_difference(m.support(), o);
    const IndexSet drop = set_difference(alive, keep);
    Eigen::MatrixXd kk(keep.size(), keep.size()), kd(keep.size(), drop.size()), dd(drop.size(), drop.size());
    for (size_t i = 0; i < keep.size(); ++i) {
      for (size_t j = 0; j < keep.size(); ++j) kk(i, j) = m.entry(keep[i], keep[j]);
      for (size_t j = 0; j < drop.size(); ++j) kd(i, j) = m.entry(keep[i], drop[j]);
    }
    for (size_t i = 0; i < drop.size(); ++i)
      for (size_t j = 0; j < drop.size(); ++j) dd(i, j) = m.entry(drop[i], drop[j]);
    const Eigen::MatrixXd expect = drop.empty() ? kk : Eigen::MatrixXd(kk - kd * dd.inverse() * kd.transpose());
    EXPECT_EQ(a.support(), keep);
    if (!keep.empty()) EXPECT_TRUE(a.block().isApprox(expect, 1e-10));
  }
}

TEST(TraceOfInverse, DiagonalIsSumOfReciprocals) {
  EXPECT_NEAR(trace_of_inverse(mat({{2, 0}, {0, 4}})), 0.75, 1e-15);
}

TEST(TraceOfInverse, EmptySupportIsZero) { EXPECT_EQ(trace_of_inverse(SupportedMatrix(3)), 0.0); }

TEST(TraceOfInverse, TwoByTwoByHand) { EXPECT_NEAR(trace_of_inverse(mat({{2, -1}, {-1, 2}})), 4.0 / 3.0, 1e-15); }

TEST(TraceOfInverse, SingularInputIsReported) {
  try {
    trace_of_inverse(mat({{1, 1}, {1, 1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularMatrix);
  }
}

TEST(TraceOfInverse, AgreesWithDenseInverse) {
  for (unsigned t = 0; t < 50; ++t) {
    const Eigen::MatrixXd p = oracle::random_pd(2 + t % 7, 300 + t, 0.05);
    const double expect = p.fullPivLu().inverse().trace();
    EXPECT_NEAR(trace_of_inverse(SupportedMatrix::full(p)), expect, 1e-9 * expect);
  }
}

TEST(EigExtremes, Identity) {
  const auto e = eig_extremes(mat({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_NEAR(e.min_nonzero, 1.0, 1e-14);
  EXPECT_NEAR(e.max, 1.0, 1e-14);
}

TEST(EigExtremes, Diagonal) {
  const auto e = eig_extremes(mat({{0.5, 0}, {0, 3}}));
  EXPECT_NEAR(e.min_nonzero, 0.5, 1e-14);
  EXPECT_NEAR(e.max, 3.0, 1e-14);
}

TEST(EigExtremes, CompleteGraphLaplacianWithoutFirstVertex) {
  std::vector<Edge> edges;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) edges.push_back({i, j, 2.5});
  const SupportedMatrix r = obs(laplacian(GffModel(5, edges)), {0});
  const auto e = eig_extremes(r);
  EXPECT_NEAR(e.min_nonzero, 0.4, 1e-12);
  EXPECT_NEAR(e.max, 2.0, 1e-12);
}

TEST(EigExtremes, ZeroEigenvaluesAreSkipped) {
  const auto e = eig_extremes(mat({{1, -1}, {-1, 1}}));
  EXPECT_NEAR(e.min_nonzero, 2.0, 1e-12);
  EXPECT_FALSE(e.empty);
}

TEST(EigExtremes, EmptySupportIsFlagged) {
  const auto e = eig_extremes(SupportedMatrix(2));
  EXPECT_TRUE(e.empty);
  EXPECT_EQ(e.min_nonzero, 0.0);
  EXPECT_EQ(e.max, 0.0);
}

TEST(EigExtremes, ObsAndMarginalNeverShrinkSmallestEigenvalue) {
  Rng rng(17);
  for (unsigned t = 0; t < 100; ++t) {
    const SupportedMatrix m = random_supported(7, rng, 400 + t);
    const double base = eig_extremes(m).min_nonzero;
    const IndexSet o = random_subset_of(m.support(), rng);
    const IndexSet delta = random_subset_of(m.support(), rng);
    const SupportedMatrix a = obs(m, o);
    const SupportedMatrix b = marginal(m, delta);
    if (!a.empty()) EXPECT_GE(eig_extremes(a).min_nonzero, base - 1e-9);
    if (!b.empty()) EXPECT_GE(eig_extremes(b).min_nonzero, base - 1e-9);
  }
}

TEST(PsdSandwich, Reflexive) {
  const SupportedMatrix a = mat({{2, -1}, {-1, 2}});
  EXPECT_TRUE(psd_sandwich_check(a, a, 0.0));
}

TEST(PsdSandwich, ScalarBoundary) {
  const SupportedMatrix i = mat({{1, 0}, {0, 1}});
  EXPECT_TRUE(psd_sandwich_check(mat({{2, 0}, {0, 2}}), i, std::log(2.0)));
  EXPECT_FALSE(psd_sandwich_check(mat({{2.001, 0}, {0, 2.001}}), i, std::log(2.0)));
}

TEST(PsdSandwich, DifferentSupportsAreRejected) {
  try {
    psd_sandwich_check(mat({{1}}, {0}), mat({{1}}, {1}), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SupportMismatch);
  }
}

TEST(PsdSandwich, MonotoneInEps) {
  for (unsigned t = 0; t < 30; ++t) {
    const SupportedMatrix a = SupportedMatrix::full(oracle::random_pd(4, 500 + t));
    const SupportedMatrix b = SupportedMatrix::full(oracle::random_pd(4, 600 + t));
    bool seen = false;
    for (double eps = 0.0; eps < 5.0; eps += 0.05) {
      const bool ok = psd_sandwich_check(a, b, eps);
      if (seen) EXPECT_TRUE(ok) << "eps " << eps;
      seen = seen || ok;
    }
  }
}

TEST(IndexSets, SetAlgebra) {
  EXPECT_EQ(make_index_set({3, 1, 3, 2}), (IndexSet{1, 2, 3}));
  EXPECT_EQ(set_union({1, 3}, {2, 3}), (IndexSet{1, 2, 3}));
  EXPECT_EQ(set_intersection({1, 3}, {2, 3}), (IndexSet{3}));
  EXPECT_EQ(set_difference({1, 2, 3}, {2}), (IndexSet{1, 3}));
  EXPECT_TRUE(is_subset({1, 3}, {1, 2, 3}));
  EXPECT_FALSE(is_subset({4}, {1, 2, 3}));
}
