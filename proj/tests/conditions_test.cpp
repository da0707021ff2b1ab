#include "pinning/conditions.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace pinning {
namespace {

Matrix example_symmetric() {
  Matrix a(3, 3);
  a << -5.1, 5.0, 0.1, 5.0, -11.0, 6.0, 0.1, 6.0, -6.1;
  return a;
}

Matrix example_asymmetric() {
  Matrix a(3, 3);
  a << -2, 1, 1, 1, -2, 1, 0, 1, -1;
  return a;
}

QuadCertificate example_cert(double eta = 0.6218) {
  return {Vector::Ones(3), Vector::Constant(3, 10.0), eta};
}

Matrix sym_part(const Matrix& a) { return 0.5 * (a + a.transpose()); }

TEST(Proposition1, OneByOne) {
  Matrix a(1, 1);
  a << -1.0;
  const auto res = proposition1_holds(a);
  EXPECT_TRUE(res.verdict.holds);
  EXPECT_EQ(res.report.lambda1, -1.0);
}

TEST(Proposition1, ExamplePinnedMatrix) {
  const auto a = CouplingMatrix::validate(example_symmetric());
  const auto res = proposition1_holds(pinned_matrix(a, 0, 4.9));
  EXPECT_TRUE(res.verdict.holds);
  const auto roots = oracle::char_poly_roots(pinned_matrix(a, 0, 4.9));
  EXPECT_NEAR(res.report.lambda1, roots.front(), 1e-9);
  EXPECT_NEAR(res.report.lambda1, -1.011, 2e-3);
}

TEST(Proposition1, UnpinnedFails) {
  const auto res = proposition1_holds(example_symmetric());
  EXPECT_FALSE(res.verdict.holds);
  EXPECT_NEAR(res.report.lambda1, 0.0, 1e-9);
}

TEST(Proposition1, AsymmetricIsRejected) {
  EXPECT_THROW(proposition1_holds(example_asymmetric()), SymmetryError);
}

TEST(QuadCertificateChua, ExampleValue) {
  EXPECT_NEAR(quad_certificate_chua(Vector::Ones(3), Vector::Constant(3, 10.0)), 0.6218, 1e-3);
}

TEST(QuadCertificateChua, BoundsAgainstCharacteristicPolynomial) {
  const ChuaParams params;
  const Matrix mid = chua_region_jacobian(ChuaRegion::middle, params);
  const Matrix outer = chua_region_jacobian(ChuaRegion::right, params);
  const Matrix shift = 10.0 * Matrix::Identity(3, 3);

  const auto mid_roots = oracle::char_poly_roots(sym_part(mid - shift));
  const auto out_roots = oracle::char_poly_roots(sym_part(outer - shift));
  const double tight = -std::max(mid_roots.front(), out_roots.front());
  EXPECT_NEAR(quad_certificate_chua(Vector::Ones(3), Vector::Constant(3, 10.0), params,
                                    QuadBound::tight),
              tight, 1e-8);

  double norm = 0.0;
  for (const Matrix& j : {mid, outer}) {
    for (double r : oracle::char_poly_roots(sym_part(j))) norm = std::max(norm, std::abs(r));
  }
  EXPECT_NEAR(quad_certificate_chua(Vector::Ones(3), Vector::Constant(3, 10.0)), 10.0 - norm,
              1e-8);
}

TEST(QuadCertificateChua, NormBoundNeverExceedsTight) {
  for (double d : {0.0, 2.0, 5.0, 10.0, 25.0}) {
    for (const Vector& p :
         {Vector(Vector::Ones(3)), Vector(Eigen::Vector3d(0.5, 2.0, 1.0)), Vector(Eigen::Vector3d(3.0, 1.0, 0.2))}) {
      const Vector delta = Vector::Constant(3, d);
      EXPECT_LE(quad_certificate_chua(p, delta), quad_certificate_chua(p, delta, {}, QuadBound::tight));
    }
  }
}

TEST(QuadCertificateChua, NoCertificateWithoutShift) {
  EXPECT_LE(quad_certificate_chua(Vector::Ones(3), Vector::Zero(3)), 0.0);
  EXPECT_LE(quad_certificate_chua(Vector::Ones(3), Vector::Zero(3), {}, QuadBound::tight), 0.0);
}

TEST(QuadMargin, LinearDecaySanity) {
  const auto decay = Dynamics::linear_decay(3, 1.0);
  EXPECT_NEAR(quad_margin(decay.jacobian_hull, Vector::Ones(3), Vector::Zero(3), QuadBound::tight),
              1.0, 1e-14);
  EXPECT_THROW(quad_margin({}, Vector::Ones(3), Vector::Zero(3)), UnsupportedError);
}

TEST(QuadCheckSampled, ExampleCertificateSurvives) {
  const auto res = quad_check_sampled(Dynamics::chua(), example_cert(), StateBox::cube(3, 30.0),
                                      100000, 42);
  EXPECT_TRUE(res.verdict.holds) << res.verdict.detail;
  EXPECT_EQ(res.samples, 100000u);
  // The sampled minimum can only sit above the exact worst case.
  EXPECT_GE(res.min_quotient,
            quad_certificate_chua(Vector::Ones(3), Vector::Constant(3, 10.0), {}, QuadBound::tight) -
                1e-9);
}

TEST(QuadCheckSampled, OverclaimedCertificateIsRefuted) {
  const auto res = quad_check_sampled(Dynamics::chua(), example_cert(3.0), StateBox::cube(3, 30.0),
                                      100000, 42);
  EXPECT_FALSE(res.verdict.holds);
  EXPECT_LT(res.min_quotient, 3.0);
  ASSERT_EQ(res.x.size(), 3);
  EXPECT_GT((res.x - res.y).norm(), 0.0);
}

TEST(QuadCheckSampled, DegenerateBox) {
  StateBox box = StateBox::cube(3, 1.0);
  box.upper(1) = box.lower(1);
  EXPECT_THROW(quad_check_sampled(Dynamics::chua(), example_cert(), box, 10, 1), DomainError);
  EXPECT_THROW(quad_check_sampled(Dynamics::chua(), example_cert(), StateBox::cube(3, 1.0), 0, 1),
               DomainError);
}

TEST(QuadCheckSampled, Deterministic) {
  const auto a = quad_check_sampled(Dynamics::chua(), example_cert(), StateBox::cube(3, 30.0), 1000, 9);
  const auto b = quad_check_sampled(Dynamics::chua(), example_cert(), StateBox::cube(3, 30.0), 1000, 9);
  EXPECT_EQ(a.min_quotient, b.min_quotient);
  EXPECT_EQ(a.x, b.x);
}

NetworkSystem chua_network(double c, bool pinned) {
  std::optional<PinPlan> pin;
  if (pinned) pin = PinPlan{0, 4.9, c};
  return NetworkSystem(CouplingMatrix::validate(example_symmetric()), c, pin, Dynamics::chua());
}

TEST(Theorem1, MiddleRegionMuFromOracle) {
  const Matrix mid = chua_region_jacobian(ChuaRegion::middle, {});
  const double mu = oracle::char_poly_roots(sym_part(mid)).front();
  const double lambda1 = -1.0111445908;
  const auto v = theorem1_margin(chua_network(10.0, true), lambda1);
  EXPECT_NEAR(v.margin, mu + 10.0 * lambda1, 1e-8);
  EXPECT_TRUE(v.holds);
  EXPECT_EQ(v.binding, 0u);  // middle region binds
}

TEST(Theorem1, ZeroCouplingFailsLargeCouplingHolds) {
  const double lambda1 = -1.011;
  EXPECT_FALSE(theorem1_margin(chua_network(0.0, false), lambda1).holds);
  double previous = theorem1_margin(chua_network(1.0, true), lambda1).margin;
  for (double c : {5.0, 20.0, 100.0, 1000.0}) {
    const double margin = theorem1_margin(chua_network(c, true), lambda1).margin;
    EXPECT_LT(margin, previous);
    previous = margin;
  }
  EXPECT_TRUE(theorem1_margin(chua_network(1000.0, true), lambda1).holds);
}

TEST(Theorem2, ExampleMargin) {
  const auto v = theorem2_check(example_cert(), 10.0, -1.011);
  EXPECT_TRUE(v.holds);
  EXPECT_NEAR(v.margin, -0.11, 1e-12);
}

TEST(Theorem2, WeakCouplingFails) {
  const auto v = theorem2_check(example_cert(), 1.0, -1.011);
  EXPECT_FALSE(v.holds);
  EXPECT_NEAR(v.margin, 8.989, 1e-12);
}

TEST(Theorem2, ZeroDeltaAlwaysHolds) {
  QuadCertificate cert{Vector::Ones(3), Vector::Zero(3), 1.0};
  for (double c : {1e-3, 1.0, 50.0}) EXPECT_TRUE(theorem2_check(cert, c, -0.5).holds);
}

TEST(Theorem2, ExactZeroMarginFails) {
  QuadCertificate cert{Vector::Ones(1), Vector::Constant(1, 2.0), 1.0};
  EXPECT_FALSE(theorem2_check(cert, 2.0, -1.0).holds);
}

TEST(Theorem3, AlphaOneIsTheorem2) {
  for (double c : {1.0, 10.0, 72.0}) {
    const auto a = theorem3_check(example_cert(), c, -1.011, 1.0);
    const auto b = theorem2_check(example_cert(), c, -1.011);
    EXPECT_EQ(a.margin, b.margin);
    EXPECT_EQ(a.holds, b.holds);
  }
}

TEST(Theorem3, HalfSlopeDoublesThreshold) {
  const auto v = theorem3_check(example_cert(), 10.0, -1.011, 0.5);
  EXPECT_FALSE(v.holds);
  EXPECT_NEAR(v.margin, 4.945, 1e-12);
  const auto strength = min_coupling_strength(example_cert(), -1.011, 0.5);
  ASSERT_TRUE(strength.c_star);
  EXPECT_NEAR(*strength.c_star, 19.78, 1e-2);
  EXPECT_NEAR(*strength.c_star, 2.0 * *min_coupling_strength(example_cert(), -1.011).c_star, 1e-12);
}

TEST(Theorem4, ExampleAsymmetricExample) {
  const auto a = CouplingMatrix::validate(example_asymmetric());
  const auto res = theorem4_check(a, PinPlan{0, 2.0, 72.0}, example_cert());
  ASSERT_TRUE(res.report.xi);
  EXPECT_NEAR((*res.report.xi)(2), 0.5, 1e-12);
  EXPECT_NEAR(res.report.xi_max, 0.5, 1e-12);
  EXPECT_NEAR(res.report.lambda1, -0.0718, 1e-3);
  EXPECT_LT(res.report.lambda1, 0.0);
  EXPECT_TRUE(res.verdict.holds);
  EXPECT_NEAR(res.verdict.margin, 10.0 * 0.5 + 72.0 * res.report.lambda1, 1e-12);
  EXPECT_NEAR(res.verdict.margin, -0.17, 0.03);
}

TEST(Theorem4, UniformWeightsReduceToScaledTheorem2) {
  const auto a = CouplingMatrix::validate(example_symmetric());
  const PinPlan pin{0, 4.9, 10.0};
  const auto t4 = theorem4_check(a, pin, example_cert());
  const double lambda1 = proposition1_holds(pinned_matrix(a, pin)).report.lambda1;
  EXPECT_NEAR(t4.report.lambda1, lambda1 / 3.0, 1e-12);
  const auto t2 = theorem2_check(example_cert(), 10.0, lambda1);
  EXPECT_NEAR(t4.verdict.margin, t2.margin / 3.0, 1e-12);
  EXPECT_EQ(t4.verdict.holds, t2.holds);
}

TEST(Theorem4, ReducibleRejected) {
  Matrix m(3, 3);
  m << -1, 1, 0, 1, -1, 0, 1, 1, -2;
  EXPECT_THROW(theorem4_check(CouplingMatrix::validate(m), PinPlan{0, 2.0, 10.0}, example_cert()),
               ReducibilityError);
}

TEST(MinCouplingStrength, ClosedFormMatchesBisection) {
  const double lambda1 = -1.011;
  const auto strength = min_coupling_strength(example_cert(), lambda1);
  ASSERT_TRUE(strength.c_star);
  const double bisected = oracle::bisect_threshold(
      [&](double c) { return theorem2_check(example_cert(), c, lambda1).holds; }, 0.0, 100.0);
  EXPECT_NEAR(*strength.c_star, bisected, 1e-6);
  EXPECT_NEAR(*strength.c_star, 9.891, 1e-3);
  ASSERT_TRUE(strength.verified);
  EXPECT_TRUE(strength.verified->holds);
}

TEST(MinCouplingStrength, ZeroDelta) {
  QuadCertificate cert{Vector::Ones(3), Vector::Zero(3), 1.0};
  const auto strength = min_coupling_strength(cert, -1.0);
  ASSERT_TRUE(strength.c_star);
  EXPECT_EQ(*strength.c_star, 0.0);
}

TEST(MinCouplingStrength, Theorem4Inputs) {
  const auto strength = min_coupling_strength(example_cert(), -0.0718, 1.0, 0.5);
  ASSERT_TRUE(strength.c_star);
  EXPECT_NEAR(*strength.c_star, 69.64, 1e-2);
  EXPECT_LT(*strength.c_star, 72.0);
}

TEST(MinCouplingStrength, NonNegativeLambdaHasNoSolution) {
  EXPECT_FALSE(min_coupling_strength(example_cert(), 0.0).c_star);
  EXPECT_FALSE(min_coupling_strength(example_cert(), 0.3).c_star);
}

TEST(MinCouplingStrength, ThresholdIsSharp) {
  for (double lambda1 : {-0.01, -1.011, -7.0}) {
    const auto c_star = *min_coupling_strength(example_cert(), lambda1).c_star;
    EXPECT_FALSE(theorem2_check(example_cert(), c_star * (1.0 - 1e-3), lambda1).holds);
    EXPECT_TRUE(theorem2_check(example_cert(), c_star * (1.0 + 1e-3), lambda1).holds);
  }
}

TEST(ReduciblePinnability, IrreducibleAnyNode) {
  const auto a = CouplingMatrix::validate(example_asymmetric());
  for (std::size_t node = 0; node < 3; ++node) {
    EXPECT_TRUE(reducible_pinnability(a, node).verdict.holds);
  }
}

TEST(ReduciblePinnability, RootBlockOnly) {
  Matrix m(3, 3);
  m << -1, 1, 0, 1, -1, 0, 1, 1, -2;
  const auto a = CouplingMatrix::validate(m);
  const auto root = reducible_pinnability(a, 0);
  EXPECT_TRUE(root.verdict.holds);
  EXPECT_EQ(root.condensation.block_count(), 2u);
  EXPECT_EQ(root.block_status.size(), 2u);
  EXPECT_TRUE(reducible_pinnability(a, 1).verdict.holds);
  const auto slave = reducible_pinnability(a, 2);
  EXPECT_FALSE(slave.verdict.holds);
  EXPECT_NE(slave.verdict.detail.find("not in the root block"), std::string::npos);
}

TEST(ReduciblePinnability, TwoRootsCannotBePinned) {
  Matrix m = Matrix::Zero(3, 3);
  m << -1, 1, 0, 1, -1, 0, 0, 0, 0;  // node 3 isolated
  const auto res = reducible_pinnability(CouplingMatrix::validate(m), 0);
  EXPECT_FALSE(res.verdict.holds);
}

TEST(Verdict, MonotoneInCouplingAndDelta) {
  double previous = theorem2_check(example_cert(), 0.5, -1.011).margin;
  for (double c = 1.0; c < 100.0; c *= 1.7) {
    const double margin = theorem2_check(example_cert(), c, -1.011).margin;
    EXPECT_LT(margin, previous);
    previous = margin;
  }
  QuadCertificate cert = example_cert();
  previous = theorem2_check(cert, 10.0, -1.011).margin;
  for (int step = 0; step < 5; ++step) {
    cert.delta(1) += 1.0;
    const double margin = theorem2_check(cert, 10.0, -1.011).margin;
    EXPECT_GT(margin, previous);
    EXPECT_EQ(theorem2_check(cert, 10.0, -1.011).binding, 1u);
    previous = margin;
  }
}

TEST(QuadCertificate, Validation) {
  EXPECT_NO_THROW(example_cert().validate());
  QuadCertificate bad = example_cert();
  bad.p(0) = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = example_cert(0.0);
  EXPECT_THROW(bad.validate(), ValidationError);
}

}  // namespace
}  // namespace pinning
