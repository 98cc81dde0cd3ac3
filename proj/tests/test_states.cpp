#include "doctest.h"

#include <cmath>

#include "gwit/states.hpp"
#include "gwit/symplectic.hpp"
#include "gwit/tolerances.hpp"

using namespace gwit;

namespace {

bool approx_mat(const Mat& a, const Mat& b, double tol = 1e-9) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

TEST_CASE("C-family matrices") {
  Mat c = C_matrix(3, 4.0, 1.0);
  CHECK(c(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(c(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  // Spectrum: l once (all-ones vector), m with multiplicity n-1.
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(4.0));

  // Algebra: C(l1,m1) C(l2,m2) = C(l1 l2, m1 m2); inverse via reciprocals.
  CHECK(approx_mat(Mat(C_matrix(4, 2.0, 0.5) * C_matrix(4, 3.0, 2.0)),
                   C_matrix(4, 6.0, 1.0), 1e-12));
  CHECK(approx_mat(Mat(C_matrix(5, 2.0, 3.0).inverse()), C_matrix(5, 0.5, 1.0 / 3.0),
                   1e-12));
}

TEST_CASE("symmetric states are pure boundary states; tri3 fixture entries") {
  auto f = fixture("tri3");
  CHECK(f.n == 3);
  CHECK(f.layout == Layout::Reduced);
  Mat xx(3, 3), pp(3, 3);
  xx << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  pp << 3, -1, -1, -1, 3, -1, -1, -1, 3;
  CHECK(approx_mat(f.xx, 0.25 * xx, 1e-15));
  CHECK(approx_mat(f.pp, 0.25 * pp, 1e-15));

  auto st = symmetric_state({3, 2.0, 0.5});
  CHECK(approx_mat(f.xx, st.xx, 0.0));
  CHECK(approx_mat(f.pp, st.pp, 0.0));

  // Pure physical boundary state for any positive parameters.
  Prng rng(202);
  for (int n = 2; n <= 6; ++n)
    for (int trial = 0; trial < 8; ++trial) {
      double l = rng.uniform(0.5, 2.5), m = rng.uniform(0.5, 2.5);
      auto s = symmetric_state({n, l, m});
      CHECK(is_physical(s));
      CHECK(is_pure(s));
      CHECK(approx_mat(Mat(s.xx * s.pp), 0.25 * Mat::Identity(n, n), 1e-12));
      // Boundary: the physicality block is singular.
      CHECK(physicality_min_eig(s) == doctest::Approx(0.0).epsilon(1e-10));
    }
  CHECK_THROWS(symmetric_state({3, -1.0, 2.0}));
}

TEST_CASE("bbs4 fixture") {
  auto f = fixture("bbs4");
  CHECK(f.n == 4);
  CHECK(f.layout == Layout::Reduced);
  Mat xx(4, 4), pp(4, 4);
  xx << 2, 0, 1, 0,
        0, 2, 0, -1,
        1, 0, 2, 0,
        0, -1, 0, 2;
  pp << 1, 0, 0, -1,
        0, 1, -1, 0,
        0, -1, 4, 0,
        -1, 0, 0, 4;
  CHECK(approx_mat(f.xx, 0.5 * xx, 0.0));
  CHECK(approx_mat(f.pp, 0.5 * pp, 0.0));
  CHECK(is_physical(f));
  CHECK_FALSE(is_pure(f));
}

TEST_CASE("quad4 fixture and four-mode family") {
  auto f = fixture("quad4");
  CHECK(f.n == 4);
  double a = quad4_alpha(), b = quad4_beta();
  CHECK(a == doctest::Approx(3.2490).epsilon(1e-4));
  CHECK(b == doctest::Approx(-2.1570).epsilon(1e-4));
  CHECK(f.xx(0, 0) == doctest::Approx(a).epsilon(1e-14));
  CHECK(f.xx(0, 1) == doctest::Approx(b).epsilon(1e-14));
  CHECK(f.xx(0, 3) == doctest::Approx(0.0));
  CHECK(f.xx(2, 3) == doctest::Approx(-b).epsilon(1e-14));
  CHECK(approx_mat(f.pp, quad_family({a, -b, QuadFamily::FourMode}).xx, 1e-15));
  CHECK(is_physical(f));
  // Mixed: xx * pp = (alpha^2 - 2 beta^2) E = (5/4) E, all four symplectic
  // eigenvalues sqrt(5)/2.
  CHECK_FALSE(is_pure(f));
  CHECK(approx_mat(Mat(f.xx * f.pp), 1.25 * Mat::Identity(4, 4), 1e-12));

  // Physicality boundary of the family: beta^2 <= (alpha^2 - 1/4)/2.
  Prng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    double beta = rng.uniform(-2.0, 2.0);
    double alpha = rng.uniform(0.51, 4.0);
    bool expect = quad_family_physical(alpha, beta);
    if (std::abs(beta * beta - (alpha * alpha - 0.25) / 2) < 1e-6) continue;
    CHECK(is_physical(quad_family({alpha, beta, QuadFamily::FourMode})) == expect);
  }
}

TEST_CASE("trisym family and its partial transpose spectrum") {
  auto st = trisym_state(1.7, 0.4);
  CHECK(approx_mat(st.xx, C_matrix(3, 1.7 + 0.8, 1.7 - 0.4), 1e-14));
  CHECK(approx_mat(st.pp, C_matrix(3, 1.7 - 0.8, 1.7 + 0.4), 1e-14));
  CHECK(st.xx(0, 0) == doctest::Approx(1.7).epsilon(1e-14));
  CHECK(st.xx(0, 1) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(st.pp(0, 1) == doctest::Approx(-0.4).epsilon(1e-14));

  // Physicality boundary |beta| <= sqrt(4 alpha^2 - 1)/4 and the closed-form
  // minimal physicality eigenvalue of the mode-1 partial transpose:
  // alpha - sqrt(10 b^2 + 2|b| sqrt(9 b^2 + 8) + 1)/2.
  Prng rng(31);
  int tested = 0;
  for (int trial = 0; trial < 60; ++trial) {
    double b = rng.uniform(-1.5, 1.5);
    double a = rng.uniform(0.55, 3.0);
    if (!trisym_physical(a, b)) continue;
    ++tested;
    auto s = trisym_state(a, b);
    CHECK(is_physical(s));
    auto pt = partial_transpose(s, {1});
    double expect = a - 0.5 * std::sqrt(10 * b * b +
                                        2 * std::abs(b) * std::sqrt(9 * b * b + 8) + 1);
    CHECK(physicality_min_eig(pt) == doctest::Approx(expect).epsilon(1e-8));
    bool ppt = 10 * b * b + 2 * std::abs(b) * std::sqrt(9 * b * b + 8) + 1 <=
               4 * a * a + 1e-9;
    CHECK((physicality_min_eig(pt) >= -1e-10) == ppt);
  }
  CHECK(tested >= 10);

  // beta -> -beta exchanges xx and pp.
  auto plus = trisym_state(1.3, 0.25), minus = trisym_state(1.3, -0.25);
  CHECK(approx_mat(plus.xx, minus.pp, 0.0));
}

TEST_CASE("squeezed-mixture family") {
  auto v = sq3mix_state(0.0);
  CHECK(approx_mat(v.xx, 0.5 * Mat::Identity(3, 3), 1e-14));
  CHECK(approx_mat(v.pp, 0.5 * Mat::Identity(3, 3), 1e-14));
  for (double r : {0.3, 0.9, 1.5}) {
    auto s = sq3mix_state(r);
    CHECK(is_physical(s));
    CHECK(s.xx(0, 0) ==
          doctest::Approx((std::cosh(2 * r) + 0.5) / 3.0).epsilon(1e-14));
    CHECK(s.xx(0, 1) == doctest::Approx(std::sinh(2 * r) / 6.0).epsilon(1e-14));
    CHECK_FALSE(is_pure(s));  // proper mixture for r > 0
  }
}

TEST_CASE("bisep32 fixture") {
  auto f = fixture("bisep32");
  CHECK(f.n == 3);
  Mat xx(3, 3), pp(3, 3);
  xx << 9, 4, 4, 4, 9, 4, 4, 4, 9;
  pp << 9, -4, -4, -4, 9, -4, -4, -4, 9;
  xx /= 6.0;
  pp /= 6.0;
  CHECK(approx_mat(f.xx, xx, 1e-14));
  CHECK(approx_mat(f.pp, pp, 1e-14));
  CHECK(is_physical(f));
  CHECK_THROWS(fixture("nope"));
}

TEST_CASE("random suites are deterministic, symmetric, in range") {
  auto a = random_suite(SuiteKind::Cm, 5, 3, 42);
  auto b = random_suite(SuiteKind::Cm, 5, 3, 42);
  REQUIRE(a.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(approx_mat(a[i], b[i], 0.0));
    CHECK(a[i].rows() == 10);
    CHECK(a[i].cols() == 10);
    CHECK(approx_mat(a[i], a[i].transpose(), 0.0));
    CHECK(a[i].cwiseAbs().maxCoeff() <= 1.0 + 1e-15);
  }
  CHECK((a[0] - a[1]).cwiseAbs().maxCoeff() > 1e-3);  // instances differ
  auto c = random_suite(SuiteKind::Cm, 5, 3, 43);
  CHECK((a[0] - c[0]).cwiseAbs().maxCoeff() > 1e-3);  // seeds differ

  auto sig = random_suite(SuiteKind::Sigma, 4, 2, 7);
  for (const auto& s : sig) {
    CHECK(s.rows() == 8);
    CHECK((s.array() >= 0.001 - 1e-15).all());
    CHECK((s.array() <= 0.1 + 1e-15).all());
  }
}

TEST_CASE("random physical generators produce physical states") {
  Prng rng(9);
  for (int n : {2, 4, 6}) {
    auto full = CovMatrix::full(random_physical_full(n, rng, 0.05));
    CHECK(full.layout == Layout::Full);
    CHECK(is_physical(full));
    CHECK(physicality_min_eig(full) > 0.0);  // margin shrinks under congruence
    auto red = random_physical_reduced(n, rng);
    CHECK(red.layout == Layout::Reduced);
    CHECK(is_physical(red));
  }
}
