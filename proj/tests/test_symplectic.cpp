#include "doctest.h"

#include <Eigen/Dense>
#include <complex>

#include "gwit/prng.hpp"
#include "gwit/states.hpp"
#include "gwit/symplectic.hpp"

using namespace gwit;

namespace {

Mat random_sym(int d, Prng& rng, double lo = -1, double hi = 1) {
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) m(i, j) = m(j, i) = rng.uniform(lo, hi);
  return m;
}

Mat random_antisym(int d, Prng& rng) {
  Mat m = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      m(i, j) = rng.uniform(-1, 1);
      m(j, i) = -m(i, j);
    }
  return m;
}

Mat random_pd(int d, Prng& rng, double shift = 0.1) {
  Mat a = random_sym(d, rng);
  return Mat(a * a.transpose()) + shift * Mat::Identity(d, d);
}

// Independent oracle: eigenvalues of S + iA via the complex eigensolver.
Eigen::VectorXd hermitian_eigs(const Mat& S, const Mat& A) {
  Eigen::MatrixXcd H = S.cast<std::complex<double>>() +
                       std::complex<double>(0, 1) * A.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Independent oracle: symplectic eigenvalues as imaginary parts of spec(Omega M).
std::vector<double> symp_eigs_via_spectrum(const Mat& M) {
  Eigen::EigenSolver<Mat> es(omega(static_cast<int>(M.rows()) / 2) * M);
  std::vector<double> out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double im = es.eigenvalues()[i].imag();
    if (im > 0) out.push_back(im);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("embed_real basics") {
  Mat E2 = Mat::Identity(2, 2);
  Mat H = embed_real(E2, Mat::Zero(2, 2));
  CHECK((H - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  Mat A(2, 2);
  A << 0, 1, -1, 0;
  Eigen::SelfAdjointEigenSolver<Mat> es(embed_real(E2, A), Eigen::EigenvaluesOnly);
  Vec ev = es.eigenvalues();
  CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(2.0));
  CHECK(ev[3] == doctest::Approx(2.0));

  CHECK_THROWS(embed_real(E2, Mat::Identity(2, 2)));  // not antisymmetric
  CHECK_THROWS(embed_real(E2, Mat::Zero(3, 3)));      // size mismatch
}

TEST_CASE("embed_real spectrum equals Hermitian spectrum (doubled)") {
  Prng rng(1001);
  for (int n : {2, 3, 5, 8}) {
    Mat S = random_sym(n, rng), A = random_antisym(n, rng);
    Eigen::SelfAdjointEigenSolver<Mat> es(embed_real(S, A), Eigen::EigenvaluesOnly);
    Vec emb = es.eigenvalues();
    Eigen::VectorXd her = hermitian_eigs(S, A);
    CHECK(std::abs(emb.minCoeff() - her.minCoeff()) <= 1e-10);
    // Sign-flip equivalence: the top-sign embedding has the same spectrum.
    Eigen::SelfAdjointEigenSolver<Mat> es2(embed_real(S, Mat(-A)), Eigen::EigenvaluesOnly);
    CHECK((es2.eigenvalues() - emb).cwiseAbs().maxCoeff() <= 1e-10);
    for (int i = 0; i < n; ++i) {
      CHECK(emb[2 * i] == doctest::Approx(her[i]).epsilon(1e-9));
      CHECK(emb[2 * i + 1] == doctest::Approx(her[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("physicality_min_eig") {
  int n = 3;
  CovMatrix vac = CovMatrix::reduced(0.5 * Mat::Identity(n, n), 0.5 * Mat::Identity(n, n));
  CHECK(physicality_min_eig(vac) == doctest::Approx(0.0).epsilon(1e-12));

  CovMatrix g = CovMatrix::reduced(Mat::Constant(1, 1, 0.4), Mat::Constant(1, 1, 0.4));
  CHECK(physicality_min_eig(g) == doctest::Approx(-0.1));

  CHECK(physicality_min_eig(fixture("bbs4")) >= -1e-12);

  // Full and reduced embeddings agree for zero-xp CMs.
  CovMatrix gf = g.as_full();
  CHECK(physicality_min_eig(gf) == doctest::Approx(-0.1));
}

TEST_CASE("str closed-form cases") {
  CHECK(str(Mat::Identity(8, 8)) == doctest::Approx(4.0));
  CHECK(str_reduced(Mat::Constant(1, 1, 4.0), Mat::Constant(1, 1, 9.0)) ==
        doctest::Approx(6.0));

  // Symmetric-family closed form: sqrt(l l') + (n-1) sqrt(m m').
  Prng rng(7);
  for (int n : {2, 4, 7}) {
    double l = rng.uniform(0.3, 3), m = rng.uniform(0.3, 3);
    double l2 = rng.uniform(0.3, 3), m2 = rng.uniform(0.3, 3);
    double expect = std::sqrt(l * l2) + (n - 1) * std::sqrt(m * m2);
    CHECK(str_reduced(C_matrix(n, l, m), C_matrix(n, l2, m2)) ==
          doctest::Approx(expect).epsilon(1e-10));
  }

  // Unattained minimum: X = E, P = 0.
  CHECK(str_reduced(Mat::Identity(2, 2), Mat::Zero(2, 2)) == doctest::Approx(0.0));
  CHECK_FALSE(str_attainable_reduced(Mat::Identity(2, 2), Mat::Zero(2, 2)));
  CHECK(str_attainable_reduced(Mat::Constant(1, 1, 4.0), Mat::Constant(1, 1, 9.0)));

  CHECK_THROWS(str(Mat(-Mat::Identity(4, 4))));  // non-PSD rejected
}

TEST_CASE("str equals sum of symplectic eigenvalues (cross-check)") {
  Prng rng(42);
  for (int n : {1, 2, 3, 4, 6}) {
    for (int rep = 0; rep < 5; ++rep) {
      Mat M = random_pd(2 * n, rng);
      auto oracle = symp_eigs_via_spectrum(M);
      double sum = 0;
      for (double v : oracle) sum += v;
      CHECK(std::abs(str(M) - sum) <= 1e-8 * std::max(1.0, sum));

      SpectrumReport rep2 = williamson(M);
      REQUIRE(rep2.symplectic_eigs.size() == n);
      for (int i = 0; i < n; ++i)
        CHECK(rep2.symplectic_eigs[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("williamson diagonalizer is symplectic and diagonalizes") {
  Prng rng(43);
  for (int n : {1, 2, 4}) {
    Mat M = random_pd(2 * n, rng);
    SpectrumReport rep = williamson(M, true);
    Mat S = rep.S;
    CHECK((S * omega(n) * S.transpose() - omega(n)).cwiseAbs().maxCoeff() <= 1e-9);
    Mat D = S * M * S.transpose();
    Vec expect(2 * n);
    for (int j = 0; j < n; ++j)
      expect[j] = expect[n + j] = rep.symplectic_eigs[j];
    CHECK((D - Mat(expect.asDiagonal())).cwiseAbs().maxCoeff() <= 1e-8);
  }
  CHECK(williamson(Mat::Identity(4, 4)).symplectic_eigs.isApproxToConstant(1.0));
  Mat M2 = Mat::Zero(2, 2);
  M2(0, 0) = 4;
  M2(1, 1) = 9;
  CHECK(williamson(M2).symplectic_eigs[0] == doctest::Approx(6.0));
  CHECK_THROWS(williamson(Mat::Zero(4, 4)));
}

TEST_CASE("minimizing_state") {
  CovMatrix vac = minimizing_state(Mat::Identity(4, 4));
  CHECK((vac.gamma - 0.5 * Mat::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);

  CovMatrix g = minimizing_state_reduced(Mat::Constant(1, 1, 4.0), Mat::Constant(1, 1, 9.0));
  CHECK(g.xx(0, 0) == doctest::Approx(0.75));
  CHECK(g.pp(0, 0) == doctest::Approx(1.0 / 3));

  // Symmetric family: optimal state swaps the blocks (scaled by 1/2).
  double l = 1.7, m = 0.6;
  CovMatrix gs = minimizing_state_reduced(C_matrix(3, l, m), C_matrix(3, 1 / l, 1 / m));
  CHECK((gs.xx - 0.5 * C_matrix(3, 1 / l, 1 / m)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((gs.pp - 0.5 * C_matrix(3, l, m)).cwiseAbs().maxCoeff() <= 1e-10);

  Prng rng(99);
  for (int n : {1, 2, 3, 5}) {
    Mat M = random_pd(2 * n, rng);
    CovMatrix gm = minimizing_state(M);
    CHECK(physicality_min_eig(gm) >= -1e-8);
    CHECK(std::abs(physicality_min_eig(gm)) <= 1e-8);  // boundary
    CHECK(is_pure(gm));
    CHECK((M * gm.gamma).trace() == doctest::Approx(str(M)).epsilon(1e-9));
  }

  CHECK_THROWS_AS(minimizing_state(Mat(Mat::Zero(4, 4))), std::domain_error);
}

TEST_CASE("tr(M gamma) >= str(M) on random physical states") {
  Prng rng(4242);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform(0, 3.999));
    Mat M = random_pd(2 * n, rng);
    Mat g = random_physical_full(n, rng);
    CHECK((M * g).trace() >= str(M) - 1e-8);
  }
}

TEST_CASE("zeroing the xp block preserves physicality") {
  Prng rng(77);
  for (int rep = 0; rep < 10; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform(0, 2.999));
    Mat g = random_physical_full(n, rng);
    CovMatrix full = CovMatrix::full(g);
    REQUIRE(physicality_min_eig(full) >= -1e-9);
    CovMatrix red = CovMatrix::reduced(full.block_xx(), full.block_pp());
    CHECK(physicality_min_eig(red) >= -1e-8);
  }
}

TEST_CASE("str symmetry in the reduced pair") {
  Prng rng(5);
  for (int n : {2, 4}) {
    Mat X = random_pd(n, rng), P = random_pd(n, rng);
    CHECK(str_reduced(X, P) == doctest::Approx(str_reduced(P, X)).epsilon(1e-10));
  }
}

TEST_CASE("is_pure") {
  int n = 2;
  CovMatrix vac = CovMatrix::reduced(0.5 * Mat::Identity(n, n), 0.5 * Mat::Identity(n, n));
  CHECK(is_pure(vac));
  CHECK(is_pure(vac.as_full()));
  CHECK_FALSE(is_pure(fixture("bbs4")));
  CovMatrix scaled = CovMatrix::reduced(Mat::Identity(n, n), Mat::Identity(n, n));
  CHECK_FALSE(is_pure(scaled));
}

TEST_CASE("product_annihilation_check") {
  Mat A = Mat::Zero(2, 2), B = Mat::Zero(2, 2);
  A(0, 0) = 1;
  B(1, 1) = 1;
  CHECK(product_annihilation_check(A, B) == 0.0);
  CHECK(product_annihilation_check(A, A) == 1.0);
}

TEST_CASE("partial_transpose") {
  CovMatrix bbs = fixture("bbs4");
  for (int m = 1; m <= 4; ++m) {
    CovMatrix pt = partial_transpose(bbs, {m});
    CovMatrix back = partial_transpose(pt, {m});
    CHECK((back.pp - bbs.pp).cwiseAbs().maxCoeff() == 0.0);
  }
  // Vacuum is invariant.
  CovMatrix vac = CovMatrix::reduced(0.5 * Mat::Identity(3, 3), 0.5 * Mat::Identity(3, 3));
  CHECK((partial_transpose(vac, {2}).pp - vac.pp).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(partial_transpose(vac, {4}));
}

TEST_CASE("CovMatrix construction guards") {
  Mat bad(2, 2);
  bad << 1, 2, 3, 4;
  CHECK_THROWS(CovMatrix::full(bad));
  CHECK_THROWS(CovMatrix::reduced(Mat::Identity(2, 2), Mat::Identity(3, 3)));
  Mat odd = Mat::Identity(3, 3);
  CHECK_THROWS(CovMatrix::full(odd));
}
