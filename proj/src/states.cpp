#include "gwit/states.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace gwit {

Mat C_matrix(int n, double l, double m) {
  double diag = (l + (n - 1) * m) / n, off = (l - m) / n;
  Mat c = Mat::Constant(n, n, off);
  c.diagonal().setConstant(diag);
  return c;
}

CovMatrix symmetric_state(const SymmetricParams& p) {
  if (p.lambda <= 0 || p.mu <= 0)
    throw std::invalid_argument("symmetric_state: parameters must be positive");
  return CovMatrix::reduced(0.5 * C_matrix(p.n, p.lambda, p.mu),
                            0.5 * C_matrix(p.n, 1.0 / p.lambda, 1.0 / p.mu));
}

CovMatrix quad_family(const QuadFamilyParams& p) {
  if (p.family == QuadFamily::TriSym) return trisym_state(p.alpha, p.beta);
  double a = p.alpha, b = p.beta;
  Mat xx(4, 4), pp(4, 4);
  xx << a, b, b, 0,
        b, a, 0, b,
        b, 0, a, -b,
        0, b, -b, a;
  pp << a, -b, -b, 0,
        -b, a, 0, -b,
        -b, 0, a, b,
        0, -b, b, a;
  return CovMatrix::reduced(xx, pp);
}

CovMatrix trisym_state(double alpha, double beta) {
  Mat xx = C_matrix(3, alpha + 2 * beta, alpha - beta);
  Mat pp = C_matrix(3, alpha - 2 * beta, alpha + beta);
  return CovMatrix::reduced(xx, pp);
}

CovMatrix sq3mix_state(double r) {
  return trisym_state((std::cosh(2 * r) + 0.5) / 3.0, std::sinh(2 * r) / 6.0);
}

double quad4_alpha() {
  double c = std::cbrt(2.0);
  return 0.25 * (1.0 / (2.0 * c) + 10.0 * c);
}

double quad4_beta() {
  double c = std::cbrt(2.0);
  return (1.0 / (2.0 * c) - 10.0 * c) / (4.0 * std::sqrt(2.0));
}

bool quad_family_physical(double alpha, double beta) {
  return beta * beta <= (alpha * alpha - 0.25) / 2.0;
}

bool trisym_physical(double alpha, double beta) {
  return 4 * alpha * alpha - 1 >= 0 &&
         std::abs(beta) <= 0.25 * std::sqrt(4 * alpha * alpha - 1);
}

CovMatrix fixture(const std::string& name) {
  if (name == "bbs4") {
    Mat xx(4, 4), pp(4, 4);
    xx << 2, 0, 1, 0,
          0, 2, 0, -1,
          1, 0, 2, 0,
          0, -1, 0, 2;
    pp << 1, 0, 0, -1,
          0, 1, -1, 0,
          0, -1, 4, 0,
          -1, 0, 0, 4;
    return CovMatrix::reduced(0.5 * xx, 0.5 * pp);
  }
  if (name == "tri3") return symmetric_state({3, 2.0, 0.5});
  if (name == "quad4")
    return quad_family({quad4_alpha(), quad4_beta(), QuadFamily::FourMode});
  if (name == "bisep32") return trisym_state(1.5, 2.0 / 3.0);
  throw std::invalid_argument("fixture: unknown name '" + name + "'");
}

std::vector<Mat> random_suite(SuiteKind kind, int n, int count, std::uint64_t seed) {
  if (n < 1 || count < 1) throw std::invalid_argument("random_suite: bad n or count");
  const double lo = kind == SuiteKind::Cm ? -1.0 : 0.001;
  const double hi = kind == SuiteKind::Cm ? 1.0 : 0.1;
  Prng root(seed);
  std::vector<Mat> out;
  out.reserve(count);
  for (int c = 0; c < count; ++c) {
    Prng rng = root.split(c);
    Mat m(2 * n, 2 * n);
    for (int i = 0; i < 2 * n; ++i)
      for (int j = i; j < 2 * n; ++j) m(i, j) = m(j, i) = rng.uniform(lo, hi);
    out.push_back(std::move(m));
  }
  return out;
}

Mat random_physical_full(int n, Prng& rng, double margin) {
  // S = exp(Omega Q) is symplectic for symmetric Q; gamma = S D S^T with
  // symplectic spectrum D >= 1/2 + margin is then physical by construction.
  Mat Q(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = i; j < 2 * n; ++j) Q(i, j) = Q(j, i) = rng.uniform(-0.3, 0.3);
  Mat S = (omega(n) * Q).exp();
  Vec d(2 * n);
  for (int j = 0; j < n; ++j) d[j] = d[n + j] = 0.5 + margin + rng.uniform(0.0, 1.0);
  return S * d.asDiagonal() * S.transpose();
}

CovMatrix random_physical_reduced(int n, Prng& rng, double scale_min, double scale_max) {
  // Minimizing state of random PD (X, P), scaled by >= 1: physical, reduced.
  Mat X(n, n), P(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      X(i, j) = X(j, i) = rng.uniform(-1.0, 1.0);
      P(i, j) = P(j, i) = rng.uniform(-1.0, 1.0);
    }
  X = Mat(X * X.transpose()) + 0.2 * Mat::Identity(n, n);
  P = Mat(P * P.transpose()) + 0.2 * Mat::Identity(n, n);
  CovMatrix g = minimizing_state_reduced(X, P);
  double c = rng.uniform(scale_min, scale_max);
  return CovMatrix::reduced(c * g.xx, c * g.pp);
}

}  // namespace gwit
