#include "gwit/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gwit {

void require_symmetric(const Mat& A, double symTol, const char* what) {
  if (A.rows() != A.cols())
    throw std::invalid_argument(std::string(what) + ": matrix not square");
  double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > symTol)
    throw std::invalid_argument(std::string(what) + ": asymmetry " +
                                std::to_string(asym) + " exceeds symTol");
}

static Mat symmetrize(const Mat& A) { return 0.5 * (A + A.transpose()); }

CovMatrix CovMatrix::full(Mat gamma, const Tolerances& tols) {
  require_symmetric(gamma, tols.symTol, "CovMatrix.full");
  if (gamma.rows() % 2 != 0)
    throw std::invalid_argument("CovMatrix.full: odd dimension");
  CovMatrix g;
  g.n = static_cast<int>(gamma.rows()) / 2;
  g.layout = Layout::Full;
  g.gamma = symmetrize(gamma);
  return g;
}

CovMatrix CovMatrix::reduced(Mat xx, Mat pp, const Tolerances& tols) {
  require_symmetric(xx, tols.symTol, "CovMatrix.reduced xx");
  require_symmetric(pp, tols.symTol, "CovMatrix.reduced pp");
  if (xx.rows() != pp.rows())
    throw std::invalid_argument("CovMatrix.reduced: xx/pp size mismatch");
  CovMatrix g;
  g.n = static_cast<int>(xx.rows());
  g.layout = Layout::Reduced;
  g.xx = symmetrize(xx);
  g.pp = symmetrize(pp);
  return g;
}

Mat CovMatrix::full_gamma() const {
  if (layout == Layout::Full) return gamma;
  Mat g = Mat::Zero(2 * n, 2 * n);
  g.topLeftCorner(n, n) = xx;
  g.bottomRightCorner(n, n) = pp;
  return g;
}

Mat CovMatrix::block_xx() const {
  return layout == Layout::Full ? gamma.topLeftCorner(n, n) : xx;
}
Mat CovMatrix::block_pp() const {
  return layout == Layout::Full ? gamma.bottomRightCorner(n, n) : pp;
}
Mat CovMatrix::block_xp() const {
  return layout == Layout::Full ? gamma.topRightCorner(n, n) : Mat(Mat::Zero(n, n));
}

CovMatrix CovMatrix::as_full(const Tolerances& tols) const {
  return layout == Layout::Full ? *this : CovMatrix::full(full_gamma(), tols);
}

bool CovMatrix::xp_is_zero(const Tolerances& tols) const {
  if (layout == Layout::Reduced) return true;
  return gamma.topRightCorner(n, n).cwiseAbs().maxCoeff() <= tols.symTol;
}

Mat omega(int n) {
  Mat w = Mat::Zero(2 * n, 2 * n);
  w.topRightCorner(n, n) = Mat::Identity(n, n);
  w.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return w;
}

Mat embed_real(const Mat& S, const Mat& A, const Tolerances& tols) {
  require_symmetric(S, tols.symTol, "embed_real S");
  if (A.rows() != A.cols() || A.rows() != S.rows())
    throw std::invalid_argument("embed_real: dimension mismatch");
  if ((A + A.transpose()).cwiseAbs().maxCoeff() > tols.symTol)
    throw std::invalid_argument("embed_real: A not antisymmetric");
  const auto k = S.rows();
  Mat H(2 * k, 2 * k);
  H.topLeftCorner(k, k) = S;
  H.topRightCorner(k, k) = A;
  H.bottomLeftCorner(k, k) = -A;
  H.bottomRightCorner(k, k) = S;
  return H;
}

Mat physicality_embedding(const CovMatrix& g) {
  if (g.layout == Layout::Full) {
    // [[gamma, Omega/2], [-Omega/2, gamma]], the real form of gamma + (i/2)Omega.
    return embed_real(g.gamma, 0.5 * omega(g.n));
  }
  Mat H(2 * g.n, 2 * g.n);
  H.topLeftCorner(g.n, g.n) = g.xx;
  H.topRightCorner(g.n, g.n) = 0.5 * Mat::Identity(g.n, g.n);
  H.bottomLeftCorner(g.n, g.n) = 0.5 * Mat::Identity(g.n, g.n);
  H.bottomRightCorner(g.n, g.n) = g.pp;
  return H;
}

double min_eig_sym(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double physicality_min_eig(const CovMatrix& g) {
  return min_eig_sym(physicality_embedding(g));
}

bool is_physical(const CovMatrix& g, const Tolerances& tols) {
  return physicality_min_eig(g) >= -tols.physTol;
}

// Eigenvalues clipped per the PSD-input rule: values in [-clip, 0) become 0,
// anything below -clip is a domain error. clip = psdClipTol * ||M||_2.
static Vec clipped_psd_eigs(const Mat& M, const Tolerances& tols, const char* what,
                            Mat* vectors) {
  require_symmetric(M, tols.symTol, what);
  Eigen::SelfAdjointEigenSolver<Mat> es(M, vectors ? Eigen::ComputeEigenvectors
                                                   : Eigen::EigenvaluesOnly);
  Vec ev = es.eigenvalues();
  double clip = tols.psdClipTol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -clip)
      throw std::invalid_argument(std::string(what) + ": eigenvalue " +
                                  std::to_string(ev[i]) + " below -psdClipTol");
    if (ev[i] < 0) ev[i] = 0;
  }
  if (vectors) *vectors = es.eigenvectors();
  return ev;
}

Mat sqrt_psd(const Mat& M, const Tolerances& tols) {
  Mat V;
  Vec ev = clipped_psd_eigs(M, tols, "sqrt_psd", &V);
  return V * ev.cwiseSqrt().asDiagonal() * V.transpose();
}

double str(const Mat& M, const Tolerances& tols) {
  const int d = static_cast<int>(M.rows());
  if (d % 2 != 0) throw std::invalid_argument("str: odd dimension");
  Mat rt = sqrt_psd(M, tols);
  Mat Om = omega(d / 2);
  Mat B = rt * (Om.transpose() * M * Om) * rt;
  Vec ev = clipped_psd_eigs(symmetrize(B), tols, "str chain", nullptr);
  return 0.5 * ev.cwiseSqrt().sum();
}

double str_reduced(const Mat& X, const Mat& P, const Tolerances& tols) {
  Mat rt = sqrt_psd(X, tols);
  Mat B = rt * P * rt;
  Vec ev = clipped_psd_eigs(symmetrize(B), tols, "str_reduced chain", nullptr);
  return ev.cwiseSqrt().sum();
}

bool str_attainable(const Mat& M, const Tolerances& tols) {
  Mat rt = sqrt_psd(M, tols);
  Mat Om = omega(static_cast<int>(M.rows()) / 2);
  Mat B = symmetrize(rt * (Om.transpose() * M * Om) * rt);
  return numerical_rank(B, tols.rankTol) == numerical_rank(M, tols.rankTol);
}

bool str_attainable_reduced(const Mat& X, const Mat& P, const Tolerances& tols) {
  Mat rx = sqrt_psd(X, tols);
  Mat B = symmetrize(rx * P * rx);
  // Attainable iff the chains have full rank relative to both factors.
  return numerical_rank(B, tols.rankTol) == numerical_rank(X, tols.rankTol) &&
         numerical_rank(B, tols.rankTol) == numerical_rank(P, tols.rankTol);
}

static void require_pd_conditioned(const Mat& M, const Tolerances& tols, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (lo <= tols.pdTol * std::max(1.0, hi) || hi / std::max(lo, 1e-300) > tols.pdCondMax)
    throw std::domain_error(std::string(what) +
                            ": input singular or ill-conditioned; optimum may be unattained");
}

CovMatrix minimizing_state(const Mat& M, bool require_pd, const Tolerances& tols) {
  require_symmetric(M, tols.symTol, "minimizing_state");
  if (require_pd) require_pd_conditioned(M, tols, "minimizing_state");
  const int n = static_cast<int>(M.rows()) / 2;
  Mat rt = sqrt_psd(M, tols);
  Eigen::SelfAdjointEigenSolver<Mat> es(rt);
  Mat irt = es.operatorInverseSqrt();  // M^{-1/2} via sqrt of sqrt
  irt = irt * irt;
  Mat Om = omega(n);
  Mat B = symmetrize(rt * (Om.transpose() * M * Om) * rt);
  Mat rtB = sqrt_psd(B, tols);
  return CovMatrix::full(symmetrize(0.5 * irt * rtB * irt), tols);
}

CovMatrix minimizing_state_reduced(const Mat& X, const Mat& P, bool require_pd,
                                   const Tolerances& tols) {
  require_symmetric(X, tols.symTol, "minimizing_state_reduced X");
  require_symmetric(P, tols.symTol, "minimizing_state_reduced P");
  if (require_pd) {
    require_pd_conditioned(X, tols, "minimizing_state_reduced X");
    require_pd_conditioned(P, tols, "minimizing_state_reduced P");
  }
  Mat rx = sqrt_psd(X, tols);
  Eigen::SelfAdjointEigenSolver<Mat> esx(rx);
  Mat ix = esx.operatorInverseSqrt();
  ix = ix * ix;
  Mat rp = sqrt_psd(P, tols);
  Eigen::SelfAdjointEigenSolver<Mat> esp(rp);
  Mat ip = esp.operatorInverseSqrt();
  ip = ip * ip;
  Mat xxs = symmetrize(0.5 * ix * sqrt_psd(symmetrize(rx * P * rx), tols) * ix);
  Mat pps = symmetrize(0.5 * ip * sqrt_psd(symmetrize(rp * X * rp), tols) * ip);
  return CovMatrix::reduced(xxs, pps, tols);
}

SpectrumReport williamson(const Mat& M, bool want_S, const Tolerances& tols) {
  require_symmetric(M, tols.symTol, "williamson");
  const int n = static_cast<int>(M.rows()) / 2;
  SpectrumReport rep;
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  rep.eigs = es.eigenvalues();
  rep.min_eig = rep.eigs.minCoeff();
  if (rep.min_eig <= tols.pdTol * std::max(1.0, rep.eigs.maxCoeff()))
    throw std::domain_error("williamson: input not positive definite");

  // Antisymmetric W = sqrt(M) Omega sqrt(M); its real Schur form is
  // block-diagonal with 2x2 blocks [[0, l], [-l, 0]], l the symplectic eigs.
  Mat rt = sqrt_psd(M, tols);
  Mat W = rt * omega(n) * rt;
  W = 0.5 * (W - W.transpose());
  Eigen::RealSchur<Mat> schur(W);
  Mat T = schur.matrixT(), Q = schur.matrixU();

  std::vector<std::pair<double, int>> blocks;  // (lambda, column of u_j)
  for (int i = 0; i < 2 * n;) {
    if (i + 1 < 2 * n && std::abs(T(i + 1, i)) > 1e-14 * std::max(1.0, std::abs(T(i, i + 1)))) {
      double l = T(i, i + 1);
      if (l < 0) {
        Q.col(i).swap(Q.col(i + 1));
        l = -l;
      }
      blocks.emplace_back(l, i);
      i += 2;
    } else {
      throw std::domain_error("williamson: degenerate 1x1 Schur block (singular input?)");
    }
  }
  std::sort(blocks.begin(), blocks.end());
  rep.symplectic_eigs.resize(n);
  for (int j = 0; j < n; ++j) rep.symplectic_eigs[j] = blocks[j].first;

  if (want_S) {
    Mat F(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
      F.col(j) = Q.col(blocks[j].second);
      F.col(n + j) = Q.col(blocks[j].second + 1);
    }
    Eigen::SelfAdjointEigenSolver<Mat> esm(M);
    Mat irt = esm.operatorInverseSqrt();
    Vec d(2 * n);
    for (int j = 0; j < n; ++j) d[j] = d[n + j] = std::sqrt(blocks[j].first);
    rep.S = d.asDiagonal() * F.transpose() * irt;
  }
  return rep;
}

bool is_pure(const CovMatrix& g, const Tolerances& tols) {
  if (g.layout == Layout::Reduced) {
    Mat r = g.xx * g.pp - 0.25 * Mat::Identity(g.n, g.n);
    return r.cwiseAbs().maxCoeff() <= tols.purityTol;
  }
  Mat go = g.gamma * omega(g.n);
  Mat r = go * go + 0.25 * Mat::Identity(2 * g.n, 2 * g.n);
  return r.cwiseAbs().maxCoeff() <= tols.purityTol;
}

double product_annihilation_check(const Mat& A, const Mat& B) {
  return (A * B).cwiseAbs().maxCoeff();
}

CovMatrix partial_transpose(const CovMatrix& g, const std::vector<int>& modes) {
  Vec d = Vec::Ones(g.n);
  for (int m : modes) {
    if (m < 1 || m > g.n) throw std::invalid_argument("partial_transpose: mode out of range");
    d[m - 1] = -1.0;
  }
  if (g.layout == Layout::Reduced) {
    Mat D = d.asDiagonal();
    return CovMatrix::reduced(g.xx, D * g.pp * D);
  }
  Vec t(2 * g.n);
  t.head(g.n).setOnes();
  t.tail(g.n) = d;
  Mat T = t.asDiagonal();
  return CovMatrix::full(T * g.gamma * T);
}

int numerical_rank(const Mat& A, double relTol) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(A);
  const auto& sv = svd.singularValues();
  double cut = relTol * sv.maxCoeff();
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) ++r;
  return r;
}

}  // namespace gwit
