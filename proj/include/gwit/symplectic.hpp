#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gwit/tolerances.hpp"

namespace gwit {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Layout { Full, Reduced };

// Covariance matrix of an n-mode Gaussian state, blocks ordered x-then-p.
// Full stores the whole 2n x 2n gamma; Reduced fixes the xp block to zero
// and stores the pair (xx, pp). Construction enforces symmetry to symTol.
struct CovMatrix {
  int n = 0;
  Layout layout = Layout::Full;
  Mat gamma;    // Full: 2n x 2n
  Mat xx, pp;   // Reduced: n x n each

  static CovMatrix full(Mat gamma, const Tolerances& tols = default_tols());
  static CovMatrix reduced(Mat xx, Mat pp, const Tolerances& tols = default_tols());

  bool is_reduced() const { return layout == Layout::Reduced; }
  Mat full_gamma() const;   // materializes the 2n x 2n form (xp = 0 when reduced)
  Mat block_xx() const;
  Mat block_pp() const;
  Mat block_xp() const;
  CovMatrix as_full(const Tolerances& tols = default_tols()) const;
  // True when the xp block vanishes entrywise to symTol (reduced-representable).
  bool xp_is_zero(const Tolerances& tols = default_tols()) const;
};

struct SpectrumReport {
  double min_eig = 0.0;  // smallest eigenvalue of the input matrix
  Vec eigs;              // ascending
  Vec symplectic_eigs;   // ascending, each pair counted once
  Mat S;                 // symplectic diagonalizer S M S^T = D (when requested)
};

// Omega_n = [[0, E], [-E, 0]].
Mat omega(int n);

// Real form [[S, A], [-A, S]] of the Hermitian H = S + iA (bottom sign);
// PSD iff H is PSD, spectrum doubled.
Mat embed_real(const Mat& S, const Mat& A, const Tolerances& tols = default_tols());

// The physicality block: full -> [[gamma, Omega/2], [-Omega/2, gamma]] (4n),
// reduced -> [[xx, E/2], [E/2, pp]] (2n).
Mat physicality_embedding(const CovMatrix& g);
double physicality_min_eig(const CovMatrix& g);
bool is_physical(const CovMatrix& g, const Tolerances& tols = default_tols());

// Symplectic trace: str(M) = tr sqrt(sqrt(M) Omega^T M Omega sqrt(M)) / 2 and
// str(X, P) = tr sqrt(sqrt(X) P sqrt(X)); defined for PSD inputs, equal to the
// sum of symplectic eigenvalues when M is PD.
double str(const Mat& M, const Tolerances& tols = default_tols());
double str_reduced(const Mat& X, const Mat& P, const Tolerances& tols = default_tols());

// Heuristic attainability flag for the minimum of tr(M gamma): rank of the
// product chain equals rank of M. Exact for PD inputs; a hint otherwise.
bool str_attainable(const Mat& M, const Tolerances& tols = default_tols());
bool str_attainable_reduced(const Mat& X, const Mat& P,
                            const Tolerances& tols = default_tols());

// Unique minimizer gamma_M of tr(M gamma) over physical gamma, M PD.
CovMatrix minimizing_state(const Mat& M, bool require_pd = true,
                           const Tolerances& tols = default_tols());
CovMatrix minimizing_state_reduced(const Mat& X, const Mat& P, bool require_pd = true,
                                   const Tolerances& tols = default_tols());

SpectrumReport williamson(const Mat& M, bool want_S = false,
                          const Tolerances& tols = default_tols());

// Purity: (gamma Omega)^2 = -E/4, reduced xx * pp = E/4.
bool is_pure(const CovMatrix& g, const Tolerances& tols = default_tols());

// max|A B|; Lemma: PSD A, B with tr(AB) = 0 have AB = 0.
double product_annihilation_check(const Mat& A, const Mat& B);

// Sign flip of the p quadratures of the given modes (1-based).
CovMatrix partial_transpose(const CovMatrix& g, const std::vector<int>& modes);

// Helpers shared by builders and tests.
Mat sqrt_psd(const Mat& M, const Tolerances& tols = default_tols());
double min_eig_sym(const Mat& A);
int numerical_rank(const Mat& A, double relTol = default_tols().rankTol);
void require_symmetric(const Mat& A, double symTol, const char* what);

}  // namespace gwit
