#pragma once

#include <string>
#include <vector>

#include "gwit/prng.hpp"
#include "gwit/symplectic.hpp"

namespace gwit {

struct SymmetricParams {
  int n = 2;
  double lambda = 1.0;
  double mu = 1.0;
};

enum class QuadFamily { FourMode, TriSym };

struct QuadFamilyParams {
  double alpha = 1.0;
  double beta = 0.0;
  QuadFamily family = QuadFamily::FourMode;
};

// Symmetric circulant with eigenvalue l on the all-ones vector and m with
// multiplicity n-1: diagonal (l+(n-1)m)/n, off-diagonal (l-m)/n.
Mat C_matrix(int n, double l, double m);

// gamma_xx = C(lambda, mu)/2, gamma_pp = C(1/lambda, 1/mu)/2; pure boundary
// state for all positive parameters, vacuum iff lambda = mu = 1.
CovMatrix symmetric_state(const SymmetricParams& p);

// Four-mode family: gamma_xx with the (G4) sign pattern, gamma_pp = beta -> -beta.
CovMatrix quad_family(const QuadFamilyParams& p);

// Named fixtures with exact printed entries:
//   bbs4     4-mode bound entangled state (entries in halves)
//   tri3     symmetric_state(3, 2, 1/2)
//   quad4    four-mode family at the closed-form (alpha, beta) point
//   bisep32  trisym alpha = 3/2, beta = 2/3
// Parametric fixtures use the dedicated constructors below.
CovMatrix fixture(const std::string& name);
CovMatrix trisym_state(double alpha, double beta);
CovMatrix sq3mix_state(double r);  // trisym with alpha=(cosh 2r + 1/2)/3, beta=sinh(2r)/6

// Closed-form parameters of the quad4 fixture.
double quad4_alpha();
double quad4_beta();

// Physicality boundaries of the parametric families.
bool quad_family_physical(double alpha, double beta);    // beta^2 <= (alpha^2 - 1/4)/2
bool trisym_physical(double alpha, double beta);         // |beta| <= sqrt(4 alpha^2 - 1)/4

enum class SuiteKind { Cm, Sigma };

// Seeded random suites: symmetric 2n x 2n matrices, entries uniform in
// [-1, 1] (cm) or [0.001, 0.1] (sigma). Deterministic via Prng.
std::vector<Mat> random_suite(SuiteKind kind, int n, int count, std::uint64_t seed);

// Random physical CMs for property tests (not part of the paper protocol):
// Williamson-built full CMs and reduced CMs from minimizing states.
Mat random_physical_full(int n, Prng& rng, double margin = 0.0);
CovMatrix random_physical_reduced(int n, Prng& rng, double scale_min = 1.0,
                                  double scale_max = 2.0);

}  // namespace gwit
