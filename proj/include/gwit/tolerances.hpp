#pragma once

namespace gwit {

// Numerical tolerances shared across modules. All configurable; the defaults
// below are the contract values used by the test suite.
struct Tolerances {
  double symTol = 1e-12;     // max|A - A^T| allowed in stored symmetric blocks
  double physTol = 1e-8;     // physicality: min eig of the embedded P(gamma) >= -physTol
  double purityTol = 1e-7;   // max|(gamma Omega)^2 + E/4| for purity
  double pdTol = 1e-10;      // strict positive definiteness margin
  double kktTol = 1e-6;      // max-abs residual per KKT equation
  double psdClipTol = 1e-9;  // relative (times ||M||_2): eigs in [-clip, 0) clamp to 0
  double activeTol = 1e-6;   // mixture weight p_I counted as active above this
  double certTol = 1e-7;     // verdict threshold: entangled iff margin < -certTol
  double rankTol = 1e-7;     // relative singular-value cutoff for numerical rank
  double bndTol = 1e-6;      // boundary check: |min eig| below this
  double pdCondMax = 1e12;   // condition-number cap for minimizing_state inputs
};

inline const Tolerances& default_tols() {
  static const Tolerances t{};
  return t;
}

}  // namespace gwit
