#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gwit/symplectic.hpp"

namespace gwit {

// Affine scalar expression sum_i coeff_i x_i + constant over program variables.
struct LinExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;

  static LinExpr c(double v) { return LinExpr{v, {}}; }
  static LinExpr var(int i, double coeff = 1.0) { return LinExpr{0.0, {{i, coeff}}}; }
  LinExpr& add(int i, double coeff) {
    if (coeff != 0.0) terms.emplace_back(i, coeff);
    return *this;
  }
  LinExpr& add(const LinExpr& e, double scale = 1.0) {
    constant += scale * e.constant;
    for (auto& [i, c0] : e.terms) add(i, scale * c0);
    return *this;
  }
};

// Symmetric-matrix vectorization: (i, j), i <= j, column-upper order
// idx = j(j+1)/2 + i; off-diagonal coordinates carry a sqrt(2) factor so that
// <svec A, svec B> = tr(A B).
int svec_dim(int k);
int svec_index(int i, int j);
Vec svec(const Mat& A);
Mat smat(const Vec& v, int k);

enum class ConeType { Nonneg, SecondOrder, Psd };

enum class SolveStatus { Optimal, Infeasible, Unbounded, Inaccurate };

// min c'x + 0.5 sum_q w_q (e_q(x))^2 + const
// s.t. equalities e(x) = 0, nonneg rows e(x) >= 0, SOC blocks, PSD blocks.
// Quadratic terms are lowered to one second-order cone inside solve().
class ConicProgram {
 public:
  int new_var();
  int new_vars(int k);  // first index of a contiguous range
  int num_vars() const { return nvars_; }

  void add_obj_term(int var, double coeff);
  void add_obj_constant(double c) { obj_const_ += c; }
  void add_quad_term(const LinExpr& e, double weight);  // += 0.5*weight*e^2

  int add_eq(const LinExpr& e);      // returns equality row id
  int add_nonneg(const LinExpr& e);  // returns nonneg row id

  int add_soc(const std::vector<LinExpr>& u);  // u0 >= ||(u1..uk)||, block id
  int add_psd(int side);                       // PSD block id
  // Accumulates Block_ij += e (i <= j; symmetric counterpart implied).
  void psd_entry(int block, int i, int j, const LinExpr& e);

  // Hermitian-valued map S(x) + i A(x) >= 0 with S symmetric (entries given
  // for i <= j) and A antisymmetric (entries for i < j). Emits the real
  // embedding [[S, A], [-A, S]] as PSD(2k), or PSD(k) when A has no entries
  // and no constants (purely real map).
  int add_psd_hermitian(int side, const std::vector<std::tuple<int, int, LinExpr>>& S,
                        const std::vector<std::tuple<int, int, LinExpr>>& A);

  void validate() const;  // throws std::invalid_argument on malformed programs

  std::string dump() const;  // plain-text replay format

  // Introspection used by the solver and tests.
  struct SocBlock { std::vector<LinExpr> rows; };
  struct PsdBlock { int side = 0; std::vector<LinExpr> entries; };  // svec order
  struct QuadTerm { LinExpr e; double weight = 0.0; };

  Vec obj_vector() const;
  double obj_constant() const { return obj_const_; }
  const std::vector<QuadTerm>& quad_terms() const { return quads_; }
  const std::vector<LinExpr>& equalities() const { return eqs_; }
  const std::vector<LinExpr>& nonneg_rows() const { return nonnegs_; }
  const std::vector<SocBlock>& soc_blocks() const { return socs_; }
  const std::vector<PsdBlock>& psd_blocks() const { return psds_; }

 private:
  int nvars_ = 0;
  std::vector<std::pair<int, double>> obj_terms_;
  double obj_const_ = 0.0;
  std::vector<QuadTerm> quads_;
  std::vector<LinExpr> eqs_;
  std::vector<LinExpr> nonnegs_;
  std::vector<SocBlock> socs_;
  std::vector<PsdBlock> psds_;
};

struct SolveOptions {
  double feasTol = 1e-8;
  double gapTol = 1e-8;   // relative gap |p-d|/max(1, |p|)
  double absTol = 1e-8;
  int maxIter = 100;
  int refineSteps = 3;
  bool verbose = false;
  std::optional<bool> useSparse;  // backend override; default is a size heuristic
};

struct ConicSolution {
  SolveStatus status = SolveStatus::Inaccurate;
  Vec x;                       // primal assignment (original variables)
  Vec eq_duals;                // nu per equality row
  Vec nonneg_duals;            // z per nonneg row
  Vec nonneg_slacks;           // s per nonneg row
  std::vector<Vec> soc_duals;  // per SOC block
  std::vector<Vec> soc_slacks;
  std::vector<Vec> psd_duals;  // per PSD block, svec coordinates
  std::vector<Vec> psd_slacks;
  std::vector<int> psd_sides;
  double primal_obj = std::numeric_limits<double>::quiet_NaN();
  double dual_obj = std::numeric_limits<double>::quiet_NaN();
  double gap = 0.0, rel_gap = 0.0, pres = 0.0, dres = 0.0;
  int iterations = 0;
  std::string message;
  // Complementary slackness <s, z> per cone block: nonneg rows first
  // (elementwise), then SOC, then PSD blocks.
  std::vector<double> comp_residuals;

  Mat psd_dual_matrix(int block) const;   // smat of psd_duals[block]
  Mat psd_slack_matrix(int block) const;  // smat of psd_slacks[block]
};

ConicSolution solve(const ConicProgram& p, const SolveOptions& opts = {});

}  // namespace gwit
