#include "gwit/conic.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gwit {

namespace {
const double kRt2 = std::sqrt(2.0);
}

int svec_dim(int k) { return k * (k + 1) / 2; }

int svec_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return j * (j + 1) / 2 + i;
}

Vec svec(const Mat& A) {
  const int k = static_cast<int>(A.rows());
  Vec v(svec_dim(k));
  for (int j = 0; j < k; ++j)
    for (int i = 0; i <= j; ++i) v[svec_index(i, j)] = (i == j ? A(i, j) : kRt2 * A(i, j));
  return v;
}

Mat smat(const Vec& v, int k) {
  if (v.size() != svec_dim(k)) throw std::invalid_argument("smat: size mismatch");
  Mat A(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i <= j; ++i) {
      double x = v[svec_index(i, j)];
      A(i, j) = A(j, i) = (i == j ? x : x / kRt2);
    }
  return A;
}

int ConicProgram::new_var() { return nvars_++; }

int ConicProgram::new_vars(int k) {
  if (k < 1) throw std::invalid_argument("new_vars: k must be positive");
  int first = nvars_;
  nvars_ += k;
  return first;
}

void ConicProgram::add_obj_term(int var, double coeff) {
  if (var < 0 || var >= nvars_) throw std::invalid_argument("add_obj_term: bad variable");
  if (coeff != 0.0) obj_terms_.emplace_back(var, coeff);
}

void ConicProgram::add_quad_term(const LinExpr& e, double weight) {
  if (weight < 0.0) throw std::invalid_argument("add_quad_term: negative weight");
  if (weight > 0.0) quads_.push_back({e, weight});
}

int ConicProgram::add_eq(const LinExpr& e) {
  eqs_.push_back(e);
  return static_cast<int>(eqs_.size()) - 1;
}

int ConicProgram::add_nonneg(const LinExpr& e) {
  nonnegs_.push_back(e);
  return static_cast<int>(nonnegs_.size()) - 1;
}

int ConicProgram::add_soc(const std::vector<LinExpr>& u) {
  if (u.size() < 2) throw std::invalid_argument("add_soc: need at least two rows");
  socs_.push_back({u});
  return static_cast<int>(socs_.size()) - 1;
}

int ConicProgram::add_psd(int side) {
  if (side < 1) throw std::invalid_argument("add_psd: bad side");
  psds_.push_back({side, std::vector<LinExpr>(svec_dim(side))});
  return static_cast<int>(psds_.size()) - 1;
}

void ConicProgram::psd_entry(int block, int i, int j, const LinExpr& e) {
  if (block < 0 || block >= static_cast<int>(psds_.size()))
    throw std::invalid_argument("psd_entry: bad block");
  auto& b = psds_[block];
  if (i < 0 || j < 0 || i >= b.side || j >= b.side)
    throw std::invalid_argument("psd_entry: index out of range");
  if (i > j) std::swap(i, j);
  b.entries[svec_index(i, j)].add(e);
}

int ConicProgram::add_psd_hermitian(
    int side, const std::vector<std::tuple<int, int, LinExpr>>& S,
    const std::vector<std::tuple<int, int, LinExpr>>& A) {
  bool imag_present = false;
  for (const auto& [i, j, e] : A) {
    if (i >= j) throw std::invalid_argument("add_psd_hermitian: A entries need i < j");
    if (i < 0 || j >= side) throw std::invalid_argument("add_psd_hermitian: A index");
    if (e.constant != 0.0 || !e.terms.empty()) imag_present = true;
  }
  if (!imag_present) {
    int blk = add_psd(side);
    for (const auto& [i, j, e] : S) psd_entry(blk, i, j, e);
    return blk;
  }
  // Real embedding [[S, A], [-A, S]]: symmetric since A' = -A.
  int blk = add_psd(2 * side);
  for (const auto& [i, j, e] : S) {
    if (i > j) throw std::invalid_argument("add_psd_hermitian: S entries need i <= j");
    psd_entry(blk, i, j, e);
    psd_entry(blk, side + i, side + j, e);
  }
  for (const auto& [i, j, e] : A) {
    psd_entry(blk, i, side + j, e);          // A_ij
    LinExpr neg;
    neg.add(e, -1.0);
    psd_entry(blk, j, side + i, neg);        // (A')_ji = -A_ij
  }
  return blk;
}

Vec ConicProgram::obj_vector() const {
  Vec c = Vec::Zero(nvars_);
  for (auto& [i, v] : obj_terms_) c[i] += v;
  return c;
}

void ConicProgram::validate() const {
  auto check_expr = [&](const LinExpr& e, const char* where) {
    for (auto& [i, v] : e.terms) {
      if (i < 0 || i >= nvars_)
        throw std::invalid_argument(std::string("validate: bad variable in ") + where);
      if (!std::isfinite(v))
        throw std::invalid_argument(std::string("validate: non-finite coeff in ") + where);
    }
    if (!std::isfinite(e.constant))
      throw std::invalid_argument(std::string("validate: non-finite constant in ") + where);
  };
  std::vector<char> used(nvars_, 0);
  auto mark = [&](const LinExpr& e) {
    for (auto& [i, v] : e.terms)
      if (v != 0.0) used[i] = 1;
  };
  for (auto& [i, v] : obj_terms_) {
    if (i < 0 || i >= nvars_) throw std::invalid_argument("validate: bad obj variable");
    if (v != 0.0) used[i] = 1;
  }
  for (const auto& q : quads_) { check_expr(q.e, "quadratic term"); mark(q.e); }
  for (const auto& e : eqs_) { check_expr(e, "equality"); mark(e); }
  for (const auto& e : nonnegs_) { check_expr(e, "nonneg row"); mark(e); }
  for (const auto& b : socs_)
    for (const auto& e : b.rows) { check_expr(e, "soc row"); mark(e); }
  for (const auto& b : psds_)
    for (const auto& e : b.entries) { check_expr(e, "psd entry"); mark(e); }
  for (int i = 0; i < nvars_; ++i)
    if (!used[i])
      throw std::invalid_argument("validate: variable " + std::to_string(i) +
                                  " referenced by no constraint or objective");
  if (nonnegs_.empty() && socs_.empty() && psds_.empty() && quads_.empty())
    throw std::invalid_argument("validate: program has no cone constraints");
}

namespace {
void print_expr(std::ostringstream& os, const LinExpr& e) {
  os << e.constant;
  for (auto& [i, v] : e.terms) os << " + " << v << "*x" << i;
}
}  // namespace

std::string ConicProgram::dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "conic-program vars " << nvars_ << "\n";
  os << "minimize " << obj_const_;
  for (auto& [i, v] : obj_terms_) os << " + " << v << "*x" << i;
  os << "\n";
  for (const auto& q : quads_) {
    os << "quad 0.5 * " << q.weight << " * (";
    print_expr(os, q.e);
    os << ")^2\n";
  }
  for (const auto& e : eqs_) {
    os << "eq 0 = ";
    print_expr(os, e);
    os << "\n";
  }
  for (const auto& e : nonnegs_) {
    os << "nonneg ";
    print_expr(os, e);
    os << "\n";
  }
  for (const auto& b : socs_) {
    os << "soc dim " << b.rows.size() << "\n";
    for (const auto& e : b.rows) {
      os << "  row ";
      print_expr(os, e);
      os << "\n";
    }
  }
  for (const auto& b : psds_) {
    os << "psd side " << b.side << "\n";
    for (int j = 0; j < b.side; ++j)
      for (int i = 0; i <= j; ++i) {
        const LinExpr& e = b.entries[svec_index(i, j)];
        if (e.constant == 0.0 && e.terms.empty()) continue;
        os << "  entry " << i << " " << j << " ";
        print_expr(os, e);
        os << "\n";
      }
  }
  return os.str();
}

Mat ConicSolution::psd_dual_matrix(int block) const {
  return smat(psd_duals.at(block), psd_sides.at(block));
}

Mat ConicSolution::psd_slack_matrix(int block) const {
  return smat(psd_slacks.at(block), psd_sides.at(block));
}

}  // namespace gwit
