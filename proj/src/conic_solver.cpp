#include <lapacke.h>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gwit/blas_env.hpp"
#include "gwit/conic.hpp"

namespace gwit {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Term {
  int var;
  double coeff;
};
using Row = std::vector<Term>;

Row canonical(const std::vector<std::pair<int, double>>& terms, double scale) {
  Row r;
  r.reserve(terms.size());
  for (auto& [v, c] : terms) r.push_back({v, scale * c});
  std::sort(r.begin(), r.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  Row out;
  for (const Term& t : r) {
    if (!out.empty() && out.back().var == t.var)
      out.back().coeff += t.coeff;
    else
      out.push_back(t);
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const Term& t) { return t.coeff == 0.0; }),
            out.end());
  return out;
}

// Internal standard form: min c'x s.t. A x = b, G x + s = h, s in K.
struct StdForm {
  int N = 0, orig_N = 0;
  Vec c;
  double obj_const = 0.0;
  std::vector<Row> Arows;
  Vec b;
  std::vector<Row> Grows;  // rows of G; cone order: nonneg, soc blocks, psd blocks
  Vec h;
  int nl = 0;
  std::vector<int> soc_dims, soc_offs;          // dims include the leading coord
  std::vector<int> psd_sides, psd_offs;
  struct PsdEntry {
    int i, j;   // i <= j, matrix position
    double c;   // matrix coefficient (applied symmetrically)
  };
  struct PsdVar {
    int var;
    std::vector<PsdEntry> entries;
  };
  std::vector<std::vector<PsdVar>> psd_vars;    // per block, ascending var
  std::vector<std::vector<int>> soc_var_lists;  // sorted unique vars per block
  std::vector<std::vector<int>> psd_var_lists;
  std::vector<bool> psd_fast;  // embedded-pair fast Schur assembly applies
  std::vector<int> psd_fast_base;
  int m = 0, p = 0, D = 0;
  SpMat G, Gt, A, At;
  int n_soc_orig = 0;  // SOC blocks present before quadratic lowering
};

void gather_rows(const std::vector<LinExpr>& exprs, double coord_scale,
                 std::vector<Row>& rows, std::vector<double>& hv) {
  for (const auto& e : exprs) {
    rows.push_back(canonical(e.terms, -coord_scale));
    hv.push_back(coord_scale * e.constant);
  }
}

StdForm build_stdform(const ConicProgram& prog) {
  StdForm P;
  P.orig_N = prog.num_vars();
  const auto& quads = prog.quad_terms();
  const bool has_quad = !quads.empty();
  P.N = P.orig_N + (has_quad ? 1 : 0);
  P.c = Vec::Zero(P.N);
  P.c.head(P.orig_N) = prog.obj_vector();
  P.obj_const = prog.obj_constant();

  P.b = Vec(prog.equalities().size());
  for (size_t i = 0; i < prog.equalities().size(); ++i) {
    P.Arows.push_back(canonical(prog.equalities()[i].terms, 1.0));
    P.b[static_cast<int>(i)] = -prog.equalities()[i].constant;
  }
  P.p = static_cast<int>(P.Arows.size());

  std::vector<double> hv;
  gather_rows(prog.nonneg_rows(), 1.0, P.Grows, hv);
  P.nl = static_cast<int>(P.Grows.size());

  P.n_soc_orig = static_cast<int>(prog.soc_blocks().size());
  for (const auto& blk : prog.soc_blocks()) {
    P.soc_offs.push_back(static_cast<int>(P.Grows.size()));
    P.soc_dims.push_back(static_cast<int>(blk.rows.size()));
    gather_rows(blk.rows, 1.0, P.Grows, hv);
  }
  if (has_quad) {
    // Epigraph t >= 0.5 sum w e^2 as ||(sqrt(2 w) e, t - 1)|| <= t + 1.
    const int t = P.orig_N;
    P.c[t] = 1.0;
    P.soc_offs.push_back(static_cast<int>(P.Grows.size()));
    P.soc_dims.push_back(static_cast<int>(quads.size()) + 2);
    std::vector<LinExpr> rows;
    rows.push_back(LinExpr::var(t).add(LinExpr::c(1.0)));
    for (const auto& q : quads) {
      LinExpr e;
      e.add(q.e, std::sqrt(2.0 * q.weight));
      rows.push_back(e);
    }
    rows.push_back(LinExpr::var(t).add(LinExpr::c(-1.0)));
    gather_rows(rows, 1.0, P.Grows, hv);
  }

  const double rt2 = std::sqrt(2.0);
  for (const auto& blk : prog.psd_blocks()) {
    P.psd_offs.push_back(static_cast<int>(P.Grows.size()));
    P.psd_sides.push_back(blk.side);
    std::vector<std::pair<int, StdForm::PsdEntry>> ent;  // (var, entry)
    for (int j = 0; j < blk.side; ++j)
      for (int i = 0; i <= j; ++i) {
        const LinExpr& e = blk.entries[svec_index(i, j)];
        double w = (i == j) ? 1.0 : rt2;
        P.Grows.push_back(canonical(e.terms, -w));
        hv.push_back(w * e.constant);
        Row combined = canonical(e.terms, 1.0);
        for (const Term& t : combined) ent.push_back({t.var, {i, j, t.coeff}});
      }
    std::sort(ent.begin(), ent.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<StdForm::PsdVar> pv;
    for (auto& [v, e] : ent) {
      if (pv.empty() || pv.back().var != v) pv.push_back({v, {}});
      pv.back().entries.push_back(e);
    }
    P.psd_vars.push_back(std::move(pv));
  }

  P.m = static_cast<int>(P.Grows.size());
  P.h = Eigen::Map<Vec>(hv.data(), P.m);
  P.D = P.nl + static_cast<int>(P.soc_dims.size());
  for (int k : P.psd_sides) P.D += k;

  std::vector<Triplet> tg, ta;
  for (int r = 0; r < P.m; ++r)
    for (const Term& t : P.Grows[r]) tg.emplace_back(r, t.var, t.coeff);
  for (int r = 0; r < P.p; ++r)
    for (const Term& t : P.Arows[r]) ta.emplace_back(r, t.var, t.coeff);
  P.G.resize(P.m, P.N);
  P.G.setFromTriplets(tg.begin(), tg.end());
  P.A.resize(P.p, P.N);
  P.A.setFromTriplets(ta.begin(), ta.end());
  P.Gt = P.G.transpose();
  P.At = P.A.transpose();

  // Per-block variable lists and fast-path detection.
  for (size_t bsoc = 0; bsoc < P.soc_dims.size(); ++bsoc) {
    std::vector<int> vars;
    for (int r = P.soc_offs[bsoc]; r < P.soc_offs[bsoc] + P.soc_dims[bsoc]; ++r)
      for (const Term& t : P.Grows[r]) vars.push_back(t.var);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    P.soc_var_lists.push_back(std::move(vars));
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    std::vector<int> vars;
    for (const auto& pv : P.psd_vars[bp]) vars.push_back(pv.var);
    P.psd_var_lists.push_back(vars);
    // Fast path: contiguous svec-ordered variables each placed at (i, j) and
    // (i + k/2, j + k/2) with unit coefficient.
    const int k = P.psd_sides[bp], k2 = k / 2;
    bool fast = (k % 2 == 0) && !vars.empty() &&
                static_cast<int>(vars.size()) == svec_dim(k2);
    int base = fast ? vars.front() : -1;
    if (fast)
      for (const auto& pv : P.psd_vars[bp]) {
        if (pv.entries.size() != 2) { fast = false; break; }
        const auto& e0 = pv.entries[0];
        const auto& e1 = pv.entries[1];
        if (e0.c != 1.0 || e1.c != 1.0 || e0.j >= k2 || e1.i != e0.i + k2 ||
            e1.j != e0.j + k2 || pv.var != base + svec_index(e0.i, e0.j)) {
          fast = false;
          break;
        }
      }
    P.psd_fast.push_back(fast);
    P.psd_fast_base.push_back(base);
  }
  return P;
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scaling

struct Scaling {
  Vec w2;  // nonneg: s/z
  struct Soc {
    double beta;
    Vec v;  // v'Jv = 1, W = beta (2 v v' - J)
  };
  std::vector<Soc> socs;
  struct Psd {
    Mat R, Rinv, Sig, SigInv;  // Sig = R R', SigInv = (R R')^{-1}
    Vec sigma;
  };
  std::vector<Psd> psds;
  Vec lambda;  // scaled point
};

Scaling identity_scaling(const StdForm& P) {
  Scaling sc;
  sc.w2 = Vec::Ones(P.nl);
  for (int d : P.soc_dims) {
    Scaling::Soc s;
    s.beta = 1.0;
    s.v = Vec::Zero(d);
    s.v[0] = 1.0;
    sc.socs.push_back(std::move(s));
  }
  for (int k : P.psd_sides) {
    Scaling::Psd ps;
    ps.R = Mat::Identity(k, k);
    ps.Rinv = ps.R;
    ps.Sig = ps.R;
    ps.SigInv = ps.R;
    ps.sigma = Vec::Ones(k);
    sc.psds.push_back(std::move(ps));
  }
  sc.lambda = Vec::Zero(P.m);
  return sc;
}

double jdot0(const Vec& u) { return u[0] * u[0] - u.tail(u.size() - 1).squaredNorm(); }

bool compute_scaling(const StdForm& P, const Vec& s, const Vec& z, Scaling& sc) {
  sc.socs.clear();
  sc.psds.clear();
  sc.lambda = Vec(P.m);
  sc.w2 = Vec(P.nl);
  for (int r = 0; r < P.nl; ++r) {
    if (s[r] <= 0 || z[r] <= 0) return false;
    sc.w2[r] = s[r] / z[r];
    sc.lambda[r] = std::sqrt(s[r] * z[r]);
  }
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    Vec sb = s.segment(off, d), zb = z.segment(off, d);
    double js = jdot0(sb), jz = jdot0(zb);
    if (js <= 0 || jz <= 0 || sb[0] <= 0 || zb[0] <= 0) return false;
    double as = std::sqrt(js), az = std::sqrt(jz);
    Vec sn = sb / as, zn = zb / az;
    double gamma = std::sqrt((1.0 + sn.dot(zn)) / 2.0);
    Vec jzn = zn;
    jzn.tail(d - 1) *= -1.0;
    Scaling::Soc sw;
    sw.v = (sn + jzn) / (2.0 * gamma);
    sw.beta = std::sqrt(as / az);
    // lambda = W z
    Vec jz2 = zb;
    jz2.tail(d - 1) *= -1.0;
    sc.lambda.segment(off, d) = sw.beta * (2.0 * sw.v * sw.v.dot(zb) - jz2);
    sc.socs.push_back(std::move(sw));
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    Mat S = smat(s.segment(off, svec_dim(k)), k);
    Mat Z = smat(z.segment(off, svec_dim(k)), k);
    Eigen::LLT<Mat> ls(S), lz(Z);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
    Mat L1 = ls.matrixL(), L2 = lz.matrixL();
    Eigen::BDCSVD<Mat> svd(Mat(L2.transpose() * L1),
                           Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec sig = svd.singularValues();
    if (sig.minCoeff() <= 0) return false;
    Scaling::Psd ps;
    Vec sq = sig.cwiseSqrt();
    ps.R = L1 * svd.matrixV() * sq.cwiseInverse().asDiagonal();
    Mat L1inv = L1.triangularView<Eigen::Lower>().solve(Mat::Identity(k, k));
    ps.Rinv = sq.asDiagonal() * svd.matrixV().transpose() * L1inv;
    ps.Sig = ps.R * ps.R.transpose();
    ps.SigInv = ps.Rinv.transpose() * ps.Rinv;
    ps.sigma = sig;
    Vec lam = Vec::Zero(svec_dim(k));
    for (int i = 0; i < k; ++i) lam[svec_index(i, i)] = sig[i];
    sc.lambda.segment(off, svec_dim(k)) = lam;
    sc.psds.push_back(std::move(ps));
  }
  return true;
}

// Cone-wise linear operators on full cone vectors.
enum class WOp { W, Wt, Winv, WinvT, WW, WWinv };

Vec apply_w(const StdForm& P, const Scaling& sc, WOp op, const Vec& u) {
  Vec out(P.m);
  for (int r = 0; r < P.nl; ++r) {
    double w2 = sc.w2[r];
    double f = 1.0;
    switch (op) {
      case WOp::W: case WOp::Wt: f = std::sqrt(w2); break;
      case WOp::Winv: case WOp::WinvT: f = 1.0 / std::sqrt(w2); break;
      case WOp::WW: f = w2; break;
      case WOp::WWinv: f = 1.0 / w2; break;
    }
    out[r] = f * u[r];
  }
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    const auto& sw = sc.socs[bk];
    auto wmul = [&](const Vec& t, bool inverse) {
      Vec jt = t;
      jt.tail(d - 1) *= -1.0;
      if (!inverse) return Vec(sw.beta * (2.0 * sw.v * sw.v.dot(t) - jt));
      Vec q = sw.v;
      q.tail(d - 1) *= -1.0;  // q = J v
      return Vec((2.0 * q * q.dot(t) - jt) / sw.beta);
    };
    Vec t = u.segment(off, d);
    switch (op) {
      case WOp::W: case WOp::Wt: t = wmul(t, false); break;
      case WOp::Winv: case WOp::WinvT: t = wmul(t, true); break;
      case WOp::WW: t = wmul(wmul(t, false), false); break;
      case WOp::WWinv: t = wmul(wmul(t, true), true); break;
    }
    out.segment(off, d) = t;
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    const auto& ps = sc.psds[bp];
    Mat U = smat(u.segment(off, svec_dim(k)), k);
    Mat V;
    switch (op) {
      case WOp::W: V = ps.R.transpose() * U * ps.R; break;
      case WOp::Wt: V = ps.R * U * ps.R.transpose(); break;
      case WOp::Winv: V = ps.Rinv.transpose() * U * ps.Rinv; break;
      case WOp::WinvT: V = ps.Rinv * U * ps.Rinv.transpose(); break;
      case WOp::WW: V = ps.Sig * U * ps.Sig; break;
      case WOp::WWinv: V = ps.SigInv * U * ps.SigInv; break;
    }
    out.segment(off, svec_dim(k)) = svec(0.5 * (V + V.transpose()));
  }
  return out;
}

// Quadratic representation of the scaled point: H(lambda^{1/2}) u, or
// H(lambda^{-1/2}) u when inv_half. Maps between the scaled metric and the
// Jordan frame of lambda, where max-step bounds and the multiplicative
// update are elementwise.
Vec scale2(const StdForm& P, const Scaling& sc, const Vec& u, bool inv_half) {
  Vec out = u;
  const Vec& l = sc.lambda;
  for (int r = 0; r < P.nl; ++r) out[r] = inv_half ? u[r] / l[r] : u[r] * l[r];
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    Vec lb = l.segment(off, d), ub = u.segment(off, d);
    double a = std::sqrt(jdot0(lb));
    double lx = inv_half
                    ? (lb[0] * ub[0] - lb.tail(d - 1).dot(ub.tail(d - 1))) / a
                    : lb.dot(ub) / a;
    double cf = (lx + ub[0]) / (lb[0] / a + 1.0) / a;
    if (inv_half) cf = -cf;
    Vec ob(d);
    ob[0] = lx;
    ob.tail(d - 1) = ub.tail(d - 1) + cf * lb.tail(d - 1);
    out.segment(off, d) = ob * (inv_half ? 1.0 / a : a);
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    const Vec& sig = sc.psds[bp].sigma;
    for (int j = 0, idx = off; j < k; ++j)
      for (int i = 0; i <= j; ++i, ++idx) {
        double f = std::sqrt(sig[i] * sig[j]);
        out[idx] = inv_half ? u[idx] / f : u[idx] * f;
      }
  }
  return out;
}

// max over blocks of -lambda_min(u) = min { t : u + t e in K }, for vectors
// already mapped to the Jordan frame by scale2. When Q/sig are nonnull the
// PSD eigendecompositions are saved for the factor update.
double max_step_scaled(const StdForm& P, const Vec& u, std::vector<Mat>* Q,
                       std::vector<Vec>* sig) {
  double t = -kInf;
  if (P.nl > 0) t = std::max(t, -u.head(P.nl).minCoeff());
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    t = std::max(t, u.segment(off + 1, d - 1).norm() - u[off]);
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    Eigen::SelfAdjointEigenSolver<Mat> es(
        smat(u.segment(off, svec_dim(k)), k),
        Q ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    t = std::max(t, -es.eigenvalues().minCoeff());
    if (Q) {
      (*Q)[bp] = es.eigenvectors();
      (*sig)[bp] = es.eigenvalues();
    }
  }
  return t;
}

// Multiplicative NT update. snew/znew hold the updated iterates expressed in
// the current scaling (values for nonneg/SOC; the PSD parts are passed as
// factors Ls Ls' and Lz Lz' instead). On exit W znew = W^{-T} snew = lambda
// holds for the rebuilt scaling. Returns false if a block left the cone.
bool update_scaling_nt(const StdForm& P, Scaling& sc, const Vec& snew,
                       const Vec& znew, const std::vector<Mat>& Ls,
                       const std::vector<Mat>& Lz) {
  for (int r = 0; r < P.nl; ++r) {
    if (snew[r] <= 0 || znew[r] <= 0) return false;
    sc.w2[r] *= snew[r] / znew[r];
    sc.lambda[r] = std::sqrt(snew[r]) * std::sqrt(znew[r]);
  }
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    auto& sw = sc.socs[bk];
    double js = jdot0(snew.segment(off, d)), jz = jdot0(znew.segment(off, d));
    if (js <= 0 || jz <= 0 || snew[off] <= 0 || znew[off] <= 0) return false;
    double aa = std::sqrt(js), bb = std::sqrt(jz);
    Vec st = snew.segment(off, d) / aa, zt = znew.segment(off, d) / bb;
    // Hyperbolic Householder composition: the new scaling point is
    // beta sqrt(a/b) (2 v v' - J) q with q = (st + J zt)/(2c), and the new v
    // is its normalized square root.
    double cc = std::sqrt((1.0 + st.dot(zt)) / 2.0);
    double vs = sw.v.dot(st);
    double vz = sw.v[0] * zt[0] - sw.v.tail(d - 1).dot(zt.tail(d - 1));
    double vq = (vs + vz) / (2.0 * cc), vu = vs - vz;
    double wk0 = 2.0 * sw.v[0] * vq - (st[0] + zt[0]) / (2.0 * cc);
    double dd = (sw.v[0] * vu - st[0] / 2.0 + zt[0] / 2.0) / (wk0 + 1.0);
    Vec lam(d);
    lam[0] = cc;
    lam.tail(d - 1) = 2.0 * (-dd * vq + 0.5 * vu) * sw.v.tail(d - 1) +
                      0.5 * (1.0 - dd / cc) * st.tail(d - 1) +
                      0.5 * (1.0 + dd / cc) * zt.tail(d - 1);
    sc.lambda.segment(off, d) = std::sqrt(aa * bb) * lam;
    sw.v *= 2.0 * vq;
    sw.v[0] -= st[0] / (2.0 * cc);
    sw.v.tail(d - 1) += (0.5 / cc) * st.tail(d - 1);
    sw.v -= (0.5 / cc) * zt;
    sw.v[0] += 1.0;
    sw.v /= std::sqrt(2.0 * sw.v[0]);
    sw.beta *= std::sqrt(aa / bb);
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    auto& ps = sc.psds[bp];
    Eigen::BDCSVD<Mat> svd(Mat(Lz[bp].transpose() * Ls[bp]),
                           Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec sig = svd.singularValues();
    if (sig.minCoeff() <= 0) return false;
    Vec isq = sig.cwiseSqrt().cwiseInverse();
    Mat Rn = ps.R * Ls[bp] * svd.matrixV() * isq.asDiagonal();
    Mat Rti = ps.Rinv.transpose() * Lz[bp] * svd.matrixU() * isq.asDiagonal();
    ps.R = Rn;
    ps.Rinv = Rti.transpose();  // exact inverse pair in exact arithmetic
    ps.Sig = ps.R * ps.R.transpose();
    ps.SigInv = ps.Rinv.transpose() * ps.Rinv;
    ps.sigma = sig;
    sc.lambda.segment(off, svec_dim(k)).setZero();
    for (int i = 0; i < k; ++i) sc.lambda[off + svec_index(i, i)] = sig[i];
  }
  return true;
}

// Extended-precision pieces for iterative refinement. Residuals of the
// scaled KKT system are evaluated in long double so refinement keeps
// contracting when cond(W'W) approaches 1/eps near convergence.
using ldbl = long double;
using VecL = Eigen::Matrix<ldbl, Eigen::Dynamic, 1>;
using MatL = Eigen::Matrix<ldbl, Eigen::Dynamic, Eigen::Dynamic>;

VecL apply_ww_ld(const StdForm& P, const Scaling& sc, const VecL& u) {
  VecL out(P.m);
  for (int r = 0; r < P.nl; ++r) out[r] = static_cast<ldbl>(sc.w2[r]) * u[r];
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    const auto& sw = sc.socs[bk];
    VecL v = sw.v.cast<ldbl>();
    ldbl beta = sw.beta;
    auto wmul = [&](const VecL& t) {
      VecL jt = t;
      jt.tail(d - 1) *= static_cast<ldbl>(-1);
      return VecL(beta * (static_cast<ldbl>(2) * v * v.dot(t) - jt));
    };
    out.segment(off, d) = wmul(wmul(u.segment(off, d)));
  }
  const ldbl rt2 = std::sqrt(static_cast<ldbl>(2));
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    MatL Sig = sc.psds[bp].Sig.cast<ldbl>();
    MatL U(k, k);
    for (int j = 0, idx = off; j < k; ++j)
      for (int i = 0; i <= j; ++i, ++idx) {
        if (i == j) U(i, i) = u[idx];
        else U(i, j) = U(j, i) = u[idx] / rt2;
      }
    MatL V = Sig * U * Sig;
    for (int j = 0, idx = off; j < k; ++j)
      for (int i = 0; i <= j; ++i, ++idx)
        out[idx] = (i == j) ? V(i, i) : rt2 * (V(i, j) + V(j, i)) / 2;
  }
  return out;
}

// Jordan-algebra helpers.
Vec cone_e(const StdForm& P) {
  Vec e = Vec::Zero(P.m);
  e.head(P.nl).setOnes();
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) e[P.soc_offs[bk]] = 1.0;
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp)
    for (int i = 0; i < P.psd_sides[bp]; ++i)
      e[P.psd_offs[bp] + svec_index(i, i)] = 1.0;
  return e;
}

Vec jprod(const StdForm& P, const Vec& u, const Vec& v) {
  Vec out(P.m);
  out.head(P.nl) = u.head(P.nl).cwiseProduct(v.head(P.nl));
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    Vec a = u.segment(off, d), b = v.segment(off, d);
    out[off] = a.dot(b);
    out.segment(off + 1, d - 1) = a[0] * b.tail(d - 1) + b[0] * a.tail(d - 1);
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    Mat U = smat(u.segment(off, svec_dim(k)), k);
    Mat V = smat(v.segment(off, svec_dim(k)), k);
    Mat W = U * V;
    out.segment(off, svec_dim(k)) = svec(0.5 * (W + W.transpose()));
  }
  return out;
}

// Solves lambda o x = b for the scaled point (PSD part of lambda diagonal).
Vec jdiv_lambda(const StdForm& P, const Scaling& sc, const Vec& b) {
  Vec out(P.m);
  const Vec& l = sc.lambda;
  for (int r = 0; r < P.nl; ++r) out[r] = b[r] / l[r];
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    Vec lb = l.segment(off, d), bb = b.segment(off, d);
    double den = lb[0] * lb[0] - lb.tail(d - 1).squaredNorm();
    double x0 = (lb[0] * bb[0] - lb.tail(d - 1).dot(bb.tail(d - 1))) / den;
    out[off] = x0;
    out.segment(off + 1, d - 1) = (bb.tail(d - 1) - x0 * lb.tail(d - 1)) / lb[0];
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    const Vec& sig = sc.psds[bp].sigma;
    Mat B = smat(b.segment(off, svec_dim(k)), k);
    Mat X(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) X(i, j) = 2.0 * B(i, j) / (sig[i] + sig[j]);
    out.segment(off, svec_dim(k)) = svec(0.5 * (X + X.transpose()));
  }
  return out;
}

// Distance-to-cone along e (used by initialization): negative when interior.
double init_dist(const StdForm& P, const Vec& u) {
  double t = -kInf;
  if (P.nl > 0) t = std::max(t, -u.head(P.nl).minCoeff());
  for (size_t bk = 0; bk < P.soc_dims.size(); ++bk) {
    int off = P.soc_offs[bk], d = P.soc_dims[bk];
    t = std::max(t, u.segment(off + 1, d - 1).norm() - u[off]);
  }
  for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
    int off = P.psd_offs[bp], k = P.psd_sides[bp];
    Eigen::SelfAdjointEigenSolver<Mat> es(smat(u.segment(off, svec_dim(k)), k),
                                          Eigen::EigenvaluesOnly);
    t = std::max(t, -es.eigenvalues().minCoeff());
  }
  return t;
}

// ---------------------------------------------------------------------------
// KKT solver: factor H = G'(W'W)^{-1}G once per iteration, then solve
//   [0 A' G'; A 0 0; G 0 -W'W] (dx, dy, dz) = (bx, by, bz)
// via dz elimination and a small Schur complement over the equality rows.

class Kkt {
 public:
  enum class Backend { Ldl3, SchurDense, SchurSparse };

  Kkt(const StdForm& P, const SolveOptions& opts, Backend backend)
      : P_(P), opts_(opts), backend_(backend) {}

  // The 3x3 indefinite factorization has condition ~ 1/mu where the Schur
  // normal equations square it to ~ 1/mu^2, which stops double-precision
  // refinement from contracting once the gap passes ~1e-9. Small problems
  // therefore take the 3x3 route; its dense factor is cubic in N + p + m,
  // so large certification programs stay on the Schur path.
  static Backend pick_backend(const StdForm& P, const SolveOptions& opts) {
    if (!opts.useSparse.has_value() && P.N + P.p + P.m <= 1200)
      return Backend::Ldl3;
    return opts.useSparse.value_or(sparse_heuristic(P)) ? Backend::SchurSparse
                                                        : Backend::SchurDense;
  }

  // Sparse Schur pays off only for large, loosely coupled problems; SOC
  // blocks produce dense rank-1 terms, so they force the dense path.
  static bool sparse_heuristic(const StdForm& P) {
    if (!P.soc_dims.empty()) return false;
    if (P.N < 600) return false;
    double vol = 0;
    for (int r = 0; r < P.nl; ++r) {
      double k = static_cast<double>(P.Grows[r].size());
      vol += k * k;
    }
    for (const auto& vars : P.psd_var_lists) {
      double k = static_cast<double>(vars.size());
      vol += k * k;
    }
    return vol < 0.2 * static_cast<double>(P.N) * static_cast<double>(P.N);
  }

  bool factorize(const Scaling& sc) {
    sc_ = &sc;
    delta_ = kDelta0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      if (factor_once()) return true;
      delta_ *= 1e3;
    }
    return false;
  }

  void solve3(const Vec& bx, const Vec& by, const Vec& bz, Vec& dx, Vec& dy, Vec& dz) {
    direct(bx, by, bz, dx, dy, dz);
    double scale = std::max({1.0, bx.lpNorm<Eigen::Infinity>(),
                             by.size() ? by.lpNorm<Eigen::Infinity>() : 0.0,
                             bz.lpNorm<Eigen::Infinity>()});
    // Refine against the unregularized system until the residual stops
    // improving. Residuals are accumulated in long double: near convergence
    // cond(W'W) ~ 1/mu^2 and double-precision residuals are pure cancellation
    // noise, which capped the achievable feasibility at ~1e-8.
    auto resid = [&](const Vec& x0, const Vec& y0, const Vec& z0, Vec& r1, Vec& r2,
                     Vec& r3) {
      VecL r1l = bx.cast<ldbl>();
      for (int r = 0; r < P_.m; ++r) {
        ldbl zr = z0[r];
        if (zr != 0)
          for (const Term& t : P_.Grows[r]) r1l[t.var] -= static_cast<ldbl>(t.coeff) * zr;
      }
      VecL r2l(P_.p);
      for (int r = 0; r < P_.p; ++r) {
        ldbl yr = y0[r];
        if (yr != 0)
          for (const Term& t : P_.Arows[r]) r1l[t.var] -= static_cast<ldbl>(t.coeff) * yr;
        ldbl acc = by[r];
        for (const Term& t : P_.Arows[r])
          acc -= static_cast<ldbl>(t.coeff) * static_cast<ldbl>(x0[t.var]);
        r2l[r] = acc;
      }
      VecL r3l = apply_ww_ld(P_, *sc_, z0.cast<ldbl>());
      for (int r = 0; r < P_.m; ++r) {
        ldbl acc = bz[r];
        for (const Term& t : P_.Grows[r])
          acc -= static_cast<ldbl>(t.coeff) * static_cast<ldbl>(x0[t.var]);
        r3l[r] += acc;
      }
      r1 = r1l.cast<double>();
      r2 = r2l.cast<double>();
      r3 = r3l.cast<double>();
      return std::max({r1.lpNorm<Eigen::Infinity>(),
                       r2.size() ? r2.lpNorm<Eigen::Infinity>() : 0.0,
                       r3.lpNorm<Eigen::Infinity>()});
    };
    Vec r1, r2, r3;
    double rn = resid(dx, dy, dz, r1, r2, r3);
    const double rn0 = rn;
    int used = 0;
    for (int it = 0; it < opts_.refineSteps; ++it) {
      if (rn < 1e-14 * scale) break;
      Vec ex, ey, ez;
      direct(r1, r2, r3, ex, ey, ez);
      Vec nx = dx + ex, ny = P_.p ? Vec(dy + ey) : dy, nz = dz + ez;
      double rn2 = resid(nx, ny, nz, r1, r2, r3);
      if (rn2 >= rn) break;  // diverging; keep the better iterate
      dx = nx;
      dy = ny;
      dz = nz;
      rn = rn2;
      ++used;
    }
    if (opts_.verbose)
      std::fprintf(stderr, "        solve3: rn0 %.2e rn %.2e used %d delta %.1e scale %.1e\n",
                   rn0, rn, used, delta_, scale);
  }

 private:
  static constexpr double kDelta0 = 1e-12;

  const StdForm& P_;
  const SolveOptions& opts_;
  const Scaling* sc_ = nullptr;
  Backend backend_;
  double delta_ = kDelta0;
  Mat Hd_;           // dense: Cholesky factor (upper) after dpotrf
  Mat Xeq_, SAeq_;   // H^{-1} A' and its equality Schur complement factor
  Eigen::LLT<Mat> sa_llt_;
  SpMat Hs_;
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  bool pattern_done_ = false;
  Mat K3_;  // Bunch-Kaufman factor of the W-scaled 3x3 KKT matrix
  std::vector<lapack_int> piv3_;

  bool factor_once() {
    switch (backend_) {
      case Backend::Ldl3: return factor_ldl3();
      case Backend::SchurSparse: return factor_sparse();
      case Backend::SchurDense: return factor_dense();
    }
    return false;
  }

  // [ dI  A'  G'W^{-1}; A  -dI  0; W^{-T}G  0  -I-dI ] with the cone block
  // pre/post-scaled so the (3,3) block is -I; solutions carry W dz there.
  bool factor_ldl3() {
    const int N = P_.N, p = P_.p, m = P_.m, n3 = N + p + m;
    K3_.setZero(n3, n3);
    for (int r = 0; r < p; ++r)
      for (const Term& t : P_.Arows[r]) K3_(t.var, N + r) = t.coeff;
    Vec col(m);
    for (int j = 0; j < N; ++j) {
      col.setZero();
      for (SpMat::InnerIterator it(P_.G, j); it; ++it) col[it.index()] = it.value();
      K3_.block(j, N + p, 1, m) = apply_w(P_, *sc_, WOp::WinvT, col).transpose();
    }
    for (int i = 0; i < N; ++i) K3_(i, i) = delta_;
    for (int i = N; i < N + p; ++i) K3_(i, i) = -delta_;
    for (int i = N + p; i < n3; ++i) K3_(i, i) = -1.0 - delta_;
    piv3_.resize(n3);
    return LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'U', n3, K3_.data(), n3,
                          piv3_.data()) == 0;
  }

  void accumulate_dense_psd(int bp) {
    const auto& vars = P_.psd_vars[bp];
    const Mat& Sig = sc_->psds[bp].SigInv;
    if (P_.psd_fast[bp]) {
      const int k2 = P_.psd_sides[bp] / 2, base = P_.psd_fast_base[bp];
      Mat A = Sig.topLeftCorner(k2, k2);
      Mat C = Sig.bottomRightCorner(k2, k2);
      Mat B = Sig.topRightCorner(k2, k2);
      Mat Sy = 0.5 * (B + B.transpose());
      Mat An = 0.5 * (B - B.transpose());
      // H(u, v) over svec pairs u=(i,j), v=(k,l); fill upper (v <= u).
      for (int j = 0; j < k2; ++j)
        for (int i = 0; i <= j; ++i) {
          const int u = base + svec_index(i, j);
          double* col = Hd_.data() + static_cast<std::ptrdiff_t>(u) * P_.N + base;
          const bool udiag = (i == j);
          for (int l = 0; l <= j; ++l) {
            const int kmax = (l == j) ? i : l;
            const double ail = A(i, l), ajl = A(j, l);
            const double cil = C(i, l), cjl = C(j, l);
            const double sil = Sy(i, l), sjl = Sy(j, l);
            const double nil = An(i, l), njl = An(j, l);
            double* dst = col + svec_index(0, l);
            const double* Ai = A.data() + static_cast<std::ptrdiff_t>(i) * k2;
            const double* Aj = A.data() + static_cast<std::ptrdiff_t>(j) * k2;
            const double* Ci = C.data() + static_cast<std::ptrdiff_t>(i) * k2;
            const double* Cj = C.data() + static_cast<std::ptrdiff_t>(j) * k2;
            const double* Si = Sy.data() + static_cast<std::ptrdiff_t>(i) * k2;
            const double* Sj = Sy.data() + static_cast<std::ptrdiff_t>(j) * k2;
            const double* Ni = An.data() + static_cast<std::ptrdiff_t>(i) * k2;
            const double* Nj = An.data() + static_cast<std::ptrdiff_t>(j) * k2;
            // Columns of symmetric A equal rows; An is antisymmetric, so its
            // column k entries are -An(k, .), handled by sign on the axpy.
            for (int kk = 0; kk <= kmax; ++kk) {
              const bool vdiag = (kk == l);
              double t = 2.0 * (Aj[kk] * ail + Ai[kk] * ajl) +
                         2.0 * (Cj[kk] * cil + Ci[kk] * cjl) +
                         4.0 * (Sj[kk] * sil + Si[kk] * sjl) +
                         4.0 * (-Nj[kk] * nil - Ni[kk] * njl);
              if (udiag && vdiag)
                t *= 0.25;
              else if (udiag || vdiag)
                t *= 0.5;
              dst[kk] += t;
            }
          }
        }
      return;
    }
    // Generic pairwise assembly from entry lists.
    const int nv = static_cast<int>(vars.size());
    for (int a = 0; a < nv; ++a)
      for (int b2 = 0; b2 <= a; ++b2) {
        double acc = 0;
        for (const auto& eu : vars[a].entries)
          for (const auto& ev : vars[b2].entries) {
            const int i = eu.i, j = eu.j, k = ev.i, l = ev.j;
            double t;
            if (i != j && k != l)
              t = 2.0 * (Sig(j, k) * Sig(i, l) + Sig(j, l) * Sig(i, k));
            else if (i == j && k != l)
              t = 2.0 * Sig(i, k) * Sig(i, l);
            else if (i != j && k == l)
              t = 2.0 * Sig(k, i) * Sig(k, j);
            else
              t = Sig(i, k) * Sig(i, k);
            acc += eu.c * ev.c * t;
          }
        int u = vars[a].var, v = vars[b2].var;
        if (u < v) std::swap(u, v);
        Hd_(v, u) += acc;  // upper triangle
      }
  }

  void accumulate_dense_soc(int bk) {
    int off = P_.soc_offs[bk], d = P_.soc_dims[bk];
    const auto& sw = sc_->socs[bk];
    Vec q = sw.v;
    q.tail(d - 1) *= -1.0;
    const double ib2 = 1.0 / (sw.beta * sw.beta);
    // (W'W)^{-1} = ib2 (I + 4 (q'q) qq' - 2 (q v' + v q')).
    Vec gq = Vec::Zero(P_.N), gv = Vec::Zero(P_.N);
    for (int r = 0; r < d; ++r)
      for (const Term& t : P_.Grows[off + r]) {
        gq[t.var] += q[r] * t.coeff;
        gv[t.var] += sw.v[r] * t.coeff;
      }
    for (int r = 0; r < d; ++r)
      for (const Term& ta : P_.Grows[off + r])
        for (const Term& tb : P_.Grows[off + r]) {
          if (tb.var > ta.var) continue;
          Hd_(tb.var, ta.var) += ib2 * ta.coeff * tb.coeff;
        }
    const double qq4 = 4.0 * q.squaredNorm() * ib2, m2 = -2.0 * ib2;
    const auto& vars = P_.soc_var_lists[bk];
    for (int a : vars)
      for (int b2 : vars) {
        if (b2 > a) continue;
        Hd_(b2, a) += qq4 * gq[a] * gq[b2] + m2 * (gq[a] * gv[b2] + gv[a] * gq[b2]);
      }
  }

  bool factor_dense() {
    const int N = P_.N;
    Hd_.setZero(N, N);
    for (int r = 0; r < P_.nl; ++r) {
      const double w = 1.0 / sc_->w2[r];
      for (const Term& ta : P_.Grows[r])
        for (const Term& tb : P_.Grows[r]) {
          if (tb.var > ta.var) continue;
          Hd_(tb.var, ta.var) += w * ta.coeff * tb.coeff;
        }
    }
    for (size_t bk = 0; bk < P_.soc_dims.size(); ++bk)
      accumulate_dense_soc(static_cast<int>(bk));
    for (size_t bp = 0; bp < P_.psd_sides.size(); ++bp)
      accumulate_dense_psd(static_cast<int>(bp));
    double dscale = 1.0;
    for (int i = 0; i < N; ++i) dscale = std::max(dscale, Hd_(i, i));
    Hd_.diagonal().array() += delta_ * dscale;
    int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'U', N, Hd_.data(), N);
    if (info != 0) return false;
    return prepare_equalities();
  }

  bool factor_sparse() {
    std::vector<Triplet> tr;
    for (int r = 0; r < P_.nl; ++r) {
      const double w = 1.0 / sc_->w2[r];
      for (const Term& ta : P_.Grows[r])
        for (const Term& tb : P_.Grows[r]) {
          if (tb.var > ta.var) continue;
          tr.emplace_back(ta.var, tb.var, w * ta.coeff * tb.coeff);  // lower
        }
    }
    for (size_t bp = 0; bp < P_.psd_sides.size(); ++bp) {
      const auto& vars = P_.psd_vars[bp];
      const Mat& Sig = sc_->psds[bp].SigInv;
      const int nv = static_cast<int>(vars.size());
      for (int a = 0; a < nv; ++a)
        for (int b2 = 0; b2 <= a; ++b2) {
          double acc = 0;
          for (const auto& eu : vars[a].entries)
            for (const auto& ev : vars[b2].entries) {
              const int i = eu.i, j = eu.j, k = ev.i, l = ev.j;
              double t;
              if (i != j && k != l)
                t = 2.0 * (Sig(j, k) * Sig(i, l) + Sig(j, l) * Sig(i, k));
              else if (i == j && k != l)
                t = 2.0 * Sig(i, k) * Sig(i, l);
              else if (i != j && k == l)
                t = 2.0 * Sig(k, i) * Sig(k, j);
              else
                t = Sig(i, k) * Sig(i, k);
              acc += eu.c * ev.c * t;
            }
          int u = vars[a].var, v = vars[b2].var;
          if (u < v) std::swap(u, v);
          tr.emplace_back(u, v, acc);  // lower
        }
    }
    double dmax = 1.0;
    for (const auto& t : tr)
      if (t.row() == t.col()) dmax = std::max(dmax, std::abs(t.value()));
    for (int i = 0; i < P_.N; ++i) tr.emplace_back(i, i, delta_ * dmax);
    Hs_.resize(P_.N, P_.N);
    Hs_.setFromTriplets(tr.begin(), tr.end());
    if (!pattern_done_) {
      llt_.analyzePattern(Hs_);
      pattern_done_ = true;
    }
    llt_.factorize(Hs_);
    if (llt_.info() != Eigen::Success) return false;
    return prepare_equalities();
  }

  Vec hsolve(const Vec& f) const {
    if (backend_ == Backend::SchurSparse) return llt_.solve(f);
    Vec x = f;
    LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'U', P_.N, 1, const_cast<double*>(Hd_.data()), P_.N,
                   x.data(), P_.N);
    return x;
  }

  bool prepare_equalities() {
    if (P_.p == 0) return true;
    Mat Atd = Mat(P_.At);
    if (backend_ == Backend::SchurSparse) {
      Xeq_.resize(P_.N, P_.p);
      for (int j = 0; j < P_.p; ++j) Xeq_.col(j) = llt_.solve(Vec(Atd.col(j)));
    } else {
      Xeq_ = Atd;
      LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'U', P_.N, P_.p, const_cast<double*>(Hd_.data()),
                     P_.N, Xeq_.data(), P_.N);
    }
    SAeq_ = Mat(P_.A) * Xeq_;
    SAeq_.diagonal().array() += delta_;
    sa_llt_.compute(SAeq_);
    return sa_llt_.info() == Eigen::Success;
  }

  void direct(const Vec& bx, const Vec& by, const Vec& bz, Vec& dx, Vec& dy, Vec& dz) {
    if (backend_ == Backend::Ldl3) {
      const int N = P_.N, p = P_.p, m = P_.m;
      Vec u(N + p + m);
      u.head(N) = bx;
      if (p) u.segment(N, p) = by;
      u.tail(m) = apply_w(P_, *sc_, WOp::WinvT, bz);
      LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'U', N + p + m, 1, K3_.data(), N + p + m,
                     piv3_.data(), u.data(), N + p + m);
      dx = u.head(N);
      dy = p ? Vec(u.segment(N, p)) : Vec(0);
      dz = apply_w(P_, *sc_, WOp::Winv, Vec(u.tail(m)));
      return;
    }
    Vec f = bx + P_.Gt * apply_w(P_, *sc_, WOp::WWinv, bz);
    Vec u = hsolve(f);
    if (P_.p) {
      dy = sa_llt_.solve(P_.A * u - by);
      dx = u - Xeq_ * dy;
    } else {
      dy = Vec(0);
      dx = u;
    }
    dz = apply_w(P_, *sc_, WOp::WWinv, Vec(P_.G * dx - bz));
  }
};

}  // namespace

ConicSolution solve(const ConicProgram& prog, const SolveOptions& opts) {
  init_blas_env();
  prog.validate();
  StdForm P = build_stdform(prog);

  ConicSolution sol;
  sol.psd_sides = P.psd_sides;
  auto fail = [&](const std::string& why) {
    sol.status = SolveStatus::Inaccurate;
    sol.message = why;
    return sol;
  };

  const int N = P.N;
  const double nc = std::max(1.0, P.c.norm());
  const double nb = std::max(1.0, P.b.size() ? P.b.norm() : 0.0);
  const double nh = std::max(1.0, P.h.norm());

  Kkt kkt(P, opts, Kkt::pick_backend(P, opts));

  Scaling sc = identity_scaling(P);
  if (!kkt.factorize(sc)) return fail("initial KKT factorization failed");

  Vec x(N), y, z(P.m), s(P.m);
  {
    Vec dx, dy, dz;
    kkt.solve3(Vec::Zero(N), P.b, P.h, dx, dy, dz);
    x = dx;
    s = -dz;
    double ts = init_dist(P, s);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * cone_e(P);
    Vec dx2;
    kkt.solve3(Vec(-P.c), Vec::Zero(P.p), Vec::Zero(P.m), dx2, y, z);
    double tz = init_dist(P, z);
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * cone_e(P);
  }
  double tau = 1.0, kappa = 1.0;
  const Vec e = cone_e(P);

  // The iterate is carried in scaled form: lambda = W z = W^{-T} s together
  // with the scaling W, updated multiplicatively each step; unscaled s and z
  // are reconstructed from lambda afterwards. The tau-kappa pair gets the
  // same treatment through dg = sqrt(kappa/tau) and lg = sqrt(tau kappa).
  if (!compute_scaling(P, s, z, sc)) return fail("initial point is not interior");
  double dg = 1.0, lg = 1.0;

  double best_score = kInf;
  Vec bx_ = x, by_ = y, bz_ = z, bs_ = s;
  double btau = 1.0;
  struct IterStats { double dcost = 0, gap = 0, relgap = 0, pres = 0, dres = 0; };
  IterStats bst;
  int stall = 0;

  auto finalize = [&](SolveStatus st, double dcost, double gap, double relgap,
                      double pres, double dres, int iters, const std::string& msg,
                      const Vec& fx, const Vec& fy, const Vec& fz, const Vec& fs,
                      double ftau) {
    sol.status = st;
    sol.iterations = iters;
    sol.message = msg;
    double t = ftau;
    sol.x = Vec(fx.head(P.orig_N) / t);
    sol.eq_duals = P.p ? Vec(fy / t) : Vec(0);
    Vec zs = fz / t, ss = fs / t;
    sol.nonneg_duals = zs.head(P.nl);
    sol.nonneg_slacks = ss.head(P.nl);
    sol.soc_duals.clear();
    sol.soc_slacks.clear();
    for (int bk = 0; bk < P.n_soc_orig; ++bk) {
      sol.soc_duals.push_back(zs.segment(P.soc_offs[bk], P.soc_dims[bk]));
      sol.soc_slacks.push_back(ss.segment(P.soc_offs[bk], P.soc_dims[bk]));
    }
    sol.psd_duals.clear();
    sol.psd_slacks.clear();
    for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
      sol.psd_duals.push_back(zs.segment(P.psd_offs[bp], svec_dim(P.psd_sides[bp])));
      sol.psd_slacks.push_back(ss.segment(P.psd_offs[bp], svec_dim(P.psd_sides[bp])));
    }
    sol.comp_residuals.clear();
    for (int r = 0; r < P.nl; ++r) sol.comp_residuals.push_back(ss[r] * zs[r]);
    for (int bk = 0; bk < P.n_soc_orig; ++bk)
      sol.comp_residuals.push_back(
          ss.segment(P.soc_offs[bk], P.soc_dims[bk])
              .dot(zs.segment(P.soc_offs[bk], P.soc_dims[bk])));
    for (size_t bp = 0; bp < P.psd_sides.size(); ++bp)
      sol.comp_residuals.push_back(
          ss.segment(P.psd_offs[bp], svec_dim(P.psd_sides[bp]))
              .dot(zs.segment(P.psd_offs[bp], svec_dim(P.psd_sides[bp]))));
    sol.gap = gap;
    sol.rel_gap = relgap;
    sol.pres = pres;
    sol.dres = dres;
    if (st == SolveStatus::Optimal || st == SolveStatus::Inaccurate) {
      // Report the original objective; for lowered quadratics recompute.
      double pobj = P.c.head(P.orig_N).dot(sol.x) + P.obj_const;
      for (const auto& q : prog.quad_terms()) {
        double v = q.e.constant;
        for (auto& [iv, cv] : q.e.terms) v += cv * sol.x[iv];
        pobj += 0.5 * q.weight * v * v;
      }
      sol.primal_obj = pobj;
      sol.dual_obj = dcost + P.obj_const;
    } else {
      sol.primal_obj = kNaN;
      sol.dual_obj = kNaN;
    }
    return sol;
  };

  for (int iter = 0; iter <= opts.maxIter; ++iter) {
    Vec rx = P.Gt * z + P.c * tau;
    if (P.p) rx += P.At * y;
    Vec ry = P.A * x - P.b * tau;
    Vec rz = P.G * x + s - P.h * tau;
    double cx = P.c.dot(x), byv = P.p ? P.b.dot(y) : 0.0, hz = P.h.dot(z);
    const double rtau = kappa + cx + byv + hz;

    double pcost = cx / tau, dcost = -(byv + hz) / tau;
    double gap = s.dot(z) / (tau * tau);
    double relgap = gap / std::max(1.0, std::abs(pcost));
    double pres = std::max(ry.size() ? ry.norm() / nb : 0.0, rz.norm() / nh) / tau;
    double dres = rx.norm() / nc / tau;

    if (opts.verbose)
      std::fprintf(stderr,
                   "it %3d  pcost % .8e  dcost % .8e  gap %.2e  pres %.2e  "
                   "dres %.2e  tau %.2e  kappa %.2e\n",
                   iter, pcost, dcost, gap, pres, dres, tau, kappa);

    // Tolerance-relative merit: score <= 1 exactly when the stopping test
    // passes. Near the numerical floor a step can trade a little feasibility
    // for orders of magnitude in gap; this ranking accepts that trade only
    // while feasibility stays within its own tolerance.
    double score = std::max({pres / opts.feasTol, dres / opts.feasTol,
                             std::min(gap / opts.absTol, relgap / opts.gapTol)});
    if (score < best_score) {
      best_score = score;
      bx_ = x; by_ = y; bz_ = z; bs_ = s; btau = tau;
      bst = {dcost, gap, relgap, pres, dres};
    }

    if (pres <= opts.feasTol && dres <= opts.feasTol &&
        (gap <= opts.absTol || relgap <= opts.gapTol))
      return finalize(SolveStatus::Optimal, dcost, gap, relgap, pres, dres,
                      iter, "", x, y, z, s, tau);

    if (byv + hz < 0) {
      Vec dfr = P.Gt * z;
      if (P.p) dfr += P.At * y;
      double pinfres = dfr.norm() / nc / (-(byv + hz));
      if (pinfres <= opts.feasTol) {
        double sc2 = -1.0 / (byv + hz);
        return finalize(SolveStatus::Infeasible, kNaN, gap, relgap, pres, dres,
                        iter, "primal infeasibility certificate", Vec::Zero(N),
                        Vec(y * sc2), Vec(z * sc2), Vec::Zero(P.m), 1.0);
      }
    }
    if (cx < 0) {
      double dinfres =
          std::max(ry.size() ? (P.A * x).norm() / nb : 0.0, (P.G * x + s).norm() / nh) /
          (-cx);
      if (dinfres <= opts.feasTol) {
        double sc2 = -1.0 / cx;
        return finalize(SolveStatus::Unbounded, kNaN, gap, relgap, pres, dres,
                        iter, "dual infeasibility certificate (primal unbounded)",
                        Vec(x * sc2), Vec::Zero(P.p), Vec::Zero(P.m), Vec(s * sc2), 1.0);
      }
    }

    // The search directions have become too inaccurate to preserve
    // feasibility; further steps only corrupt the iterate. Suppressed while
    // kappa dominates tau: there the residuals diverge by design and
    // termination belongs to the infeasibility certificates above.
    if (kappa < tau && score > 1e2 * best_score)
      return finalize(SolveStatus::Inaccurate, bst.dcost, bst.gap, bst.relgap,
                      bst.pres, bst.dres, iter, "numerical limits reached",
                      bx_, by_, bz_, bs_, btau);

    if (iter == opts.maxIter)
      return finalize(SolveStatus::Inaccurate, bst.dcost, bst.gap, bst.relgap,
                      bst.pres, bst.dres, iter, "iteration limit reached",
                      bx_, by_, bz_, bs_, btau);

    if (!kkt.factorize(sc))
      return finalize(SolveStatus::Inaccurate, bst.dcost, bst.gap, bst.relgap,
                      bst.pres, bst.dres, iter, "KKT factorization failed",
                      bx_, by_, bz_, bs_, btau);

    Vec v1x, v1y, v1z;
    kkt.solve3(Vec(-P.c), P.b, P.h, v1x, v1y, v1z);
    // tau-row Schur denominator: c'v1x + b'v1y + h'v1z equals -|W v1z|^2, so
    // eliminating dtau divides by -dg^2 (1 + |z1|^2), bounded away from zero.
    Vec z1 = apply_w(P, sc, WOp::W, v1z) / dg;
    const double den1 = 1.0 + z1.squaredNorm();
    const double dgi2 = 1.0 / (dg * dg);

    const double mu = (sc.lambda.squaredNorm() + lg * lg) / (P.D + 1);

    struct Dir {
      Vec dx, dy, dzh, dsh;  // dzh = W dz and dsh = W^{-T} ds (scaled)
      double dtau, dkappa;
    };
    // One solve of the six-row Newton system: rows (1)-(4) are the linearized
    // homogeneous embedding with rhs (bxq, byq, bzq, btq); row (5) is
    // lambda o (dsh + dzh) = bsq; row (6) is tau dkappa + kappa dtau = bkq.
    auto f6_once = [&](const Vec& bxq, const Vec& byq, const Vec& bzq,
                       double btq, const Vec& bsq, double bkq) {
      Dir d;
      Vec lbs = jdiv_lambda(P, sc, bsq);
      Vec bzt = bzq - apply_w(P, sc, WOp::Wt, lbs);
      Vec ux, uy, uz;
      kkt.solve3(bxq, byq, bzt, ux, uy, uz);
      double s2u = P.c.dot(ux) + (P.p ? P.b.dot(uy) : 0.0) + P.h.dot(uz);
      d.dtau = dgi2 * (s2u + bkq / tau - btq) / den1;
      d.dx = ux + d.dtau * v1x;
      d.dy = P.p ? Vec(uy + d.dtau * v1y) : Vec(0);
      Vec dz = uz + d.dtau * v1z;
      d.dzh = apply_w(P, sc, WOp::W, dz);
      d.dsh = lbs - d.dzh;
      d.dkappa = (bkq - kappa * d.dtau) / tau;
      return d;
    };
    // One full-system refinement round on top: the dtau elimination loses
    // digits to cancellation once mu is small, and rows (1)-(4) inherit them.
    // Residuals are accumulated in long double for the same reason as in the
    // inner KKT refinement.
    auto f6 = [&](const Vec& bxq, const Vec& byq, const Vec& bzq, double btq,
                  const Vec& bsq, double bkq) {
      Dir d = f6_once(bxq, byq, bzq, btq, bsq, bkq);
      Vec dzu = apply_w(P, sc, WOp::Winv, d.dzh);
      Vec dsu = apply_w(P, sc, WOp::Wt, d.dsh);
      VecL r1 = bxq.cast<ldbl>();
      for (int i = 0; i < P.N; ++i) r1[i] -= static_cast<ldbl>(P.c[i]) * d.dtau;
      for (int r = 0; r < P.m; ++r) {
        ldbl zr = dzu[r];
        if (zr != 0)
          for (const Term& t : P.Grows[r]) r1[t.var] -= static_cast<ldbl>(t.coeff) * zr;
      }
      VecL r2(P.p);
      for (int r = 0; r < P.p; ++r) {
        ldbl yr = d.dy[r];
        if (yr != 0)
          for (const Term& t : P.Arows[r]) r1[t.var] -= static_cast<ldbl>(t.coeff) * yr;
        ldbl acc = byq[r] + static_cast<ldbl>(P.b[r]) * d.dtau;
        for (const Term& t : P.Arows[r]) acc -= static_cast<ldbl>(t.coeff) * d.dx[t.var];
        r2[r] = acc;
      }
      VecL r3(P.m);
      ldbl r4 = static_cast<ldbl>(btq) - d.dkappa;
      for (int r = 0; r < P.m; ++r) {
        ldbl acc = static_cast<ldbl>(bzq[r]) - dsu[r] + static_cast<ldbl>(P.h[r]) * d.dtau;
        for (const Term& t : P.Grows[r]) acc -= static_cast<ldbl>(t.coeff) * d.dx[t.var];
        r3[r] = acc;
        r4 -= static_cast<ldbl>(P.h[r]) * dzu[r];
      }
      for (int i = 0; i < P.N; ++i) r4 -= static_cast<ldbl>(P.c[i]) * d.dx[i];
      for (int r = 0; r < P.p; ++r) r4 -= static_cast<ldbl>(P.b[r]) * d.dy[r];
      Vec r5 = bsq - jprod(P, sc.lambda, Vec(d.dsh + d.dzh));
      double r6 = bkq - (tau * d.dkappa + kappa * d.dtau);
      Dir dd = f6_once(r1.cast<double>(), r2.cast<double>(), r3.cast<double>(),
                       static_cast<double>(r4), r5, r6);
      d.dx += dd.dx;
      if (P.p) d.dy += dd.dy;
      d.dzh += dd.dzh;
      d.dsh += dd.dsh;
      d.dtau += dd.dtau;
      d.dkappa += dd.dkappa;
      return d;
    };

    // Affine (predictor) pass: step to the boundary sets the centering weight.
    Vec ll = jprod(P, sc.lambda, sc.lambda);
    Dir da = f6(Vec(-rx), Vec(-ry), Vec(-rz), -rtau, Vec(-ll), -lg * lg);
    Vec dsa = scale2(P, sc, da.dsh, true);
    Vec dza = scale2(P, sc, da.dzh, true);
    double t = std::max({0.0, max_step_scaled(P, dsa, nullptr, nullptr),
                         max_step_scaled(P, dza, nullptr, nullptr),
                         -da.dtau / tau, -da.dkappa / kappa});
    double step = (t <= 0.0) ? 1.0 : std::min(1.0, 1.0 / t);
    double sigma = std::pow(1.0 - step, 3.0);

    // Combined (centering + corrector) pass; the second-order terms are
    // Jordan products of the scaled affine directions.
    const double eta = 1.0 - sigma;
    Vec bs_c = -ll - jprod(P, da.dsh, da.dzh) + sigma * mu * e;
    double bk_c = -lg * lg - da.dtau * da.dkappa + sigma * mu;
    Dir dc = f6(Vec(-eta * rx), Vec(-eta * ry), Vec(-eta * rz), -eta * rtau,
                bs_c, bk_c);
    Vec dsc = scale2(P, sc, dc.dsh, true);
    Vec dzc = scale2(P, sc, dc.dzh, true);
    std::vector<Mat> Qs(P.psd_sides.size()), Qz(P.psd_sides.size());
    std::vector<Vec> sigs(P.psd_sides.size()), sigz(P.psd_sides.size());
    t = std::max({0.0, max_step_scaled(P, dsc, &Qs, &sigs),
                  max_step_scaled(P, dzc, &Qz, &sigz),
                  -dc.dtau / tau, -dc.dkappa / kappa});
    step = (t <= 0.0) ? 1.0 : std::min(1.0, 0.99 / t);
    if (opts.verbose)
      std::fprintf(stderr, "      step %.3e  sigma %.3e  dtau % .3e\n", step,
                   sigma, dc.dtau);
    if (step < 1e-8) {
      if (++stall >= 2)
        return finalize(SolveStatus::Inaccurate, bst.dcost, bst.gap, bst.relgap,
                        bst.pres, bst.dres, iter, "search direction stalled",
                        bx_, by_, bz_, bs_, btau);
    } else {
      stall = 0;
    }

    if (opts.verbose) {
      Vec dzu = apply_w(P, sc, WOp::Winv, dc.dzh);
      Vec dsu = apply_w(P, sc, WOp::Wt, dc.dsh);
      Vec e1 = P.Gt * dzu + P.c * dc.dtau + eta * rx;
      if (P.p) e1 += P.At * dc.dy;
      Vec e3 = P.G * dc.dx + dsu - P.h * dc.dtau + eta * rz;
      std::fprintf(stderr, "      dir err: e1 %.2e e3 %.2e |dx| %.2e |dsh| %.2e\n",
                   e1.lpNorm<Eigen::Infinity>(), e3.lpNorm<Eigen::Infinity>(),
                   dc.dx.lpNorm<Eigen::Infinity>(),
                   dc.dsh.lpNorm<Eigen::Infinity>());
    }

    x += step * dc.dx;
    if (P.p) y += step * dc.dy;
    const double tt = -dc.dtau / tau, tk = -dc.dkappa / kappa;

    // Updated iterates in the current scaling, in forms that keep cone
    // membership explicit: values H(lambda^{1/2})(e + step d~) for nonneg and
    // SOC blocks, factors Lam^{1/2} Q diag(1 + step sig)^{1/2} for PSD blocks.
    Vec snew = scale2(P, sc, Vec(e + step * dsc), false);
    Vec znew = scale2(P, sc, Vec(e + step * dzc), false);
    std::vector<Mat> Lsf(P.psd_sides.size()), Lzf(P.psd_sides.size());
    for (size_t bp = 0; bp < P.psd_sides.size(); ++bp) {
      Vec half = sc.psds[bp].sigma.cwiseSqrt();
      Vec fs = ((step * sigs[bp]).array() + 1.0).sqrt().matrix();
      Vec fz = ((step * sigz[bp]).array() + 1.0).sqrt().matrix();
      Lsf[bp] = half.asDiagonal() * Qs[bp] * fs.asDiagonal();
      Lzf[bp] = half.asDiagonal() * Qz[bp] * fz.asDiagonal();
    }
    if (!update_scaling_nt(P, sc, snew, znew, Lsf, Lzf))
      return finalize(SolveStatus::Inaccurate, bst.dcost, bst.gap, bst.relgap,
                      bst.pres, bst.dres, iter, "iterate left the cone interior",
                      bx_, by_, bz_, bs_, btau);
    dg *= std::sqrt((1.0 - step * tk) / (1.0 - step * tt));
    lg *= std::sqrt(1.0 - step * tt) * std::sqrt(1.0 - step * tk);
    tau = lg / dg;
    kappa = lg * dg;
    s = apply_w(P, sc, WOp::Wt, sc.lambda);
    z = apply_w(P, sc, WOp::Winv, sc.lambda);
  }
  return fail("unreachable");
}

}  // namespace gwit
