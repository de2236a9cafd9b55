#include <cstdio>
#include "rampc/conic.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace rampc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}  // namespace

// ---------------------------------------------------------------------------
// ConicProgram
// ---------------------------------------------------------------------------

ConicProgram::ConicProgram(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 0) throw std::invalid_argument("ConicProgram: negative variable count");
}

int ConicProgram::add_variables(int count) {
  if (count < 0) throw std::invalid_argument("add_variables: negative count");
  int first = num_vars_;
  num_vars_ += count;
  return first;
}

void ConicProgram::set_objective(int var, double coeff) {
  if (var < 0 || var >= num_vars_) throw std::invalid_argument("set_objective: bad index");
  objective_.emplace_back(var, coeff);
}

void ConicProgram::add_objective(int var, double coeff) { set_objective(var, coeff); }

const Eigen::VectorXd ConicProgram::objective() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(num_vars_);
  for (auto& [j, v] : objective_) c[j] += v;
  return c;
}

int ConicProgram::add_row(Cone cone, std::span<const std::pair<int, double>> coeffs,
                          double b) {
  if (in_soc_block_) throw std::logic_error("add_row inside a second-order block");
  if (cone == Cone::SecondOrder)
    throw std::invalid_argument("second-order rows must use begin_second_order_block");
  int row = num_rows_++;
  for (auto& [j, v] : coeffs) {
    if (j < 0 || j >= num_vars_) throw std::invalid_argument("add_row: bad column");
    triplets_.emplace_back(row, j, v);
  }
  b_.push_back(b);
  if (!blocks_.empty() && blocks_.back().cone == cone) {
    blocks_.back().size += 1;
  } else {
    blocks_.push_back({cone, 1});
  }
  return row;
}

int ConicProgram::add_row(Cone cone, const AffineExpr& e) {
  return add_row(cone, std::span<const std::pair<int, double>>(e.terms), -e.constant);
}

void ConicProgram::begin_second_order_block() {
  if (in_soc_block_) throw std::logic_error("nested second-order block");
  in_soc_block_ = true;
  blocks_.push_back({Cone::SecondOrder, 0});
}

int ConicProgram::add_block_row(std::span<const std::pair<int, double>> coeffs, double b) {
  if (!in_soc_block_) throw std::logic_error("add_block_row outside a block");
  int row = num_rows_++;
  for (auto& [j, v] : coeffs) {
    if (j < 0 || j >= num_vars_) throw std::invalid_argument("add_block_row: bad column");
    triplets_.emplace_back(row, j, v);
  }
  b_.push_back(b);
  blocks_.back().size += 1;
  return row;
}

void ConicProgram::end_block() {
  if (!in_soc_block_) throw std::logic_error("end_block without begin");
  if (blocks_.back().size < 2)
    throw std::invalid_argument("second-order block needs at least 2 rows");
  in_soc_block_ = false;
}

Eigen::MatrixXd ConicProgram::dense_matrix() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(num_rows_, num_vars_);
  for (auto& t : triplets_) A(t.row(), t.col()) += t.value();
  return A;
}

Eigen::VectorXd ConicProgram::dense_rhs() const {
  return Eigen::Map<const Eigen::VectorXd>(b_.data(), static_cast<int>(b_.size()));
}

std::string ConicProgram::dump_json() const {
  nlohmann::json j;
  j["n"] = num_vars_;
  nlohmann::json c = nlohmann::json::array();
  for (auto& [idx, v] : objective_) c.push_back({idx, v});
  j["c"] = c;
  nlohmann::json trip = nlohmann::json::array();
  for (auto& t : triplets_) trip.push_back({t.row(), t.col(), t.value()});
  j["A"] = trip;
  j["b"] = b_;
  nlohmann::json blocks = nlohmann::json::array();
  for (auto& blk : blocks_) {
    const char* name = blk.cone == Cone::Zero     ? "zero"
                       : blk.cone == Cone::Nonneg ? "nonneg"
                                                  : "soc";
    blocks.push_back({{"cone", name}, {"size", blk.size}});
  }
  j["blocks"] = blocks;
  return j.dump();
}

ConicProgram ConicProgram::load_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ConicProgram p(j.at("n").get<int>());
  for (auto& e : j.at("c")) p.set_objective(e.at(0).get<int>(), e.at(1).get<double>());
  for (auto& t : j.at("A"))
    p.triplets_.emplace_back(t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>());
  p.b_ = j.at("b").get<std::vector<double>>();
  p.num_rows_ = static_cast<int>(p.b_.size());
  for (auto& blk : j.at("blocks")) {
    std::string name = blk.at("cone").get<std::string>();
    Cone cone = name == "zero" ? Cone::Zero : name == "nonneg" ? Cone::Nonneg : Cone::SecondOrder;
    p.blocks_.push_back({cone, blk.at("size").get<int>()});
  }
  int total = 0;
  for (auto& blk : p.blocks_) total += blk.size;
  if (total != p.num_rows_) throw std::invalid_argument("load_json: inconsistent blocks");
  return p;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Internal problem form and presolve
// ---------------------------------------------------------------------------

namespace {

struct RowEntry {
  int col;
  double val;
};

struct PresolveResult {
  // reduced problem, rows partitioned into Zero / Nonneg / SOC.
  int n_reduced = 0;
  Eigen::VectorXd c;
  double obj_offset = 0.0;
  Eigen::SparseMatrix<double> Aeq;  // p x n
  Eigen::VectorXd beq;
  Eigen::SparseMatrix<double> G;  // m x n, nonneg rows then soc blocks
  Eigen::VectorXd h;
  int m_nonneg = 0;
  std::vector<int> soc_dims;

  std::vector<int> reduced_col_to_orig;
  std::vector<char> col_fixed;
  std::vector<double> fix_value;
  struct Fix {
    int row;
    int col;
    double coeff;
  };
  std::vector<Fix> fixes;             // chronological
  std::vector<int> eq_orig_rows;      // per reduced eq row
  std::vector<int> g_orig_rows;       // per reduced G row
  std::vector<char> row_dropped;      // original rows dropped (empty or fixing)

  bool decided = false;               // presolve already concluded
  SolveResult early;                  // valid when decided
};

// Back-substitutes dual values for presolve-dropped fixing rows so that the
// full-length dual satisfies A'y = 0 over the original matrix.
void derive_fix_duals(const ConicProgram& prog, const PresolveResult& pre,
                      Eigen::VectorXd& y_full) {
  if (pre.fixes.empty()) return;
  // Column-indexed view of the original matrix: (row, value) pairs.
  std::vector<std::vector<std::pair<int, double>>> bycol(prog.num_vars());
  for (auto& t : prog.triplets()) bycol[t.col()].emplace_back(t.row(), t.value());
  for (int k = static_cast<int>(pre.fixes.size()) - 1; k >= 0; --k) {
    const auto& fx = pre.fixes[k];
    double acc = 0.0;
    for (auto& [row, val] : bycol[fx.col])
      if (row != fx.row) acc += val * y_full[row];
    y_full[fx.row] = -acc / fx.coeff;
  }
}

PresolveResult presolve(const ConicProgram& prog) {
  PresolveResult pre;
  const int n = prog.num_vars();
  const int m = prog.num_rows();

  // Row-wise working copy.
  std::vector<std::vector<RowEntry>> rows(m);
  for (auto& t : prog.triplets()) rows[t.row()].push_back({t.col(), t.value()});
  std::vector<double> b(prog.rhs());
  std::vector<Cone> row_cone(m);
  std::vector<char> in_soc(m, 0);
  {
    int r = 0;
    for (auto& blk : prog.blocks())
      for (int k = 0; k < blk.size; ++k, ++r) {
        row_cone[r] = blk.cone;
        in_soc[r] = blk.cone == Cone::SecondOrder;
      }
  }

  pre.col_fixed.assign(n, 0);
  pre.fix_value.assign(n, 0.0);
  pre.row_dropped.assign(m, 0);
  Eigen::VectorXd c = prog.objective();

  auto make_infeasible_cert = [&](int bad_row, double sign) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    y[bad_row] = sign;
    derive_fix_duals(prog, pre, y);
    double by = 0.0;
    for (int i = 0; i < m; ++i) by += prog.rhs(i) * y[i];
    if (by < 0) y /= -by;  // normalise b'y = -1
    SolveResult r;
    r.status = SolveStatus::PrimalInfeasible;
    r.y = y;
    r.x = Eigen::VectorXd::Zero(n);
    r.objective = kNan;
    r.message = "presolve: trivially infeasible row";
    pre.decided = true;
    pre.early = r;
    return pre;
  };

  bool changed = true;
  int guard = 0;
  while (changed && guard++ < 50) {
    changed = false;
    for (int r = 0; r < m; ++r) {
      if (pre.row_dropped[r] || in_soc[r]) continue;
      // Compact away fixed columns.
      auto& entries = rows[r];
      size_t w = 0;
      for (size_t k = 0; k < entries.size(); ++k) {
        if (pre.col_fixed[entries[k].col]) {
          b[r] -= entries[k].val * pre.fix_value[entries[k].col];
        } else {
          entries[w++] = entries[k];
        }
      }
      entries.resize(w);
      if (entries.empty()) {
        if (row_cone[r] == Cone::Zero) {
          if (std::abs(b[r]) > 1e-9) return make_infeasible_cert(r, b[r] > 0 ? -1.0 : 1.0);
        } else {
          if (b[r] < -1e-9) return make_infeasible_cert(r, 1.0);
        }
        pre.row_dropped[r] = 1;
        changed = true;
        continue;
      }
      if (row_cone[r] == Cone::Zero && entries.size() == 1 &&
          std::abs(entries[0].val) > 1e-12) {
        int j = entries[0].col;
        pre.col_fixed[j] = 1;
        pre.fix_value[j] = b[r] / entries[0].val;
        pre.fixes.push_back({r, j, entries[0].val});
        pre.row_dropped[r] = 1;
        pre.obj_offset += c[j] * pre.fix_value[j];
        changed = true;
      }
    }
  }

  // Substitute fixed columns into SOC rows (rhs only).
  for (int r = 0; r < m; ++r) {
    if (!in_soc[r]) continue;
    auto& entries = rows[r];
    size_t w = 0;
    for (size_t k = 0; k < entries.size(); ++k) {
      if (pre.col_fixed[entries[k].col]) {
        b[r] -= entries[k].val * pre.fix_value[entries[k].col];
      } else {
        entries[w++] = entries[k];
      }
    }
    entries.resize(w);
  }

  // Column compression.
  std::vector<int> newcol(n, -1);
  for (int j = 0; j < n; ++j)
    if (!pre.col_fixed[j]) {
      newcol[j] = static_cast<int>(pre.reduced_col_to_orig.size());
      pre.reduced_col_to_orig.push_back(j);
    }
  pre.n_reduced = static_cast<int>(pre.reduced_col_to_orig.size());
  pre.c = Eigen::VectorXd::Zero(pre.n_reduced);
  for (int j = 0; j < n; ++j)
    if (newcol[j] >= 0) pre.c[newcol[j]] = c[j];

  // Partition kept rows.
  std::vector<Eigen::Triplet<double>> eq_t, g_t;
  std::vector<double> beq, h;
  int soc_cursor = 0;
  {
    int r = 0;
    for (auto& blk : prog.blocks()) {
      if (blk.cone == Cone::SecondOrder) {
        pre.soc_dims.push_back(blk.size);
        for (int k = 0; k < blk.size; ++k, ++r) {
          int gr = static_cast<int>(h.size());
          for (auto& e : rows[r]) g_t.emplace_back(gr, newcol[e.col], e.val);
          h.push_back(b[r]);
          pre.g_orig_rows.push_back(r);
        }
        soc_cursor += blk.size;
      } else {
        for (int k = 0; k < blk.size; ++k, ++r) {
          if (pre.row_dropped[r]) continue;
          if (blk.cone == Cone::Zero) {
            int er = static_cast<int>(beq.size());
            for (auto& e : rows[r]) eq_t.emplace_back(er, newcol[e.col], e.val);
            beq.push_back(b[r]);
            pre.eq_orig_rows.push_back(r);
          } else {
            // insert later, after all nonneg rows counted
          }
        }
      }
    }
  }
  // Duplicate nonneg rows add no information but make the dual non-unique,
  // which degrades interior-point conditioning; keep the first copy of each.
  // The dropped copies simply keep a zero dual, which is still a valid
  // multiplier (the kept row absorbs the full weight).
  {
    std::map<std::pair<std::vector<std::pair<int, double>>, double>, int> seen;
    int r = 0;
    for (auto& blk : prog.blocks()) {
      for (int k = 0; k < blk.size; ++k, ++r) {
        if (blk.cone != Cone::Nonneg || pre.row_dropped[r]) continue;
        std::vector<std::pair<int, double>> key;
        key.reserve(rows[r].size());
        for (auto& e : rows[r]) key.emplace_back(e.col, e.val);
        std::sort(key.begin(), key.end());
        if (!seen.try_emplace({std::move(key), b[r]}, r).second) {
          pre.row_dropped[r] = 1;
        }
      }
    }
  }

  // Second pass for nonneg rows so they precede SOC rows in G.
  std::vector<Eigen::Triplet<double>> g_nn;
  std::vector<double> h_nn;
  std::vector<int> g_nn_orig;
  {
    int r = 0;
    for (auto& blk : prog.blocks()) {
      for (int k = 0; k < blk.size; ++k, ++r) {
        if (blk.cone != Cone::Nonneg || pre.row_dropped[r]) continue;
        int gr = static_cast<int>(h_nn.size());
        for (auto& e : rows[r]) g_nn.emplace_back(gr, newcol[e.col], e.val);
        h_nn.push_back(b[r]);
        g_nn_orig.push_back(r);
      }
    }
  }
  pre.m_nonneg = static_cast<int>(h_nn.size());
  // Shift previously collected SOC rows after the nonneg rows.
  for (auto& t : g_t) g_nn.emplace_back(t.row() + pre.m_nonneg, t.col(), t.value());
  for (double v : h) h_nn.push_back(v);
  for (int r : pre.g_orig_rows) g_nn_orig.push_back(r);
  pre.g_orig_rows = std::move(g_nn_orig);

  pre.Aeq.resize(static_cast<int>(beq.size()), pre.n_reduced);
  pre.Aeq.setFromTriplets(eq_t.begin(), eq_t.end());
  pre.beq = Eigen::Map<const Eigen::VectorXd>(beq.data(), static_cast<int>(beq.size()));
  pre.G.resize(static_cast<int>(h_nn.size()), pre.n_reduced);
  pre.G.setFromTriplets(g_nn.begin(), g_nn.end());
  pre.h = Eigen::Map<const Eigen::VectorXd>(h_nn.data(), static_cast<int>(h_nn.size()));
  return pre;
}

// ---------------------------------------------------------------------------
// Cone algebra over the composite (nonneg, soc...) cone
// ---------------------------------------------------------------------------

struct ConeLayout {
  int m_nonneg = 0;
  std::vector<int> soc_dims;
  int dim() const {
    int d = m_nonneg;
    for (int q : soc_dims) d += q;
    return d;
  }
  int degree() const { return m_nonneg + static_cast<int>(soc_dims.size()); }
};

Eigen::VectorXd cone_identity(const ConeLayout& L) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(L.dim());
  e.head(L.m_nonneg).setOnes();
  int off = L.m_nonneg;
  for (int q : L.soc_dims) {
    e[off] = 1.0;
    off += q;
  }
  return e;
}

// Largest t such that x - t*e touches the cone boundary, i.e. how far x is
// from being strictly interior (negative means strictly inside).
double cone_depth(const ConeLayout& L, const Eigen::VectorXd& x) {
  double a = -kInf;
  for (int i = 0; i < L.m_nonneg; ++i) a = std::max(a, -x[i]);
  int off = L.m_nonneg;
  for (int q : L.soc_dims) {
    a = std::max(a, x.segment(off + 1, q - 1).norm() - x[off]);
    off += q;
  }
  return a;
}

Eigen::VectorXd jordan_mul(const ConeLayout& L, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& v) {
  Eigen::VectorXd out(L.dim());
  out.head(L.m_nonneg) = u.head(L.m_nonneg).cwiseProduct(v.head(L.m_nonneg));
  int off = L.m_nonneg;
  for (int q : L.soc_dims) {
    auto u1 = u.segment(off + 1, q - 1);
    auto v1 = v.segment(off + 1, q - 1);
    out[off] = u.segment(off, q).dot(v.segment(off, q));
    out.segment(off + 1, q - 1) = u[off] * v1 + v[off] * u1;
    off += q;
  }
  return out;
}

// Solves u o x = v for x (inverse Jordan product).
Eigen::VectorXd jordan_div(const ConeLayout& L, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& v) {
  Eigen::VectorXd out(L.dim());
  out.head(L.m_nonneg) = v.head(L.m_nonneg).cwiseQuotient(u.head(L.m_nonneg));
  int off = L.m_nonneg;
  for (int q : L.soc_dims) {
    double u0 = u[off];
    auto u1 = u.segment(off + 1, q - 1);
    double det = u0 * u0 - u1.squaredNorm();
    double x0 = (u0 * v[off] - u1.dot(v.segment(off + 1, q - 1))) / det;
    out[off] = x0;
    out.segment(off + 1, q - 1) = (v.segment(off + 1, q - 1) - x0 * u1) / u0;
    off += q;
  }
  return out;
}

// Max step t such that x + t*d stays in the cone (inf if unbounded).
double max_step(const ConeLayout& L, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
  double t = kInf;
  for (int i = 0; i < L.m_nonneg; ++i)
    if (d[i] < 0) t = std::min(t, -x[i] / d[i]);
  int off = L.m_nonneg;
  for (int q : L.soc_dims) {
    double x0 = x[off], d0 = d[off];
    auto x1 = x.segment(off + 1, q - 1);
    auto d1 = d.segment(off + 1, q - 1);
    double a = d0 * d0 - d1.squaredNorm();
    double bq = x0 * d0 - x1.dot(d1);
    double c = x0 * x0 - x1.squaredNorm();
    // smallest positive root of a t^2 + 2 b t + c = 0
    double root = kInf;
    double disc = bq * bq - a * c;
    if (disc >= 0) {
      double sq = std::sqrt(disc);
      if (std::abs(a) < 1e-14) {
        if (bq < 0) root = -c / (2 * bq);
      } else {
        double r1 = (-bq - sq) / a;
        double r2 = (-bq + sq) / a;
        if (r1 > r2) std::swap(r1, r2);
        if (r1 > 0)
          root = r1;
        else if (r2 > 0 && a < 0)
          root = r2;
        else if (r2 > 0 && a > 0 && c < 0)
          root = r2;
      }
    }
    if (root < t) t = root;
    off += q;
  }
  return t;
}

// Nesterov-Todd scaling W with lambda = W z = W^{-1} s.
struct Scaling {
  ConeLayout layout;
  Eigen::VectorXd w_nonneg;                 // W = diag(w)
  std::vector<Eigen::MatrixXd> soc_W;       // per block
  std::vector<Eigen::MatrixXd> soc_Winv;
  std::vector<Eigen::MatrixXd> soc_W2;
  Eigen::VectorXd lambda;

  void identity(const ConeLayout& L) {
    layout = L;
    w_nonneg = Eigen::VectorXd::Ones(L.m_nonneg);
    soc_W.clear();
    soc_Winv.clear();
    soc_W2.clear();
    for (int q : L.soc_dims) {
      soc_W.push_back(Eigen::MatrixXd::Identity(q, q));
      soc_Winv.push_back(Eigen::MatrixXd::Identity(q, q));
      soc_W2.push_back(Eigen::MatrixXd::Identity(q, q));
    }
    lambda = Eigen::VectorXd::Ones(L.dim());
    int off = L.m_nonneg;
    for (int q : L.soc_dims) {
      lambda.segment(off, q).setZero();
      lambda[off] = 1.0;
      off += q;
    }
  }

  void compute(const ConeLayout& L, const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    layout = L;
    w_nonneg = (s.head(L.m_nonneg).cwiseQuotient(z.head(L.m_nonneg))).cwiseSqrt();
    lambda.resize(L.dim());
    lambda.head(L.m_nonneg) =
        (s.head(L.m_nonneg).cwiseProduct(z.head(L.m_nonneg))).cwiseSqrt();
    soc_W.clear();
    soc_Winv.clear();
    soc_W2.clear();
    int off = L.m_nonneg;
    for (int q : L.soc_dims) {
      Eigen::VectorXd sb = s.segment(off, q), zb = z.segment(off, q);
      double snorm1 = sb.tail(q - 1).norm();
      double znorm1 = zb.tail(q - 1).norm();
      double rho = std::sqrt(std::max(1e-300, (sb[0] - snorm1) * (sb[0] + snorm1)));
      double sigma = std::sqrt(std::max(1e-300, (zb[0] - znorm1) * (zb[0] + znorm1)));
      Eigen::VectorXd sbar = sb / rho, zbar = zb / sigma;
      double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
      Eigen::VectorXd Jz = zbar;
      Jz.tail(q - 1) = -Jz.tail(q - 1);
      // Half-angle Householder vector: wbar = (sbar + J zbar) / (2 gamma) is the
      // J-unit point the scaling maps e to; v = (wbar + e) / sqrt(2 (wbar0 + 1))
      // gives W = eta (2 v v' - J) with W z = W^{-1} s (Nesterov-Todd).
      Eigen::VectorXd wbar = (sbar + Jz) / (2.0 * gamma);
      Eigen::VectorXd v = wbar;
      v[0] += 1.0;
      v /= std::sqrt(2.0 * (wbar[0] + 1.0));
      double eta = std::sqrt(rho / sigma);
      Eigen::MatrixXd J = -Eigen::MatrixXd::Identity(q, q);
      J(0, 0) = 1.0;
      Eigen::MatrixXd W = eta * (2.0 * v * v.transpose() - J);
      Eigen::VectorXd Jv = v;
      Jv.tail(q - 1) = -Jv.tail(q - 1);
      Eigen::MatrixXd Winv = (1.0 / eta) * (2.0 * Jv * Jv.transpose() - J);
      soc_W.push_back(W);
      soc_Winv.push_back(Winv);
      soc_W2.push_back(W * W);
      lambda.segment(off, q) = W * zb;
      off += q;
    }
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {  // W v
    Eigen::VectorXd out(layout.dim());
    out.head(layout.m_nonneg) =
        w_nonneg.cwiseProduct(v.head(layout.m_nonneg));
    int off = layout.m_nonneg;
    for (size_t k = 0; k < layout.soc_dims.size(); ++k) {
      int q = layout.soc_dims[k];
      out.segment(off, q) = soc_W[k] * v.segment(off, q);
      off += q;
    }
    return out;
  }

  Eigen::VectorXd apply_inv(const Eigen::VectorXd& v) const {  // W^{-1} v
    Eigen::VectorXd out(layout.dim());
    out.head(layout.m_nonneg) =
        v.head(layout.m_nonneg).cwiseQuotient(w_nonneg);
    int off = layout.m_nonneg;
    for (size_t k = 0; k < layout.soc_dims.size(); ++k) {
      int q = layout.soc_dims[k];
      out.segment(off, q) = soc_Winv[k] * v.segment(off, q);
      off += q;
    }
    return out;
  }

  Eigen::VectorXd apply_w2(const Eigen::VectorXd& v) const {  // W^2 v
    Eigen::VectorXd out(layout.dim());
    out.head(layout.m_nonneg) =
        w_nonneg.cwiseAbs2().cwiseProduct(v.head(layout.m_nonneg));
    int off = layout.m_nonneg;
    for (size_t k = 0; k < layout.soc_dims.size(); ++k) {
      int q = layout.soc_dims[k];
      out.segment(off, q) = soc_W2[k] * v.segment(off, q);
      off += q;
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// KKT system with cached symbolic factorisation
// ---------------------------------------------------------------------------

struct KktSystem {
  int n = 0, p = 0, m = 0;
  ConeLayout layout;
  Eigen::SparseMatrix<double> K;  // lower triangle, dim n+p+m
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                        Eigen::AMDOrdering<int>>
      ldlt;
  std::vector<int> user_slots;       // valuePtr offsets for A/G entries
  std::vector<double> user_values;
  std::vector<int> w2_slots;         // offsets for the -W^2 - reg block
  std::vector<std::pair<int, int>> w2_coords;  // (row,col) within z block
  std::vector<int> reg_slots;        // diagonal regularisation slots not in W2
  uint64_t structure_hash = 0;
  double base_reg = 1e-7;  // per-solve setting, see SolverSettings::static_reg
  double reg = 1e-7;        // escalated when factorisation breaks down
  bool analyzed = false;

  const Eigen::SparseMatrix<double>* Aeq = nullptr;
  const Eigen::SparseMatrix<double>* G = nullptr;
  const Scaling* scaling = nullptr;

  static uint64_t hash_structure(const PresolveResult& pre) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<uint64_t>(pre.n_reduced));
    mix(static_cast<uint64_t>(pre.Aeq.rows()));
    mix(static_cast<uint64_t>(pre.G.rows()));
    mix(static_cast<uint64_t>(pre.m_nonneg));
    for (int q : pre.soc_dims) mix(static_cast<uint64_t>(q));
    for (int k = 0; k < pre.Aeq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.Aeq, k); it; ++it)
        mix((static_cast<uint64_t>(it.row()) << 24) ^ static_cast<uint64_t>(it.col()));
    for (int k = 0; k < pre.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.G, k); it; ++it)
        mix((static_cast<uint64_t>(it.row()) << 24) ^ static_cast<uint64_t>(it.col()) ^
            0x9e3779b97f4a7c15ull);
    return h;
  }

  int locate(int r, int c) const {
    // lower-triangle CSC lookup
    const int* outer = K.outerIndexPtr();
    const int* inner = K.innerIndexPtr();
    int lo = outer[c], hi = outer[c + 1];
    auto it = std::lower_bound(inner + lo, inner + hi, r);
    if (it == inner + hi || *it != r) throw std::logic_error("KKT slot not found");
    return static_cast<int>(it - inner);
  }

  void build(const PresolveResult& pre) {
    n = pre.n_reduced;
    p = static_cast<int>(pre.Aeq.rows());
    m = static_cast<int>(pre.G.rows());
    layout.m_nonneg = pre.m_nonneg;
    layout.soc_dims = pre.soc_dims;
    const int dim = n + p + m;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(pre.Aeq.nonZeros() + pre.G.nonZeros() + dim + 16);
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, base_reg);
    for (int k = 0; k < pre.Aeq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.Aeq, k); it; ++it)
        trips.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
    for (int j = 0; j < p; ++j) trips.emplace_back(n + j, n + j, -base_reg);
    for (int k = 0; k < pre.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.G, k); it; ++it)
        trips.emplace_back(n + p + static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
    // -W^2 block structure: diagonal for nonneg, dense lower blocks for soc.
    w2_coords.clear();
    for (int i = 0; i < layout.m_nonneg; ++i) w2_coords.emplace_back(i, i);
    int off = layout.m_nonneg;
    for (int q : layout.soc_dims) {
      for (int a = 0; a < q; ++a)
        for (int bq = 0; bq <= a; ++bq) w2_coords.emplace_back(off + a, off + bq);
      off += q;
    }
    for (auto& [r, c] : w2_coords) trips.emplace_back(n + p + r, n + p + c, -1.0);

    K.resize(dim, dim);
    K.setFromTriplets(trips.begin(), trips.end(),
                      [](const double&, const double& b) { return b; });
    K.makeCompressed();

    // Record value offsets.
    user_slots.clear();
    user_values.clear();
    for (int k = 0; k < pre.Aeq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.Aeq, k); it; ++it) {
        user_slots.push_back(locate(n + static_cast<int>(it.row()),
                                    static_cast<int>(it.col())));
        user_values.push_back(it.value());
      }
    for (int k = 0; k < pre.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.G, k); it; ++it) {
        user_slots.push_back(locate(n + p + static_cast<int>(it.row()),
                                    static_cast<int>(it.col())));
        user_values.push_back(it.value());
      }
    reg_slots.clear();
    for (int j = 0; j < n; ++j) reg_slots.push_back(locate(j, j));
    for (int j = 0; j < p; ++j) reg_slots.push_back(locate(n + j, n + j));
    w2_slots.clear();
    for (auto& [r, c] : w2_coords) w2_slots.push_back(locate(n + p + r, n + p + c));

    if (!analyzed) {
      ldlt.analyzePattern(K);
      analyzed = true;
    }
    structure_hash = hash_structure(pre);
  }

  // Refresh static values (A, G, regularisation) after build() or when reusing
  // the cached structure with a new program carrying identical sparsity.
  void load_static_values(const PresolveResult& pre) {
    double* vals = K.valuePtr();
    size_t u = 0;
    for (int k = 0; k < pre.Aeq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.Aeq, k); it; ++it)
        vals[user_slots[u++]] = it.value();
    for (int k = 0; k < pre.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.G, k); it; ++it)
        vals[user_slots[u++]] = it.value();
    reg = base_reg;
    for (int j = 0; j < n; ++j) vals[reg_slots[j]] = reg;
    for (int j = 0; j < p; ++j) vals[reg_slots[n + j]] = -reg;
  }

  void set_scaling(const Scaling& sc) {
    scaling = &sc;
    double* vals = K.valuePtr();
    size_t idx = 0;
    for (int i = 0; i < layout.m_nonneg; ++i, ++idx) {
      double w2 = sc.w_nonneg[i] * sc.w_nonneg[i];
      vals[w2_slots[idx]] = -w2 - reg;
    }
    for (size_t kblk = 0; kblk < layout.soc_dims.size(); ++kblk) {
      int q = layout.soc_dims[kblk];
      const Eigen::MatrixXd& W2 = sc.soc_W2[kblk];
      for (int a = 0; a < q; ++a)
        for (int bq = 0; bq <= a; ++bq, ++idx)
          vals[w2_slots[idx]] = -W2(a, bq) - (a == bq ? reg : 0.0);
    }
  }

  // The LDLT of the quasi-definite regularised system can still break down
  // numerically for extreme scalings; escalate the regularisation until it
  // goes through (iterative refinement against the true matrix recovers the
  // lost accuracy afterwards).
  bool factorize() {
    for (int attempt = 0; attempt < 4; ++attempt) {
      ldlt.factorize(K);
      if (ldlt.info() == Eigen::Success) return true;
      reg *= 100.0;
      if (reg > 1e-2) break;
      double* vals = K.valuePtr();
      for (int j = 0; j < n; ++j) vals[reg_slots[j]] = reg;
      for (int j = 0; j < p; ++j) vals[reg_slots[n + j]] = -reg;
      if (scaling) set_scaling(*scaling);
    }
    return false;
  }

  // Unregularised K * v for iterative refinement.
  Eigen::VectorXd apply_true(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n + p + m);
    auto vx = v.head(n);
    auto vy = v.segment(n, p);
    auto vz = v.tail(m);
    out.head(n) = Aeq->transpose() * vy + G->transpose() * vz;
    out.segment(n, p) = (*Aeq) * vx;
    out.tail(m) = (*G) * vx - scaling->apply_w2(vz);
    return out;
  }

  // Iterative refinement against the unregularised matrix.  The loop is
  // monitored: refinement can stagnate or even diverge once the factorisation
  // is a poor preconditioner (degenerate scalings), so keep the best iterate
  // and stop when the residual no longer contracts.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, int refine_steps) const {
    Eigen::VectorXd x = ldlt.solve(rhs);
    const double rhs_scale = 1.0 + rhs.norm();
    Eigen::VectorXd r = rhs - apply_true(x);
    double rn = r.norm();
    Eigen::VectorXd best = x;
    double best_rn = rn;
    const int max_steps = std::max(refine_steps, 10);
    for (int k = 0; k < max_steps && rn > 1e-13 * rhs_scale; ++k) {
      x += ldlt.solve(r);
      r = rhs - apply_true(x);
      const double rn_new = r.norm();
      if (rn_new < best_rn) {
        best = x;
        best_rn = rn_new;
      }
      if (rn_new > 0.9 * rn) break;  // stagnating or diverging
      rn = rn_new;
    }
    return best;
  }
};

// Block-aware Ruiz equilibration.
struct ScalingData {
  Eigen::VectorXd row_scale_eq, row_scale_g, col_scale;
};

ScalingData equilibrate(PresolveResult& pre) {
  const int n = pre.n_reduced;
  const int p = static_cast<int>(pre.Aeq.rows());
  const int m = static_cast<int>(pre.G.rows());
  ScalingData sd;
  sd.row_scale_eq = Eigen::VectorXd::Ones(p);
  sd.row_scale_g = Eigen::VectorXd::Ones(m);
  sd.col_scale = Eigen::VectorXd::Ones(n);

  for (int pass = 0; pass < 5; ++pass) {
    Eigen::VectorXd rmax_eq = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd rmax_g = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd cmax = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < pre.Aeq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.Aeq, k); it; ++it) {
        double a = std::abs(it.value());
        rmax_eq[it.row()] = std::max(rmax_eq[it.row()], a);
        cmax[it.col()] = std::max(cmax[it.col()], a);
      }
    for (int k = 0; k < pre.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.G, k); it; ++it) {
        double a = std::abs(it.value());
        rmax_g[it.row()] = std::max(rmax_g[it.row()], a);
        cmax[it.col()] = std::max(cmax[it.col()], a);
      }
    // SOC blocks share one scale (max over the block) to stay cone-invariant.
    int off = pre.m_nonneg;
    for (int q : pre.soc_dims) {
      double blockmax = 0.0;
      for (int i = 0; i < q; ++i) blockmax = std::max(blockmax, rmax_g[off + i]);
      for (int i = 0; i < q; ++i) rmax_g[off + i] = blockmax;
      off += q;
    }
    auto d_of = [](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; };
    Eigen::VectorXd dr_eq = rmax_eq.unaryExpr(d_of);
    Eigen::VectorXd dr_g = rmax_g.unaryExpr(d_of);
    Eigen::VectorXd dc = cmax.unaryExpr(d_of);
    for (int k = 0; k < pre.Aeq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.Aeq, k); it; ++it)
        it.valueRef() *= dr_eq[it.row()] * dc[it.col()];
    for (int k = 0; k < pre.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pre.G, k); it; ++it)
        it.valueRef() *= dr_g[it.row()] * dc[it.col()];
    sd.row_scale_eq = sd.row_scale_eq.cwiseProduct(dr_eq);
    sd.row_scale_g = sd.row_scale_g.cwiseProduct(dr_g);
    sd.col_scale = sd.col_scale.cwiseProduct(dc);
  }
  pre.beq = pre.beq.cwiseProduct(sd.row_scale_eq);
  pre.h = pre.h.cwiseProduct(sd.row_scale_g);
  pre.c = pre.c.cwiseProduct(sd.col_scale);
  return sd;
}

}  // namespace

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

struct ConicSolver::Impl {
  std::unique_ptr<KktSystem> kkt;
  bool has_cache = false;
  uint64_t cached_hash = 0;
};

namespace {

SolveResult run_interior_point(const ConicProgram& prog, PresolveResult& pre,
                               const SolverSettings& st, ConicSolver::Impl* cache) {
  const int n = pre.n_reduced;
  const int p = static_cast<int>(pre.Aeq.rows());
  const int m = static_cast<int>(pre.G.rows());
  SolveResult res;

  // Fully presolved / unconstrained corner cases.
  auto scatter_x = [&](const Eigen::VectorXd& xr) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(prog.num_vars());
    for (int j = 0; j < prog.num_vars(); ++j)
      if (pre.col_fixed[j]) x[j] = pre.fix_value[j];
    for (int j = 0; j < n; ++j) x[pre.reduced_col_to_orig[j]] = xr[j];
    return x;
  };

  if (p + m == 0) {
    if (pre.c.lpNorm<Eigen::Infinity>() < 1e-14) {
      res.status = SolveStatus::Optimal;
      res.x = scatter_x(Eigen::VectorXd::Zero(n));
      res.y = Eigen::VectorXd::Zero(prog.num_rows());
      res.objective = pre.obj_offset;
      res.message = "presolve: fully determined";
    } else {
      res.status = SolveStatus::DualInfeasible;
      Eigen::VectorXd ray = -pre.c / pre.c.squaredNorm();  // c'ray = -1
      res.x = Eigen::VectorXd::Zero(prog.num_vars());
      for (int j = 0; j < n; ++j) res.x[pre.reduced_col_to_orig[j]] = ray[j];
      res.objective = -kInf;
      res.message = "unconstrained improving ray";
    }
    return res;
  }

  ScalingData sd = equilibrate(pre);

  KktSystem local_kkt;
  KktSystem* kkt = &local_kkt;
  uint64_t h = KktSystem::hash_structure(pre);
  if (cache) {
    if (!cache->kkt) cache->kkt = std::make_unique<KktSystem>();
    kkt = cache->kkt.get();
  }
  if (cache && cache->has_cache && cache->cached_hash == h && kkt->K.nonZeros() > 0) {
    kkt->base_reg = st.static_reg;
    kkt->load_static_values(pre);
  } else {
    if (cache) {
      cache->kkt = std::make_unique<KktSystem>();
      kkt = cache->kkt.get();
    }
    kkt->base_reg = st.static_reg;
    kkt->build(pre);
    kkt->load_static_values(pre);
    if (cache) {
      cache->has_cache = true;
      cache->cached_hash = h;
    }
  }
  kkt->Aeq = &pre.Aeq;
  kkt->G = &pre.G;

  const ConeLayout& L = kkt->layout;
  const Eigen::VectorXd e = cone_identity(L);
  const double deg = std::max(1, L.degree());

  const Eigen::VectorXd& c = pre.c;
  const Eigen::VectorXd& b = pre.beq;
  const Eigen::VectorXd& hh = pre.h;
  const Eigen::SparseMatrix<double>& A = pre.Aeq;
  const Eigen::SparseMatrix<double>& G = pre.G;

  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.norm());
  const double resz0 = std::max(1.0, hh.norm());

  Scaling sc;
  sc.identity(L);
  kkt->scaling = &sc;
  kkt->set_scaling(sc);
  if (!kkt->factorize()) {
    res.status = SolveStatus::MaxIterations;
    res.message = "initial KKT factorisation failed";
    res.x = scatter_x(Eigen::VectorXd::Zero(n));
    res.y = Eigen::VectorXd::Zero(prog.num_rows());
    res.objective = kNan;
    return res;
  }

  const int dim = n + p + m;
  Eigen::VectorXd x(n), y(p), z(m), s(m);
  {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs.segment(n, p) = b;
    rhs.tail(m) = hh;
    Eigen::VectorXd sol = kkt->solve(rhs, st.refine_steps);
    x = sol.head(n);
    s = -(sol.tail(m));  // = h - Gx at the least-squares point
    double ap = cone_depth(L, s);
    if (ap >= 0) s += (1.0 + ap) * e;

    rhs.setZero();
    rhs.head(n) = -c;
    sol = kkt->solve(rhs, st.refine_steps);
    y = sol.segment(n, p);
    z = sol.tail(m);
    double ad = cone_depth(L, z);
    if (ad >= 0) z += (1.0 + ad) * e;
  }
  double tau = 1.0, kappa = 1.0;

  auto extract_optimal = [&](double tau_) {
    res.status = SolveStatus::Optimal;
    Eigen::VectorXd xr = (x / tau_).cwiseProduct(sd.col_scale);
    res.x = scatter_x(xr);
    res.objective = pre.obj_offset;
    Eigen::VectorXd c_orig = prog.objective();
    for (int j = 0; j < prog.num_vars(); ++j)
      if (!pre.col_fixed[j]) res.objective += c_orig[j] * res.x[j];
    // duals mapped back to original row order (zeros on presolved rows)
    res.y = Eigen::VectorXd::Zero(prog.num_rows());
    for (int i = 0; i < p; ++i)
      res.y[pre.eq_orig_rows[i]] = y[i] / tau_ * sd.row_scale_eq[i];
    for (int i = 0; i < m; ++i)
      res.y[pre.g_orig_rows[i]] = z[i] / tau_ * sd.row_scale_g[i];
  };

  // Best iterate seen so far, by worst-case optimality metric.  Interior-point
  // iterations hit a numerical floor once the scaled KKT system becomes too
  // ill-conditioned; when progress stops we fall back to this iterate instead
  // of walking into NaN territory.
  double best_metric = kInf;   // best iterate seen, kept for the fallback
  double track_metric = kInf;  // baseline for the stall monitor
  Eigen::VectorXd best_x = x, best_y = y, best_z = z, best_s = s;
  double best_tau = tau, best_kappa = kappa;
  int no_progress = 0;

  int iter = 0;
  int tiny_steps = 0;
  for (; iter < st.max_iter; ++iter) {
    // Residuals.
    Eigen::VectorXd rx = A.transpose() * y + G.transpose() * z + c * tau;
    Eigen::VectorXd ry = A * x - b * tau;
    Eigen::VectorXd rz = G * x + s - hh * tau;
    double cx = c.dot(x), by = b.dot(y), hz = hh.dot(z);
    double gap = s.dot(z);
    double mu = (gap + tau * kappa) / (deg + 1.0);

    double pcost = cx / tau;
    double pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
    double dres = rx.norm() / resx0 / tau;
    double relgap_den = std::max(1.0, std::abs(pcost));
    double gap_scaled = gap / (tau * tau);

    if (st.verbose) {
      std::ostringstream os;
      os << "iter " << iter << " pres " << pres << " dres " << dres << " gap "
         << gap_scaled << " tau " << tau << " kappa " << kappa;
      res.message = os.str();
      std::fprintf(stderr, "%s mu %g\n", res.message.c_str(), mu);
    }

    if (pres <= st.feas_tol && dres <= st.feas_tol &&
        gap_scaled <= st.gap_tol * relgap_den) {
      extract_optimal(tau);
      res.iterations = iter;
      return res;
    }

    double metric = std::max({pres, dres, gap_scaled / relgap_den});
    if (!std::isfinite(metric) || !std::isfinite(mu)) {
      res.message = "numerical breakdown";
      break;
    }
    if (metric < best_metric) {
      best_metric = metric;
      best_x = x;
      best_y = y;
      best_z = z;
      best_s = s;
      best_tau = tau;
      best_kappa = kappa;
    }
    if (metric < 0.9 * track_metric) {
      track_metric = metric;
      no_progress = 0;
    } else if (++no_progress >= 8) {
      res.message = "progress stalled";
      break;
    }
    if (by + hz < -1e-12) {
      double denom = -(by + hz);
      double pinf = (A.transpose() * y + G.transpose() * z).norm() / resx0 / denom;
      if (pinf <= st.feas_tol && cone_depth(L, z) <= st.feas_tol * denom) {
        res.status = SolveStatus::PrimalInfeasible;
        res.iterations = iter;
        res.objective = kNan;
        Eigen::VectorXd yc = y / denom, zc = z / denom;
        res.y = Eigen::VectorXd::Zero(prog.num_rows());
        for (int i = 0; i < p; ++i)
          res.y[pre.eq_orig_rows[i]] = yc[i] * sd.row_scale_eq[i];
        for (int i = 0; i < m; ++i)
          res.y[pre.g_orig_rows[i]] = zc[i] * sd.row_scale_g[i];
        derive_fix_duals(prog, pre, res.y);
        double byo = 0.0;
        for (int i = 0; i < prog.num_rows(); ++i) byo += prog.rhs(i) * res.y[i];
        if (byo < 0) res.y /= -byo;
        res.x = scatter_x(Eigen::VectorXd::Zero(n));
        res.message = "infeasibility certificate";
        return res;
      }
    }
    if (cx < -1e-12) {
      double denom = -cx;
      double dinf =
          std::max((A * x).norm() / resy0, (G * x + s).norm() / resz0) / denom;
      if (dinf <= st.feas_tol) {
        res.status = SolveStatus::DualInfeasible;
        res.iterations = iter;
        res.objective = -kInf;
        Eigen::VectorXd ray = (x / denom).cwiseProduct(sd.col_scale);
        res.x = Eigen::VectorXd::Zero(prog.num_vars());
        for (int j = 0; j < n; ++j) res.x[pre.reduced_col_to_orig[j]] = ray[j];
        res.y = Eigen::VectorXd::Zero(prog.num_rows());
        res.message = "unbounded ray";
        return res;
      }
    }

    // NT scaling and factorisation.
    sc.compute(L, s, z);
    kkt->set_scaling(sc);
    if (!kkt->factorize()) {
      res.message = "KKT factorisation failed";
      break;
    }

    Eigen::VectorXd rhs1 = Eigen::VectorXd::Zero(dim);
    rhs1.head(n) = -c;
    rhs1.segment(n, p) = b;
    rhs1.tail(m) = hh;
    Eigen::VectorXd d1 = kkt->solve(rhs1, st.refine_steps);
    double cbh1 = c.dot(d1.head(n)) + b.dot(d1.segment(n, p)) + hh.dot(d1.tail(m));

    auto newton = [&](double sigma, const Eigen::VectorXd& ds, double dkappa,
                      Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                      Eigen::VectorXd& dsv, double& dtau, double& dkap) {
      double one_m_sigma = 1.0 - sigma;
      Eigen::VectorXd lam_div = jordan_div(L, sc.lambda, ds);
      Eigen::VectorXd rhs2 = Eigen::VectorXd::Zero(dim);
      rhs2.head(n) = -one_m_sigma * rx;
      rhs2.segment(n, p) = -one_m_sigma * ry;
      rhs2.tail(m) = -one_m_sigma * rz - sc.apply(lam_div);
      Eigen::VectorXd d2 = kkt->solve(rhs2, st.refine_steps);
      double rt = kappa + cx + by + hz;
      double btau_rhs = -one_m_sigma * rt - dkappa / tau;
      double num = btau_rhs - (c.dot(d2.head(n)) + b.dot(d2.segment(n, p)) +
                               hh.dot(d2.tail(m)));
      double den = cbh1 - kappa / tau;
      dtau = num / den;
      dx = d2.head(n) + dtau * d1.head(n);
      dy = d2.segment(n, p) + dtau * d1.segment(n, p);
      dz = d2.tail(m) + dtau * d1.tail(m);
      dsv = sc.apply(lam_div) - sc.apply_w2(dz);
      dkap = (dkappa - kappa * dtau) / tau;
    };

    // Affine (predictor) direction.
    Eigen::VectorXd lamlam = jordan_mul(L, sc.lambda, sc.lambda);
    Eigen::VectorXd dxa(n), dya(p), dza(m), dsa(m);
    double dtaua, dkapa;
    newton(0.0, -lamlam, -tau * kappa, dxa, dya, dza, dsa, dtaua, dkapa);

    Eigen::VectorXd ws = sc.apply_inv(dsa);
    Eigen::VectorXd wz = sc.apply(dza);
    double alpha_a = std::min(max_step(L, sc.lambda, ws), max_step(L, sc.lambda, wz));
    if (dtaua < 0) alpha_a = std::min(alpha_a, -tau / dtaua);
    if (dkapa < 0) alpha_a = std::min(alpha_a, -kappa / dkapa);
    alpha_a = std::min(alpha_a, 1.0);
    double sigma = std::pow(1.0 - alpha_a, 3);
    sigma = std::min(1.0, std::max(0.0, sigma));

    // Combined (corrector) direction.
    Eigen::VectorXd corr = jordan_mul(L, ws, wz);
    Eigen::VectorXd ds_comb = sigma * mu * e - lamlam - corr;
    double dk_comb = sigma * mu - tau * kappa - dtaua * dkapa;
    Eigen::VectorXd dx(n), dy(p), dz(m), dsv(m);
    double dtau, dkap;
    newton(sigma, ds_comb, dk_comb, dx, dy, dz, dsv, dtau, dkap);

    ws = sc.apply_inv(dsv);
    wz = sc.apply(dz);
    double alpha = std::min(max_step(L, sc.lambda, ws), max_step(L, sc.lambda, wz));
    if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0) alpha = std::min(alpha, -kappa / dkap);
    alpha = std::min(1.0, 0.99 * alpha);
    if (!std::isfinite(alpha) || alpha <= 0) {
      res.message = "step computation failed";
      break;
    }

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * dsv;
    tau += alpha * dtau;
    kappa += alpha * dkap;

    if (alpha < 1e-9) {
      if (++tiny_steps >= 3) {
        res.message = "stalled (step size underflow)";
        ++iter;
        break;
      }
    } else {
      tiny_steps = 0;
    }
    if (tau < 1e-12 && kappa < 1e-12) {
      res.message = "tau and kappa collapsed";
      ++iter;
      break;
    }
  }

  // Out of iterations or stalled: accept the best iterate at reduced accuracy
  // if it is close enough to optimal, otherwise report the failure.
  x = best_x;
  y = best_y;
  z = best_z;
  s = best_s;
  tau = best_tau;
  kappa = best_kappa;
  const double acc_feas = std::max(st.feas_tol, 1e-5);
  const double acc_gap = std::max(st.gap_tol, 1e-4);
  if (std::isfinite(best_metric) && tau > 1e-10) {
    double pres = std::max((A * x - b * tau).norm() / resy0,
                           (G * x + s - hh * tau).norm() / resz0) /
                  tau;
    double dres =
        (A.transpose() * y + G.transpose() * z + c * tau).norm() / resx0 / tau;
    double pcost = c.dot(x) / tau;
    double relgap_den = std::max(1.0, std::abs(pcost));
    double gap_scaled = s.dot(z) / (tau * tau);
    if (pres <= acc_feas && dres <= acc_feas &&
        gap_scaled <= acc_gap * relgap_den) {
      extract_optimal(tau);
      res.iterations = iter;
      if (!res.message.empty()) res.message += "; ";
      res.message += "accepted at reduced accuracy";
      return res;
    }
  }

  res.status = SolveStatus::MaxIterations;
  res.iterations = iter;
  res.objective = kNan;
  Eigen::VectorXd xr = (x / std::max(tau, 1e-300)).cwiseProduct(sd.col_scale);
  res.x = scatter_x(xr);
  res.y = Eigen::VectorXd::Zero(prog.num_rows());
  if (res.message.empty()) res.message = "iteration limit reached";
  return res;
}

}  // namespace

namespace {

// Degenerate instances are path-sensitive: the iterate trajectory depends on
// the static regularisation, and a run that stalls at one setting often
// converges at another.  Retry at alternative levels; iterative refinement
// solves against the true matrix either way, so a successful retry is a full
// answer, not an approximation.
SolveResult solve_with_retries(const ConicProgram& prog,
                               const SolverSettings& st,
                               ConicSolver::Impl* cache) {
  PresolveResult pre = presolve(prog);
  if (pre.decided) return pre.early;
  SolveResult first = run_interior_point(prog, pre, st, cache);
  if (first.status != SolveStatus::MaxIterations) return first;
  int retries = 0;
  for (double reg : {1e-8, 1e-5}) {
    if (reg == st.static_reg || retries >= st.reg_retries) continue;
    ++retries;
    SolverSettings retry = st;
    retry.static_reg = reg;
    PresolveResult fresh = presolve(prog);  // equilibration mutates it
    SolveResult r = run_interior_point(prog, fresh, retry, cache);
    if (r.status != SolveStatus::MaxIterations) {
      r.message += "; after regularised retry";
      return r;
    }
  }
  return first;
}

}  // namespace

SolveResult ConicSolver::solve(const ConicProgram& prog, const SolverSettings& st) {
  if (!impl_) impl_ = std::make_shared<Impl>();
  return solve_with_retries(prog, st, impl_.get());
}

SolveResult solve(const ConicProgram& prog, const SolverSettings& st) {
  return solve_with_retries(prog, st, nullptr);
}

bool verify_certificate(const ConicProgram& prog, const Eigen::VectorXd& y,
                        double cert_tol) {
  if (y.size() != prog.num_rows()) return false;
  // cone-dual membership per block
  int r = 0;
  for (auto& blk : prog.blocks()) {
    if (blk.cone == Cone::Nonneg) {
      for (int k = 0; k < blk.size; ++k)
        if (y[r + k] < -cert_tol) return false;
    } else if (blk.cone == Cone::SecondOrder) {
      double t = y[r];
      double nrm = y.segment(r + 1, blk.size - 1).norm();
      if (t < nrm - cert_tol) return false;
    }
    r += blk.size;
  }
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(prog.num_vars());
  for (auto& t : prog.triplets()) aty[t.col()] += t.value() * y[t.row()];
  if (aty.lpNorm<Eigen::Infinity>() > cert_tol) return false;
  double by = 0.0;
  for (int i = 0; i < prog.num_rows(); ++i) by += prog.rhs(i) * y[i];
  return by < 0.0;
}

}  // namespace rampc
