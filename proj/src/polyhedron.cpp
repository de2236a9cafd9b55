#include "rampc/polyhedron.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "rampc/conic.hpp"

namespace rampc {

namespace {
constexpr double kZeroCoeff = 1e-12;  // below this a coefficient is "absent"
}

Polyhedron::Polyhedron(Eigen::MatrixXd G_, Eigen::VectorXd h_)
    : G(std::move(G_)), h(std::move(h_)), n(static_cast<int>(G.cols())) {
  if (G.rows() != h.size())
    throw std::invalid_argument("polyhedron: G rows and h length differ");
}

void Polyhedron::add_row(const Eigen::VectorXd& g, double rhs) {
  if (g.size() != n) throw std::invalid_argument("polyhedron: row dimension");
  G.conservativeResize(G.rows() + 1, n);
  G.row(G.rows() - 1) = g.transpose();
  h.conservativeResize(h.size() + 1);
  h[h.size() - 1] = rhs;
}

nlohmann::json Polyhedron::to_json() const {
  nlohmann::json jg = nlohmann::json::array();
  for (int i = 0; i < rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < n; ++j) row.push_back(G(i, j));
    jg.push_back(std::move(row));
  }
  nlohmann::json jh = nlohmann::json::array();
  for (int i = 0; i < rows(); ++i) jh.push_back(h[i]);
  return {{"G", std::move(jg)}, {"h", std::move(jh)}};
}

Polyhedron Polyhedron::from_json(const nlohmann::json& j) {
  const auto& jg = j.at("G");
  const auto& jh = j.at("h");
  int m = static_cast<int>(jg.size());
  if (static_cast<int>(jh.size()) != m)
    throw std::invalid_argument("polyhedron json: G rows and h length differ");
  int n = m > 0 ? static_cast<int>(jg.at(0).size()) : 0;
  Eigen::MatrixXd G(m, n);
  Eigen::VectorXd h(m);
  for (int i = 0; i < m; ++i) {
    const auto& row = jg.at(i);
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("polyhedron json: ragged G");
    for (int k = 0; k < n; ++k) G(i, k) = row.at(k).get<double>();
    h[i] = jh.at(i).get<double>();
  }
  Polyhedron P(std::move(G), std::move(h));
  return P;
}

bool contains(const Polyhedron& P, const Eigen::VectorXd& x, double tol) {
  if (x.size() != P.n)
    throw std::invalid_argument("contains: point dimension mismatch");
  if (P.rows() == 0) return true;
  return ((P.G * x - P.h).array() <= tol).all();
}

Polyhedron intersect(const Polyhedron& P, const Polyhedron& Q) {
  if (P.n != Q.n)
    throw std::invalid_argument("intersect: ambient dimension mismatch");
  Polyhedron R(P.n);
  R.G.resize(P.rows() + Q.rows(), P.n);
  R.h.resize(P.rows() + Q.rows());
  R.G << P.G, Q.G;
  R.h << P.h, Q.h;
  return R;
}

Polyhedron eliminate_variable(const Polyhedron& P, int j) {
  if (j < 0 || j >= P.n)
    throw std::invalid_argument("eliminate_variable: index out of range");
  std::vector<int> zero, pos, neg;
  for (int i = 0; i < P.rows(); ++i) {
    double a = P.G(i, j);
    if (std::abs(a) < kZeroCoeff)
      zero.push_back(i);
    else if (a > 0)
      pos.push_back(i);
    else
      neg.push_back(i);
  }
  int m_out = static_cast<int>(zero.size() + pos.size() * neg.size());
  Eigen::MatrixXd G(m_out, P.n - 1);
  Eigen::VectorXd h(m_out);
  auto drop_col = [&](const Eigen::RowVectorXd& row) {
    Eigen::RowVectorXd out(P.n - 1);
    out.head(j) = row.head(j);
    out.tail(P.n - 1 - j) = row.tail(P.n - 1 - j);
    return out;
  };
  int k = 0;
  for (int i : zero) {
    G.row(k) = drop_col(P.G.row(i));
    h[k] = P.h[i];
    ++k;
  }
  // Each "upper bound" row (positive coefficient) pairs with each "lower
  // bound" row; normalising both to unit coefficient keeps scales comparable.
  for (int iu : pos) {
    Eigen::RowVectorXd ru = P.G.row(iu) / P.G(iu, j);
    double hu = P.h[iu] / P.G(iu, j);
    for (int il : neg) {
      Eigen::RowVectorXd rl = P.G.row(il) / (-P.G(il, j));
      double hl = P.h[il] / (-P.G(il, j));
      G.row(k) = drop_col(ru + rl);
      h[k] = hu + hl;
      ++k;
    }
  }
  Polyhedron R(P.n - 1);
  R.G = std::move(G);
  R.h = std::move(h);
  return R;
}

LinearMinimum minimize_linear(const Polyhedron& P, const Eigen::VectorXd& c) {
  if (c.size() != P.n)
    throw std::invalid_argument("minimize_linear: objective dimension");
  ConicProgram prog(P.n);
  for (int j = 0; j < P.n; ++j) prog.set_objective(j, c[j]);
  std::vector<std::pair<int, double>> coeffs;
  for (int i = 0; i < P.rows(); ++i) {
    coeffs.clear();
    for (int j = 0; j < P.n; ++j)
      if (P.G(i, j) != 0.0) coeffs.emplace_back(j, P.G(i, j));
    prog.add_row(Cone::Nonneg, coeffs, P.h[i]);
  }
  // Downstream comparisons (row dominance, containment) work at 1e-9
  // tolerances, so these tiny LPs are solved tighter than the solver default.
  SolverSettings st;
  st.feas_tol = 1e-10;
  st.gap_tol = 1e-10;
  SolveResult r = solve(prog, st);
  LinearMinimum out;
  switch (r.status) {
    case SolveStatus::Optimal:
      out.outcome = LpOutcome::Optimal;
      out.value = r.objective;
      out.argmin = r.x;
      break;
    case SolveStatus::PrimalInfeasible:
      out.outcome = LpOutcome::Empty;
      break;
    case SolveStatus::DualInfeasible:
      out.outcome = LpOutcome::Unbounded;
      break;
    default:
      throw std::runtime_error("minimize_linear: LP solver failed: " +
                               r.message);
  }
  return out;
}

bool is_empty(const Polyhedron& P) {
  if (P.rows() == 0) return false;
  return minimize_linear(P, Eigen::VectorXd::Zero(P.n)).outcome ==
         LpOutcome::Empty;
}

Polyhedron remove_redundancy(const Polyhedron& P, double tol) {
  if (tol <= 0) throw std::invalid_argument("remove_redundancy: tol must be > 0");
  if (is_empty(P)) {
    Polyhedron empty(P.n);
    empty.add_row(Eigen::VectorXd::Zero(P.n), -1.0);
    return empty;
  }
  const int m = P.rows();
  std::vector<bool> alive(m, true);

  // Collapse repeated facet directions first.  Fourier-Motzkin output repeats
  // the same direction many times; the duplicates both waste LPs below and
  // make those LPs badly degenerate.  Directions are compared on unit
  // normals, where only the smallest right-hand side matters.
  std::vector<Eigen::VectorXd> unit(m);
  std::vector<double> level(m);
  for (int i = 0; i < m; ++i) {
    const double s = P.G.row(i).norm();
    if (s < 1e-14) {
      // 0'x <= h with the set known nonempty: trivially true.
      alive[i] = false;
      continue;
    }
    unit[i] = P.G.row(i).transpose() / s;
    level[i] = P.h[i] / s;
  }
  for (int i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    for (int j = i + 1; j < m; ++j) {
      if (!alive[j]) continue;
      if ((unit[i] - unit[j]).lpNorm<Eigen::Infinity>() > 1e-12) continue;
      if (level[j] < level[i]) {
        alive[i] = false;
        break;
      }
      alive[j] = false;
    }
  }

  for (int i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    // Maximise row i's left-hand side subject to the other surviving rows.
    // Capping the objective row at h_i + 1 rules out unboundedness without
    // changing the redundancy verdict (tol << 1).
    Polyhedron rest(P.n);
    int m_rest = 0;
    for (int r = 0; r < P.rows(); ++r)
      if (alive[r] && r != i) ++m_rest;
    rest.G.resize(m_rest + 1, P.n);
    rest.h.resize(m_rest + 1);
    int k = 0;
    for (int r = 0; r < P.rows(); ++r) {
      if (!alive[r] || r == i) continue;
      rest.G.row(k) = P.G.row(r);
      rest.h[k] = P.h[r];
      ++k;
    }
    rest.G.row(k) = P.G.row(i);
    rest.h[k] = P.h[i] + 1.0;
    try {
      LinearMinimum lm = minimize_linear(rest, -P.G.row(i).transpose());
      if (lm.outcome == LpOutcome::Optimal && -lm.value <= P.h[i] + tol)
        alive[i] = false;
    } catch (const std::runtime_error&) {
      // Solver breakdown on a degenerate instance: keeping the row is always
      // sound (the represented set is unchanged, one facet may be redundant).
    }
  }
  Polyhedron out(P.n);
  int m_out = static_cast<int>(std::count(alive.begin(), alive.end(), true));
  out.G.resize(m_out, P.n);
  out.h.resize(m_out);
  int k = 0;
  for (int r = 0; r < P.rows(); ++r) {
    if (!alive[r]) continue;
    out.G.row(k) = P.G.row(r);
    out.h[k] = P.h[r];
    ++k;
  }
  return out;
}

bool is_subset(const Polyhedron& P, const Polyhedron& Q, double tol) {
  if (P.n != Q.n)
    throw std::invalid_argument("is_subset: ambient dimension mismatch");
  for (int i = 0; i < Q.rows(); ++i) {
    LinearMinimum lm = minimize_linear(P, -Q.G.row(i).transpose());
    if (lm.outcome == LpOutcome::Empty) return true;  // empty set: subset of all
    if (lm.outcome == LpOutcome::Unbounded) return false;
    if (-lm.value > Q.h[i] + tol) return false;
  }
  return true;
}

Polyhedron project_out(const Polyhedron& P, std::vector<int> coords,
                       double tol) {
  std::sort(coords.begin(), coords.end(), std::greater<int>());
  Polyhedron R = P;
  for (int j : coords) {
    R = eliminate_variable(R, j);
    R = remove_redundancy(R, tol);
  }
  return R;
}

}  // namespace rampc
