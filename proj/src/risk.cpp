#include "rampc/risk.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rampc {
namespace {

constexpr double kSimplexTol = 1e-9;

void check_distribution(const Eigen::VectorXd& p, const char* what) {
  if (p.size() == 0) {
    throw std::invalid_argument(std::string(what) + ": empty distribution");
  }
  if (p.minCoeff() < -kSimplexTol ||
      std::abs(p.sum() - 1.0) > kSimplexTol * static_cast<double>(p.size())) {
    throw std::invalid_argument(std::string(what) +
                                ": vector is not a probability distribution");
  }
}

void check_delta(double delta, const char* what) {
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument(std::string(what) +
                                ": risk level must lie in (0, 1]");
  }
}

// a += s * b, merging term lists (duplicate indices are fine: the program
// builder accumulates coefficients per variable).
void add_scaled(AffineExpr& a, const AffineExpr& b, double s) {
  for (const auto& [idx, coeff] : b.terms) a.add(idx, s * coeff);
  a.constant += s * b.constant;
}

struct RepBuilder {
  int d = 0;
  int n_aux = 0;
  std::vector<Eigen::VectorXd> e_rows;
  std::vector<Eigen::VectorXd> f_rows;
  std::vector<double> rhs;
  std::vector<Cone> cones;

  explicit RepBuilder(int dim) : d(dim) {}

  void row(Cone cone, const Eigen::VectorXd& e, const Eigen::VectorXd& f,
           double b) {
    e_rows.push_back(e);
    f_rows.push_back(f);
    rhs.push_back(b);
    cones.push_back(cone);
  }
  void row(Cone cone, const Eigen::VectorXd& e, double b) {
    row(cone, e, Eigen::VectorXd::Zero(n_aux), b);
  }

  // mu lies in the probability simplex.
  void simplex_rows() {
    row(Cone::Zero, Eigen::VectorXd::Ones(d), 1.0);
    for (int i = 0; i < d; ++i) {
      row(Cone::Nonneg, -Eigen::VectorXd::Unit(d, i), 0.0);
    }
  }

  ConicRepresentation build() const {
    ConicRepresentation rep;
    const int m = static_cast<int>(rhs.size());
    rep.E.setZero(m, d);
    rep.F.setZero(m, n_aux);
    rep.b.resize(m);
    for (int k = 0; k < m; ++k) {
      rep.E.row(k) = e_rows[k];
      if (f_rows[k].size() == n_aux) {
        rep.F.row(k) = f_rows[k];
      } else {
        rep.F.row(k).head(f_rows[k].size()) = f_rows[k];
      }
      rep.b[k] = rhs[k];
    }
    rep.cones = cones;
    return rep;
  }
};

// Rows constraining a block of `d` variables (selected by `sel` into the
// auxiliary columns) to the ambiguity set, with an l1 lift when needed.
// `sel(k)` gives the auxiliary column of component k of the distribution.
void ambiguity_rows_aux(RepBuilder& bld, const AmbiguitySet& A,
                        const std::function<int(int)>& sel) {
  const int d = A.dim();
  const int off = bld.n_aux;
  auto unit_aux = [&](int col, double v) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(bld.n_aux);
    f[col] = v;
    return f;
  };
  const Eigen::VectorXd zero_e = Eigen::VectorXd::Zero(d);

  if (A.kind == AmbiguityKind::Singleton) {
    for (int i = 0; i < d; ++i) {
      bld.row(Cone::Zero, zero_e, unit_aux(sel(i), 1.0), A.center[i]);
    }
    return;
  }

  // nu in the simplex.
  {
    Eigen::VectorXd ones = Eigen::VectorXd::Zero(bld.n_aux);
    for (int i = 0; i < d; ++i) ones[sel(i)] = 1.0;
    bld.row(Cone::Zero, zero_e, ones, 1.0);
    for (int i = 0; i < d; ++i) {
      bld.row(Cone::Nonneg, zero_e, unit_aux(sel(i), -1.0), 0.0);
    }
  }
  if (A.kind == AmbiguityKind::FullSimplex) return;

  // l1 lift: s_i >= |nu_i - phat_i|, sum s <= r.
  const int s0 = bld.n_aux;
  bld.n_aux += d;
  (void)off;
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(bld.n_aux);
    f[sel(i)] = 1.0;
    f[s0 + i] = -1.0;
    bld.row(Cone::Nonneg, zero_e, f, A.center[i]);
    f[sel(i)] = -1.0;
    bld.row(Cone::Nonneg, zero_e, f, -A.center[i]);
  }
  Eigen::VectorXd sum_s = Eigen::VectorXd::Zero(bld.n_aux);
  sum_s.segment(s0, d).setOnes();
  bld.row(Cone::Nonneg, zero_e, sum_s, A.radius);
}

}  // namespace

RiskSpec RiskSpec::avar(Eigen::VectorXd p, double delta) {
  check_distribution(p, "RiskSpec::avar");
  check_delta(delta, "RiskSpec::avar");
  RiskSpec spec;
  spec.kind = Kind::AVaR;
  spec.set = AmbiguitySet::singleton(std::move(p));
  spec.delta = delta;
  return spec;
}

RiskSpec RiskSpec::robust_avar(AmbiguitySet A, double delta) {
  check_delta(delta, "RiskSpec::robust_avar");
  RiskSpec spec;
  spec.kind = Kind::RobustAVaR;
  spec.set = std::move(A);
  spec.delta = delta;
  return spec;
}

RiskSpec RiskSpec::max_expectation(AmbiguitySet A) {
  RiskSpec spec;
  spec.kind = Kind::MaxExpectation;
  spec.set = std::move(A);
  spec.delta = 1.0;
  return spec;
}

ConicRepresentation conic_representation(const RiskSpec& spec) {
  const int d = spec.dim();
  RepBuilder bld(d);

  switch (spec.kind) {
    case RiskSpec::Kind::AVaR: {
      bld.simplex_rows();
      for (int i = 0; i < d; ++i) {
        bld.row(Cone::Nonneg, Eigen::VectorXd::Unit(d, i),
                spec.set.center[i] / spec.delta);
      }
      break;
    }
    case RiskSpec::Kind::MaxExpectation: {
      if (spec.set.kind == AmbiguityKind::Singleton) {
        for (int i = 0; i < d; ++i) {
          bld.row(Cone::Zero, Eigen::VectorXd::Unit(d, i),
                  spec.set.center[i]);
        }
      } else {
        bld.simplex_rows();
        if (spec.set.kind == AmbiguityKind::L1Ball) {
          // Lift onto mu itself: reuse the auxiliary-block helper with a
          // pass-through selection is not possible (mu is not auxiliary), so
          // write the rows directly: s_i >= |mu_i - phat_i|, sum s <= r.
          const int s0 = bld.n_aux;
          bld.n_aux += d;
          for (int i = 0; i < d; ++i) {
            Eigen::VectorXd f = Eigen::VectorXd::Zero(bld.n_aux);
            f[s0 + i] = -1.0;
            bld.row(Cone::Nonneg, Eigen::VectorXd::Unit(d, i), f,
                    spec.set.center[i]);
            bld.row(Cone::Nonneg, -Eigen::VectorXd::Unit(d, i), f,
                    -spec.set.center[i]);
          }
          Eigen::VectorXd sum_s = Eigen::VectorXd::Zero(bld.n_aux);
          sum_s.segment(s0, d).setOnes();
          bld.row(Cone::Nonneg, Eigen::VectorXd::Zero(d), sum_s,
                  spec.set.radius);
        }
      }
      break;
    }
    case RiskSpec::Kind::RobustAVaR: {
      if (spec.set.kind == AmbiguityKind::Singleton) {
        // Degenerates to AVaR at the singleton's distribution.
        return conic_representation(
            RiskSpec::avar(spec.set.center, spec.delta));
      }
      bld.simplex_rows();  // pi in simplex
      const int nu0 = bld.n_aux;
      bld.n_aux += d;
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(bld.n_aux);
        f[nu0 + i] = -1.0;
        bld.row(Cone::Nonneg, spec.delta * Eigen::VectorXd::Unit(d, i), f,
                0.0);  // delta * pi_i - nu_i <= 0
      }
      ambiguity_rows_aux(bld, spec.set, [&](int i) { return nu0 + i; });
      break;
    }
  }
  return bld.build();
}

double risk_value(const RiskSpec& spec, const Eigen::VectorXd& z) {
  const int d = spec.dim();
  if (z.size() != d) {
    throw std::invalid_argument("risk_value: outcome vector has dimension " +
                                std::to_string(z.size()) + ", expected " +
                                std::to_string(d));
  }
  const ConicRepresentation rep = conic_representation(spec);
  const int n_aux = static_cast<int>(rep.F.cols());

  ConicProgram prog;
  prog.add_variables(d + n_aux);
  for (int j = 0; j < d; ++j) prog.set_objective(j, -z[j]);  // maximise z'mu

  std::vector<std::pair<int, double>> coeffs;
  for (int k = 0; k < rep.E.rows(); ++k) {
    coeffs.clear();
    for (int j = 0; j < d; ++j) {
      if (rep.E(k, j) != 0.0) coeffs.emplace_back(j, rep.E(k, j));
    }
    for (int j = 0; j < n_aux; ++j) {
      if (rep.F(k, j) != 0.0) coeffs.emplace_back(d + j, rep.F(k, j));
    }
    prog.add_row(rep.cones[k], coeffs, rep.b[k]);
  }

  SolverSettings st;
  st.feas_tol = 1e-10;
  st.gap_tol = 1e-10;
  const SolveResult res = solve(prog, st);
  if (res.status != SolveStatus::Optimal) {
    throw std::runtime_error("risk_value: evaluation LP did not solve (" +
                             res.message + ")");
  }
  return -res.objective;
}

double avar_value(const Eigen::VectorXd& z, const Eigen::VectorXd& p,
                  double delta) {
  return risk_value(RiskSpec::avar(p, delta), z);
}

double robust_avar_value(const Eigen::VectorXd& z, const AmbiguitySet& A,
                         double delta) {
  return risk_value(RiskSpec::robust_avar(A, delta), z);
}

void append_epigraph_dual(ConicProgram& prog, const RiskSpec& spec,
                          const std::vector<AffineExpr>& z,
                          const AffineExpr& t) {
  const int d = spec.dim();
  if (static_cast<int>(z.size()) != d) {
    throw std::invalid_argument(
        "append_epigraph_dual: outcome list has size " +
        std::to_string(z.size()) + ", expected " + std::to_string(d));
  }

  // rho[z] = max z_i: z_i <= t for every i.
  auto emit_max = [&]() {
    for (int i = 0; i < d; ++i) {
      AffineExpr row = z[i];
      add_scaled(row, t, -1.0);
      prog.add_row(Cone::Nonneg, row);
    }
  };
  // rho[z] = p'z: a single row.
  auto emit_expectation = [&](const Eigen::VectorXd& p) {
    AffineExpr row;
    for (int i = 0; i < d; ++i) add_scaled(row, z[i], p[i]);
    add_scaled(row, t, -1.0);
    prog.add_row(Cone::Nonneg, row);
  };
  // AVaR epigraph: lambda free, eta >= 0,
  //   z_i - lambda - eta_i <= 0,   lambda + p'eta / delta <= t.
  auto emit_avar = [&](const Eigen::VectorXd& p, double delta) {
    const int lam = prog.add_variables(1);
    const int eta = prog.add_variables(d);
    for (int i = 0; i < d; ++i) {
      AffineExpr row = z[i];
      row.add(lam, -1.0);
      row.add(eta + i, -1.0);
      prog.add_row(Cone::Nonneg, row);
      prog.add_row(Cone::Nonneg, AffineExpr::variable(eta + i, -1.0));
    }
    AffineExpr bound = AffineExpr::variable(lam);
    for (int i = 0; i < d; ++i) bound.add(eta + i, p[i] / delta);
    add_scaled(bound, t, -1.0);
    prog.add_row(Cone::Nonneg, bound);
  };
  // Adds theta >= 0 and a in [0, theta * 1]; returns (theta, a0).
  auto add_l1_block = [&]() {
    const int theta = prog.add_variables(1);
    const int a0 = prog.add_variables(d);
    prog.add_row(Cone::Nonneg, AffineExpr::variable(theta, -1.0));
    for (int i = 0; i < d; ++i) {
      prog.add_row(Cone::Nonneg, AffineExpr::variable(a0 + i, -1.0));
      AffineExpr cap = AffineExpr::variable(a0 + i);
      cap.add(theta, -1.0);
      prog.add_row(Cone::Nonneg, cap);
    }
    return std::make_pair(theta, a0);
  };

  switch (spec.kind) {
    case RiskSpec::Kind::AVaR:
      emit_avar(spec.set.center, spec.delta);
      return;

    case RiskSpec::Kind::MaxExpectation: {
      switch (spec.set.kind) {
        case AmbiguityKind::Singleton:
          emit_expectation(spec.set.center);
          return;
        case AmbiguityKind::FullSimplex:
          emit_max();
          return;
        case AmbiguityKind::L1Ball: {
          // lambda free, theta >= 0, 0 <= a <= theta * 1,
          //   z_i - lambda - 2 a_i + theta <= 0,
          //   lambda + 2 phat'a + (r - 1) theta <= t.
          const int lam = prog.add_variables(1);
          const auto [theta, a0] = add_l1_block();
          for (int i = 0; i < d; ++i) {
            AffineExpr row = z[i];
            row.add(lam, -1.0);
            row.add(a0 + i, -2.0);
            row.add(theta, 1.0);
            prog.add_row(Cone::Nonneg, row);
          }
          AffineExpr bound = AffineExpr::variable(lam);
          for (int i = 0; i < d; ++i) bound.add(a0 + i, 2.0 * spec.set.center[i]);
          bound.add(theta, spec.set.radius - 1.0);
          add_scaled(bound, t, -1.0);
          prog.add_row(Cone::Nonneg, bound);
          return;
        }
      }
      return;
    }

    case RiskSpec::Kind::RobustAVaR: {
      switch (spec.set.kind) {
        case AmbiguityKind::Singleton:
          emit_avar(spec.set.center, spec.delta);
          return;
        case AmbiguityKind::FullSimplex:
          emit_max();
          return;
        case AmbiguityKind::L1Ball: {
          // lambda1, lambda2 free, eta >= 0, theta >= 0, 0 <= a <= theta * 1,
          //   z_i - lambda1 - eta_i <= 0,
          //   -lambda2 - 2 a_i + theta + eta_i / delta <= 0,
          //   lambda1 + lambda2 + 2 phat'a + (r - 1) theta <= t.
          const int lam1 = prog.add_variables(1);
          const int lam2 = prog.add_variables(1);
          const int eta = prog.add_variables(d);
          const auto [theta, a0] = add_l1_block();
          for (int i = 0; i < d; ++i) {
            AffineExpr row = z[i];
            row.add(lam1, -1.0);
            row.add(eta + i, -1.0);
            prog.add_row(Cone::Nonneg, row);
            prog.add_row(Cone::Nonneg, AffineExpr::variable(eta + i, -1.0));

            AffineExpr inner = AffineExpr::variable(lam2, -1.0);
            inner.add(a0 + i, -2.0);
            inner.add(theta, 1.0);
            inner.add(eta + i, 1.0 / spec.delta);
            prog.add_row(Cone::Nonneg, inner);
          }
          AffineExpr bound = AffineExpr::variable(lam1);
          bound.add(lam2, 1.0);
          for (int i = 0; i < d; ++i) bound.add(a0 + i, 2.0 * spec.set.center[i]);
          bound.add(theta, spec.set.radius - 1.0);
          add_scaled(bound, t, -1.0);
          prog.add_row(Cone::Nonneg, bound);
          return;
        }
      }
      return;
    }
  }
}

}  // namespace rampc
