#include "rampc/safety.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace rampc {

namespace {

// Most negative mode parameter, validated against the braking-feedback
// assumption -1/Ts <= c_min < 0.
double braking_rate(const AccParams& params, const char* who) {
  if (params.c.empty()) {
    throw std::invalid_argument(std::string(who) + ": empty mode set");
  }
  const double c_min = *std::min_element(params.c.begin(), params.c.end());
  if (!(c_min < 0.0) || c_min < -1.0 / params.Ts - 1e-12) {
    throw std::invalid_argument(std::string(who) +
                                ": requires -1/Ts <= c_min < 0");
  }
  return c_min;
}

std::string format_g(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

Polyhedron rpi_candidate(const AccParams& params) {
  const double c_min = braking_rate(params, "rpi_candidate");
  if (params.a_min > 0.0 || params.a_max < 0.0) {
    throw std::invalid_argument("rpi_candidate: requires a_min <= 0 <= a_max");
  }
  Polyhedron R(3);
  Eigen::Vector3d e1(1, 0, 0), e2(0, 1, 0), e3(0, 0, 1);
  R.add_row(e2, params.a_min / c_min);  // x2 <= a_min/c_min
  R.add_row(-e2, 0.0);                  // x2 >= 0
  R.add_row(e2, params.v_max);          // x2 <= v_max
  R.add_row(e2 - e3, 0.0);              // x3 >= x2
  R.add_row(-e1, 0.0);                  // x1 >= 0
  return R;
}

Polyhedron soft_constraint_set(const MjlsModel& model) {
  Polyhedron X(model.nx());
  X.add_row(model.soft.coeffs, -model.soft.offset);
  return X;
}

Polyhedron pre_set(const MjlsModel& model, const Polyhedron& R) {
  const int nx = model.nx();
  const int nu = model.nu();
  if (R.n != nx) {
    throw std::invalid_argument("pre_set: set dimension does not match model");
  }
  Polyhedron stacked(nx + nu);
  for (const ModeDynamics& mode : model.modes) {
    const Eigen::MatrixXd GA = R.G * mode.A;
    const Eigen::MatrixXd GB = R.G * mode.B;
    const Eigen::VectorXd rhs = R.h - R.G * mode.p;
    for (int i = 0; i < R.rows(); ++i) {
      Eigen::VectorXd row(nx + nu);
      row.head(nx) = GA.row(i).transpose();
      row.tail(nu) = GB.row(i).transpose();
      stacked.add_row(row, rhs(i));
    }
  }
  for (int i = 0; i < model.input_set.rows(); ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(nx + nu);
    row.tail(nu) = model.input_set.G.row(i).transpose();
    stacked.add_row(row, model.input_set.h(i));
  }
  std::vector<int> input_coords(nu);
  std::iota(input_coords.begin(), input_coords.end(), nx);
  return project_out(stacked, std::move(input_coords));
}

RciResult rci_iterate(const MjlsModel& model, const Polyhedron& X_r,
                      const Polyhedron& X_c, const Polyhedron& R0,
                      int max_iter, double tol) {
  const int nx = model.nx();
  if (X_r.n != nx || X_c.n != nx || R0.n != nx) {
    throw std::invalid_argument("rci_iterate: dimension mismatch");
  }
  RciResult out;
  out.iterates.push_back(R0);
  for (int i = 0; i < max_iter; ++i) {
    const Polyhedron& prev = out.iterates.back();
    Polyhedron next =
        remove_redundancy(intersect(intersect(pre_set(model, prev), X_r), X_c));
    const bool settled =
        is_subset(next, prev, tol) && is_subset(prev, next, tol);
    out.iterates.push_back(std::move(next));
    if (settled) {
      out.converged = true;
      break;
    }
  }
  out.iterations = static_cast<int>(out.iterates.size()) - 1;
  return out;
}

double h_min(const Polyhedron& R, double v_e, double v_t) {
  if (R.n != 3) {
    throw std::invalid_argument("h_min: expects a set over (h, v_e, v_t)");
  }
  Polyhedron slice = R;
  Eigen::Vector3d e2(0, 1, 0), e3(0, 0, 1);
  slice.add_row(e2, v_e);
  slice.add_row(-e2, -v_e);
  slice.add_row(e3, v_t);
  slice.add_row(-e3, -v_t);
  const LinearMinimum lm = minimize_linear(slice, Eigen::Vector3d(1, 0, 0));
  switch (lm.outcome) {
    case LpOutcome::Empty:
      return std::numeric_limits<double>::infinity();
    case LpOutcome::Unbounded:
      return -std::numeric_limits<double>::infinity();
    case LpOutcome::Optimal:
      break;
  }
  return lm.value;
}

double rss_distance(const AccParams& params, double v_e, double v_t) {
  if (v_e < 0.0 || v_t < 0.0) {
    throw std::invalid_argument("rss_distance: speeds must be nonnegative");
  }
  const double c_min = braking_rate(params, "rss_distance");
  if (!(params.a_min < 0.0)) {
    throw std::invalid_argument("rss_distance: requires a_min < 0");
  }
  const double Ts = params.Ts;
  // Reaction step at the current speed, worst-case throttle during it.
  double d_e = Ts * v_e;
  double v = std::min(params.v_max, v_e + Ts * params.a_max);
  while (v > 0.0) {
    d_e += Ts * v;
    v = std::max(0.0, v + Ts * params.a_min);
  }
  // Sustained worst target brake: geometric travel v_t / (-c_min).
  const double d_t = v_t / (-c_min);
  return std::max(0.0, d_e - d_t);
}

std::string h_min_grid_csv(const AccParams& params, const RciResult& rci,
                           const std::vector<double>& v_grid, double v_t) {
  if (rci.iterates.empty()) {
    throw std::invalid_argument("h_min_grid_csv: no iterates");
  }
  const Polyhedron& first = rci.iterates.front();
  const Polyhedron& last = rci.iterates.back();
  std::string csv = "v_e,h_rpi0,h_rci,h_rss\n";
  for (double v : v_grid) {
    csv += format_g(v);
    csv += ',';
    csv += format_g(h_min(first, v, v_t));
    csv += ',';
    csv += format_g(h_min(last, v, v_t));
    csv += ',';
    csv += format_g(rss_distance(params, v, v_t));
    csv += '\n';
  }
  return csv;
}

}  // namespace rampc
