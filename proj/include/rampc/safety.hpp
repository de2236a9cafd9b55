#pragma once

#include <string>
#include <vector>

#include "rampc/mjls.hpp"
#include "rampc/polyhedron.hpp"

namespace rampc {

// Output of the robust controlled-invariant set iteration.  iterates holds
// R^(0), ..., R^(K) in order; every entry is robust controlled invariant by
// construction once R^(0) is.  converged means the last two iterates coincide
// within the requested tolerance; otherwise the iteration stopped at max_iter.
struct RciResult {
  std::vector<Polyhedron> iterates;
  bool converged = false;
  int iterations = 0;  // K = iterates.size() - 1
};

// Candidate robust positively invariant polyhedron for the cruise-control
// model under the braking feedback u = c_min * x2:
//   R = { x : 0 <= x2 <= a_min/c_min, x2 <= v_max, x3 >= x2, x1 >= 0 }.
// Requires -1/Ts <= c_min < 0 (c_min the most negative mode parameter) and
// a_min <= 0 <= a_max, otherwise throws std::invalid_argument.
Polyhedron rpi_candidate(const AccParams& params);

// { x : g(x) <= 0 } for the model's soft constraint, as a one-row polyhedron
// over the state space.
Polyhedron soft_constraint_set(const MjlsModel& model);

// Robust pre-set of R:
//   pre(R) = { x : exists u in U with A_w x + B_w u + p_w in R for all w }.
// Built as the stacked (x, u) polyhedron over all modes with the input rows
// appended, then the input coordinates are eliminated and redundant rows
// dropped.
Polyhedron pre_set(const MjlsModel& model, const Polyhedron& R);

// Inner iteration R^(i+1) = pre_set(R^(i)) & X_r & X_c starting from an RCI
// seed R0 (the iterates then grow monotonically and every iterate is again
// RCI).  Stops when consecutive iterates contain each other within tol, or
// after max_iter steps with converged = false.  max_iter = 0 returns {R0}.
RciResult rci_iterate(const MjlsModel& model, const Polyhedron& X_r,
                      const Polyhedron& X_c, const Polyhedron& R0,
                      int max_iter = 50, double tol = 1e-7);

// min x1 over R & { x2 = v_e, x3 = v_t }.  Returns +infinity when the slice
// is empty and -infinity when the headway is unbounded below on it.
double h_min(const Polyhedron& R, double v_e, double v_t);

// Discrete-time responsibility-sensitive safety distance
//   h_rss(v_e, v_t) = [ d_e(v_e) - d_t(v_t) ]_+ .
// The ego bound d_e follows the comparator's worst case: one reaction step at
// the current speed while accelerating at a_max (capped at v_max), then full
// braking at a_min, positions accruing Ts * v_k with the pre-update velocity
// exactly as in the plant model.  The target bound d_t is the travel of the
// sustained worst brake v' = (1 + Ts c_min) v, i.e. d_t = v_t / (-c_min)
// (equal to Ts * v_t at the stopping limit c_min = -1/Ts).  Note d_e(0) > 0:
// a standing ego may still lurch forward during the reaction step, exactly as
// in the continuous-time comparator's reaction-time term.
// Requires v_e, v_t >= 0, -1/Ts <= c_min < 0 and a_min < 0; throws
// std::invalid_argument otherwise.
double rss_distance(const AccParams& params, double v_e, double v_t);

// CSV comparison grid for the safety-distance figure: one row per grid speed
// with the minimal headway of the first iterate, of the last iterate, and the
// safety-distance comparator.  Header "v_e,h_rpi0,h_rci,h_rss"; numbers are
// printed with "%.12g" and infinities as "inf" / "-inf".
std::string h_min_grid_csv(const AccParams& params, const RciResult& rci,
                           const std::vector<double>& v_grid, double v_t);

}  // namespace rampc
