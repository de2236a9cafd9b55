#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rampc/polyhedron.hpp"

namespace rampc {

// One mode of a Markov jump linear system: x' = A x + B u + p.
struct ModeDynamics {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd p;
};

// Soft constraint g(x) = coeffs'x + offset <= 0 (penalised, not enforced).
struct SoftConstraint {
  Eigen::VectorXd coeffs;
  double offset = 0.0;
  double value(const Eigen::VectorXd& x) const { return coeffs.dot(x) + offset; }
};

struct MjlsModel {
  std::vector<ModeDynamics> modes;
  Polyhedron state_set;  // operating region X_r (hard, state only)
  Polyhedron input_set;  // admissible inputs U
  SoftConstraint soft;   // X_c = { x : g(x) <= 0 }

  int num_modes() const { return static_cast<int>(modes.size()); }
  int nx() const { return static_cast<int>(modes.at(0).A.rows()); }
  int nu() const { return static_cast<int>(modes.at(0).B.cols()); }
};

// Adaptive-cruise-control instantiation.  State x = (h, v_e, v_t): headway,
// ego velocity, target velocity; scalar input u = ego acceleration.  Mode w
// fixes the target's behaviour: constant acceleration c_w >= 0 (m/s^2), or
// exponential braking with rate c_w < 0 (1/s) folded into the A matrix.
struct AccParams {
  double Ts = 0.5;          // sampling period (s)
  std::vector<double> c;    // per-mode target behaviour parameters
  double a_min = -4.0;      // input bounds (m/s^2), a_min <= 0 <= a_max
  double a_max = 5.0;
  double v_max = 40.0;      // ego velocity cap (m/s)
  double v_ref = 30.0;      // cruise reference (m/s)
  double q = 5.0;           // velocity tracking weight, > 0
  double r = 10.0;          // input weight, >= 0
};

// Compiles the per-mode piecewise target-acceleration law into affine mode
// dynamics.  Throws std::invalid_argument when the parameter invariants are
// violated (notably c_w < -1/Ts).
MjlsModel build_acc_model(const AccParams& params);

// x' = A_w x + B_w u + p_w; throws on mode out of range or dimension mismatch.
Eigen::VectorXd step(const MjlsModel& model, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u, int w);

// q (x2 - v_ref)^2 + r u^2 and its input-free terminal counterpart.
double stage_cost(const AccParams& params, const Eigen::VectorXd& x, double u);
double terminal_cost(const AccParams& params, const Eigen::VectorXd& x);

}  // namespace rampc
