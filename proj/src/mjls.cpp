#include "rampc/mjls.hpp"

#include <stdexcept>

namespace rampc {

MjlsModel build_acc_model(const AccParams& params) {
  if (params.Ts <= 0) throw std::invalid_argument("acc model: Ts must be > 0");
  if (params.c.empty())
    throw std::invalid_argument("acc model: need at least one mode");
  if (params.a_min > 0 || params.a_max < 0)
    throw std::invalid_argument("acc model: need a_min <= 0 <= a_max");
  if (params.v_max <= 0)
    throw std::invalid_argument("acc model: v_max must be > 0");
  if (params.q <= 0 || params.r < 0)
    throw std::invalid_argument("acc model: need q > 0 and r >= 0");
  for (double cw : params.c)
    if (cw < -1.0 / params.Ts)
      throw std::invalid_argument(
          "acc model: mode parameter below -1/Ts (target velocity would "
          "change sign within one step)");

  const double Ts = params.Ts;
  MjlsModel model;
  model.modes.reserve(params.c.size());
  for (double cw : params.c) {
    ModeDynamics md;
    md.A.resize(3, 3);
    md.A << 1, -Ts, Ts,  //
        0, 1, 0,         //
        0, 0, 1;
    md.B.resize(3, 1);
    md.B << 0, Ts, 0;
    md.p = Eigen::VectorXd::Zero(3);
    if (cw >= 0) {
      md.p[2] = Ts * cw;  // constant target acceleration
    } else {
      md.A(2, 2) = 1.0 + Ts * cw;  // exponential braking folded into A
    }
    model.modes.push_back(std::move(md));
  }

  // X_r = { 0 <= x2 <= v_max }
  Eigen::MatrixXd Gx(2, 3);
  Gx << 0, 1, 0,  //
      0, -1, 0;
  Eigen::VectorXd hx(2);
  hx << params.v_max, 0;
  model.state_set = Polyhedron(Gx, hx);

  // U = { a_min <= u <= a_max }
  Eigen::MatrixXd Gu(2, 1);
  Gu << 1, -1;
  Eigen::VectorXd hu(2);
  hu << params.a_max, -params.a_min;
  model.input_set = Polyhedron(Gu, hu);

  // Soft headway constraint g(x) = -x1 <= 0.
  model.soft.coeffs = Eigen::VectorXd::Zero(3);
  model.soft.coeffs[0] = -1.0;
  model.soft.offset = 0.0;
  return model;
}

Eigen::VectorXd step(const MjlsModel& model, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u, int w) {
  if (w < 0 || w >= model.num_modes())
    throw std::out_of_range("step: mode index out of range");
  const ModeDynamics& md = model.modes[w];
  if (x.size() != md.A.cols() || u.size() != md.B.cols())
    throw std::invalid_argument("step: dimension mismatch");
  return md.A * x + md.B * u + md.p;
}

double stage_cost(const AccParams& params, const Eigen::VectorXd& x, double u) {
  double dv = x[1] - params.v_ref;
  return params.q * dv * dv + params.r * u * u;
}

double terminal_cost(const AccParams& params, const Eigen::VectorXd& x) {
  double dv = x[1] - params.v_ref;
  return params.q * dv * dv;
}

}  // namespace rampc
