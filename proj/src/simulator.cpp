#include "rampc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace rampc {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void validate(const ExperimentConfig& c) {
  const int d = static_cast<int>(c.P_true.rows());
  if (d < 1 || c.P_true.cols() != d) {
    throw std::invalid_argument("experiment: P_true must be square");
  }
  for (int j = 0; j < d; ++j) {
    if (c.P_true.row(j).minCoeff() < -1e-12) {
      throw std::invalid_argument("experiment: negative transition entry");
    }
    if (std::abs(c.P_true.row(j).sum() - 1.0) > 1e-9) {
      throw std::invalid_argument("experiment: transition row must sum to 1");
    }
  }
  if (static_cast<int>(c.params.c.size()) != d) {
    throw std::invalid_argument(
        "experiment: mode count of params and P_true differ");
  }
  if (c.x0.size() != 3) {
    throw std::invalid_argument("experiment: x0 must have dimension 3");
  }
  if (c.w0 < 0 || c.w0 >= d) {
    throw std::invalid_argument("experiment: w0 out of range");
  }
  if (c.N < 1) throw std::invalid_argument("experiment: N must be >= 1");
  if (c.T < 1) throw std::invalid_argument("experiment: T must be >= 1");
  if (c.realizations < 1) {
    throw std::invalid_argument("experiment: realizations must be >= 1");
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    throw std::invalid_argument("experiment: alpha must lie in (0, 1)");
  }
  if (!(c.delta > 0.0 && c.delta <= 1.0)) {
    throw std::invalid_argument("experiment: delta must lie in (0, 1]");
  }
  if (c.offline_sample_size < 0) {
    throw std::invalid_argument("experiment: offline sample size < 0");
  }
  if (c.terminal_set.n != 3) {
    throw std::invalid_argument("experiment: terminal set dimension");
  }
  if (c.forced_mode) {
    if (c.forced_mode->mode < 0 || c.forced_mode->mode >= d) {
      throw std::invalid_argument("experiment: forced mode out of range");
    }
    if (c.forced_mode->step < 1) {
      throw std::invalid_argument(
          "experiment: forced step must be >= 1 (w_0 is given)");
    }
  }
}

// Ambiguity row the controller would adopt for mode j given the estimate.
AmbiguitySet row_candidate(const ExperimentConfig& config,
                           const TransitionEstimate& est, int j) {
  switch (config.controller) {
    case ControllerKind::Stochastic:
      return AmbiguitySet::singleton(est.p_hat.row(j).transpose());
    case ControllerKind::RiskAverse:
      return AmbiguitySet::l1_ball(est.p_hat.row(j).transpose(),
                                   radius(config.alpha, est.d, est.n(j)));
    case ControllerKind::Robust:
      return AmbiguitySet::full_simplex(est.d);
  }
  throw std::logic_error("row_candidate: unknown controller");
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const char* status_name(OcpStatus s) {
  switch (s) {
    case OcpStatus::Optimal:
      return "optimal";
    case OcpStatus::Infeasible:
      return "infeasible";
    case OcpStatus::NumericalTrouble:
      return "numerical_trouble";
  }
  return "unknown";
}

// Admissible input keeping every successor of x inside `target`, whichever
// mode realizes.  For a state inside a robust controlled invariant set such
// an input exists by the set's defining property, which makes this a sound
// recovery action once the previous policy's tree is exhausted.  With a
// scalar input every facet of `target` under every mode is one affine
// condition on u, so the admissible set is an interval; the returned value is
// the admissible input closest to zero (deterministic, mildest action).
std::optional<double> invariant_input(const MjlsModel& model,
                                      const Polyhedron& target,
                                      const Eigen::VectorXd& x) {
  if (model.nu() != 1 || target.n != model.nx()) return std::nullopt;
  const double kInf = std::numeric_limits<double>::infinity();
  // Input bounds are hard (actuator limits); the target-set conditions carry
  // a slack sized to the accuracy of the solves that certify membership,
  // since the state reaching this rule sits on the set boundary only up to
  // the reduced-accuracy feasibility tolerance of the last accepted solve.
  double ulo = -kInf, uhi = kInf;   // from the input set, exact
  double tlo = -kInf, thi = kInf;   // from the target-set conditions
  bool ok = true;
  auto tighten = [](double coeff, double bound, double& lo, double& hi) {
    if (coeff > 0) {
      hi = std::min(hi, bound / coeff);
    } else {
      lo = std::max(lo, bound / coeff);
    }
  };
  for (int i = 0; i < model.input_set.rows(); ++i) {
    const double coeff = model.input_set.G(i, 0);
    if (std::abs(coeff) > 1e-12) {
      tighten(coeff, model.input_set.h(i), ulo, uhi);
    }
  }
  for (const ModeDynamics& m : model.modes) {
    const Eigen::VectorXd slack = target.h - target.G * (m.A * x + m.p);
    const Eigen::VectorXd gain = target.G * m.B;
    for (int i = 0; i < target.rows(); ++i) {
      if (std::abs(gain(i)) <= 1e-12) {
        if (slack(i) < -1e-4) ok = false;  // condition on x alone
      } else {
        tighten(gain(i), slack(i), tlo, thi);
      }
    }
  }
  const double lo = std::max(ulo, tlo);
  const double hi = std::min(uhi, thi);
  if (!ok || lo > hi + 1e-3) return std::nullopt;
  double u = lo > hi ? 0.5 * (lo + hi) : std::clamp(0.0, lo, hi);
  return std::clamp(u, ulo, uhi);
}

// Linear interpolation between order statistics of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const int n = static_cast<int>(sorted.size());
  if (n == 1) return sorted[0];
  const double pos = q * (n - 1);
  const int lo = static_cast<int>(std::floor(pos));
  const int hi = std::min(lo + 1, n - 1);
  const double frac = pos - lo;
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::uint64_t realization_seed(std::uint64_t master_seed, int index) {
  return splitmix64(master_seed +
                    0x9E3779B97F4A7C15ULL *
                        static_cast<std::uint64_t>(index + 1));
}

int forced_mode_schedule(int t, int base_draw,
                         const ExperimentConfig& config) {
  if (config.forced_mode && t == config.forced_mode->step) {
    return config.forced_mode->mode;
  }
  return base_draw;
}

RealizationResult run_learning_mpc(const ExperimentConfig& config,
                                   std::uint64_t seed) {
  validate(config);
  const int d = static_cast<int>(config.P_true.rows());
  const MjlsModel model = build_acc_model(config.params);

  // Separate streams so the closed-loop mode realization depends only on the
  // seed, never on the controller or the offline sample size.
  std::mt19937_64 rng_offline(splitmix64(seed ^ 0xA076D05FFD4C4A4DULL));
  std::mt19937_64 rng_online(splitmix64(seed ^ 0x3C79AC492BA7B653ULL));

  // Offline phase: one chain trajectory of the configured length.
  TransitionEstimate est = TransitionEstimate::empty(d);
  {
    int w = config.w0;
    for (long k = 0; k < config.offline_sample_size; ++k) {
      const int next = sample_next(config.P_true, w, rng_offline);
      est = record_transition(est, w, next);
      w = next;
    }
  }
  std::vector<AmbiguitySet> ambiguity(d);
  for (int j = 0; j < d; ++j) ambiguity[j] = row_candidate(config, est, j);

  OcpSpec spec;
  spec.model = model;
  spec.params = config.params;
  spec.N = config.N;
  spec.delta = config.delta;
  spec.terminal_set = config.terminal_set;
  spec.branching = config.controller == ControllerKind::Stochastic
                       ? Branching::Support
                       : Branching::Full;

  RealizationResult res;
  res.seed = seed;
  Eigen::VectorXd x = config.x0;
  int w = config.w0;
  res.x.push_back(x);
  res.w.push_back(w);

  // Tail of the most recent solution, consumed on solver breakdowns: the node
  // whose planned input was applied last, advanced along the realized modes.
  NodePolicy tail;
  int tail_node = -1;

  // Breakdown episodes are persistent: once the loop rides the constraint
  // boundary the instances stay degenerate for many steps, and full-effort
  // attempts (iteration cap plus regularised retries) are wasted work at each
  // of them.  While an episode lasts, attempt at reduced effort and return to
  // full effort on the first success.  Only for controllers whose ambiguity
  // sets never grow: there an applicable tail is itself a feasibility
  // certificate, so cheaper attempts cannot mask a certifiably infeasible
  // problem.
  const SolverSettings full_effort;
  SolverSettings episode_effort;
  episode_effort.max_iter = 50;
  episode_effort.reg_retries = 0;
  const bool allow_cheap_attempts =
      config.controller != ControllerKind::Stochastic;
  bool in_episode = false;

  // Actuator saturation for the applied input.  Planned inputs satisfy the
  // input set only to solver tolerance; the physical bound is exact.
  double u_floor = -std::numeric_limits<double>::infinity();
  double u_ceil = std::numeric_limits<double>::infinity();
  for (int i = 0; i < model.input_set.rows(); ++i) {
    const double coeff = model.input_set.G(i, 0);
    if (coeff > 1e-12) {
      u_ceil = std::min(u_ceil, model.input_set.h(i) / coeff);
    } else if (coeff < -1e-12) {
      u_floor = std::max(u_floor, model.input_set.h(i) / coeff);
    }
  }

  for (int t = 0; t < config.T; ++t) {
    spec.mode_ambiguity = ambiguity;
    res.row_ambiguity_used.push_back(ambiguity[w]);
    const OcpSolution sol =
        solve_ocp(spec, x, w,
                  in_episode && allow_cheap_attempts ? episode_effort
                                                     : full_effort);
    res.solver_diagnostics.push_back(sol.status);
    if (sol.status == OcpStatus::Infeasible) {
      res.infeasible_at = t;
      break;
    }
    double u = 0.0;
    if (sol.status == OcpStatus::Optimal) {
      u = extract_control(sol.policy)(0);
      tail = sol.policy;
      tail_node = 0;
      in_episode = false;
    } else {
      // Solver breakdown: follow the previous plan one node further if it
      // covers the realized mode and we are exactly on its trajectory
      // (states are re-propagated through the same dynamics, so agreement is
      // bitwise whenever the plan was followed).
      std::optional<double> rescue;
      if (tail_node >= 0 && !tail.tree.is_leaf(tail_node)) {
        for (int c : tail.tree.nodes[tail_node].children) {
          if (tail.tree.nodes[c].mode == w && !tail.tree.is_leaf(c) &&
              (x - tail.x.row(c).transpose()).lpNorm<Eigen::Infinity>() <=
                  1e-5) {
            rescue = tail.u(c, 0);
            tail_node = c;
            break;
          }
        }
      }
      if (!rescue) {
        rescue = invariant_input(model, config.terminal_set, x);
        tail_node = -1;
      }
      if (!rescue) {
        res.numerical_trouble_at = t;
        break;
      }
      u = *rescue;
      res.fallback_at.push_back(t);
      in_episode = true;
    }
    u = std::clamp(u, u_floor, u_ceil);
    res.closed_loop_cost += stage_cost(config.params, x, u);
    res.u.push_back(u);

    const int draw = sample_next(config.P_true, w, rng_online);
    const int w_next = forced_mode_schedule(t + 1, draw, config);
    Eigen::VectorXd u_vec(1);
    u_vec << u;
    x = step(model, x, u_vec, w_next);

    if (config.online_learning) {
      est = record_transition(est, w, w_next);
      if (config.controller == ControllerKind::Stochastic) {
        // Moving singletons can never nest; kept un-guarded by design.
        ambiguity[w] = row_candidate(config, est, w);
      } else if (config.controller == ControllerKind::RiskAverse) {
        const AmbiguitySet candidate = row_candidate(config, est, w);
        if (is_nested(candidate, ambiguity[w])) ambiguity[w] = candidate;
      }
    }
    w = w_next;
    res.x.push_back(x);
    res.w.push_back(w);
  }
  return res;
}

BatchResult run_batch(const ExperimentConfig& config) {
  validate(config);
  BatchResult batch;
  batch.config = config;
  batch.realizations.reserve(config.realizations);
  for (int i = 0; i < config.realizations; ++i) {
    batch.realizations.push_back(
        run_learning_mpc(config, realization_seed(config.master_seed, i)));
  }
  batch.summary = summarize(batch.realizations);
  return batch;
}

BatchSummary summarize(const std::vector<RealizationResult>& results) {
  BatchSummary s;
  s.realizations = static_cast<int>(results.size());
  std::vector<double> costs;
  for (const RealizationResult& r : results) {
    if (r.infeasible_at) {
      ++s.infeasible_count;
    } else if (r.numerical_trouble_at) {
      ++s.numerical_trouble_count;
    } else {
      costs.push_back(r.closed_loop_cost);
    }
  }
  s.completed = static_cast<int>(costs.size());
  s.infeasible_fraction =
      s.realizations > 0
          ? static_cast<double>(s.infeasible_count) / s.realizations
          : 0.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (costs.empty()) {
    s.mean_cost = s.std_error = nan;
    s.min_cost = s.q25_cost = s.median_cost = s.q75_cost = s.max_cost = nan;
    return s;
  }
  std::sort(costs.begin(), costs.end());
  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= costs.size();
  s.mean_cost = mean;
  if (costs.size() >= 2) {
    double ss = 0.0;
    for (double c : costs) ss += (c - mean) * (c - mean);
    s.std_error = std::sqrt(ss / (costs.size() - 1)) / std::sqrt(costs.size());
  } else {
    s.std_error = nan;
  }
  s.min_cost = costs.front();
  s.q25_cost = quantile_sorted(costs, 0.25);
  s.median_cost = quantile_sorted(costs, 0.5);
  s.q75_cost = quantile_sorted(costs, 0.75);
  s.max_cost = costs.back();
  return s;
}

std::vector<std::pair<double, double>> empirical_cdf(
    const std::vector<double>& costs) {
  if (costs.empty()) {
    throw std::invalid_argument("empirical_cdf: empty sample");
  }
  std::vector<double> sorted = costs;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return cdf;
}

std::string controller_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Stochastic:
      return "stochastic";
    case ControllerKind::RiskAverse:
      return "risk_averse";
    case ControllerKind::Robust:
      return "robust";
  }
  return "unknown";
}

std::string realizations_csv(const BatchResult& batch) {
  std::string csv = "realization,seed,controller,cost,infeasible_at\n";
  const std::string name = controller_name(batch.config.controller);
  for (size_t i = 0; i < batch.realizations.size(); ++i) {
    const RealizationResult& r = batch.realizations[i];
    csv += std::to_string(i);
    csv += ',';
    csv += std::to_string(r.seed);
    csv += ',';
    csv += name;
    csv += ',';
    csv += format_g(r.closed_loop_cost);
    csv += ',';
    if (r.infeasible_at) csv += std::to_string(*r.infeasible_at);
    csv += '\n';
  }
  return csv;
}

std::string trajectory_csv(const RealizationResult& result) {
  std::string csv = "t,w,h,v_e,v_t,u,solve_status\n";
  for (size_t t = 0; t < result.x.size(); ++t) {
    csv += std::to_string(t);
    csv += ',';
    csv += std::to_string(result.w[t]);
    csv += ',';
    csv += format_g(result.x[t](0));
    csv += ',';
    csv += format_g(result.x[t](1));
    csv += ',';
    csv += format_g(result.x[t](2));
    csv += ',';
    if (t < result.u.size()) csv += format_g(result.u[t]);
    csv += ',';
    if (t < result.solver_diagnostics.size()) {
      csv += status_name(result.solver_diagnostics[t]);
    }
    csv += '\n';
  }
  return csv;
}

nlohmann::json summary_json(const BatchSummary& summary) {
  return nlohmann::json{
      {"realizations", summary.realizations},
      {"completed", summary.completed},
      {"infeasible_count", summary.infeasible_count},
      {"numerical_trouble_count", summary.numerical_trouble_count},
      {"infeasible_fraction", summary.infeasible_fraction},
      {"cost",
       {{"mean", summary.mean_cost},
        {"std_error", summary.std_error},
        {"min", summary.min_cost},
        {"q25", summary.q25_cost},
        {"median", summary.median_cost},
        {"q75", summary.q75_cost},
        {"max", summary.max_cost}}}};
}

}  // namespace rampc
