#include "rampc/markov.hpp"

#include <cmath>
#include <stdexcept>

namespace rampc {

namespace {

void check_simplex(const Eigen::VectorXd& p) {
  if (p.size() < 1) throw std::invalid_argument("ambiguity: empty center");
  if (p.minCoeff() < -1e-12 || std::abs(p.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("ambiguity: center is not a distribution");
}

}  // namespace

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

TransitionEstimate TransitionEstimate::empty(int d) {
  if (d < 1) throw std::invalid_argument("transition estimate: d must be >= 1");
  TransitionEstimate est;
  est.d = d;
  est.counts = Eigen::MatrixXi::Zero(d, d);
  est.n = Eigen::VectorXi::Zero(d);
  est.p_hat = Eigen::MatrixXd::Constant(d, d, 1.0 / d);
  return est;
}

AmbiguitySet AmbiguitySet::singleton(Eigen::VectorXd p) {
  check_simplex(p);
  AmbiguitySet a;
  a.kind = AmbiguityKind::Singleton;
  a.center = std::move(p);
  a.radius = 0.0;
  return a;
}

AmbiguitySet AmbiguitySet::l1_ball(Eigen::VectorXd center, double radius) {
  check_simplex(center);
  if (radius < 0) throw std::invalid_argument("ambiguity: negative radius");
  AmbiguitySet a;
  a.center = std::move(center);
  a.radius = std::min(radius, 2.0);
  a.kind = a.radius >= 2.0 ? AmbiguityKind::FullSimplex : AmbiguityKind::L1Ball;
  if (a.radius == 0.0) a.kind = AmbiguityKind::Singleton;
  return a;
}

AmbiguitySet AmbiguitySet::full_simplex(int d) {
  if (d < 1) throw std::invalid_argument("ambiguity: d must be >= 1");
  AmbiguitySet a;
  a.kind = AmbiguityKind::FullSimplex;
  a.center = Eigen::VectorXd::Constant(d, 1.0 / d);
  a.radius = 2.0;
  return a;
}

TransitionEstimate estimate(const std::vector<int>& sample, int d) {
  if (sample.empty())
    throw std::invalid_argument("estimate: need at least one observation");
  TransitionEstimate est = TransitionEstimate::empty(d);
  for (int w : sample)
    if (w < 0 || w >= d) throw std::out_of_range("estimate: mode out of range");
  for (size_t t = 1; t < sample.size(); ++t)
    est.counts(sample[t - 1], sample[t]) += 1;
  for (int j = 0; j < d; ++j) {
    est.n[j] = est.counts.row(j).sum();
    if (est.n[j] > 0)
      est.p_hat.row(j) =
          est.counts.row(j).cast<double>() / static_cast<double>(est.n[j]);
    // n_j = 0 keeps the uniform fallback from empty()
  }
  return est;
}

TransitionEstimate record_transition(const TransitionEstimate& est, int from,
                                     int to) {
  if (from < 0 || from >= est.d || to < 0 || to >= est.d)
    throw std::out_of_range("record_transition: mode out of range");
  TransitionEstimate out = est;
  out.counts(from, to) += 1;
  out.n[from] += 1;
  out.p_hat.row(from) =
      out.counts.row(from).cast<double>() / static_cast<double>(out.n[from]);
  return out;
}

double radius(double alpha, int d, long n) {
  if (alpha <= 0.0 || alpha > 1.0)
    throw std::invalid_argument("radius: alpha must be in (0, 1]");
  if (d < 1) throw std::invalid_argument("radius: d must be >= 1");
  if (n < 0) throw std::invalid_argument("radius: n must be >= 0");
  if (n == 0) return 2.0;
  const double nn = static_cast<double>(n);
  double r = std::sqrt(-2.0 * std::log(alpha) / nn) +
             std::sqrt(2.0 * (d - 1) / (M_PI * nn)) +
             4.0 * std::sqrt(static_cast<double>(d)) *
                 std::pow(static_cast<double>(d - 1), 0.25) /
                 std::pow(nn, 0.75);
  return std::min(2.0, r);
}

std::vector<AmbiguitySet> ambiguity_rows(const TransitionEstimate& est,
                                         double alpha) {
  std::vector<AmbiguitySet> rows;
  rows.reserve(est.d);
  for (int j = 0; j < est.d; ++j) {
    double r = radius(alpha, est.d, est.n[j]);
    rows.push_back(AmbiguitySet::l1_ball(est.p_hat.row(j).transpose(), r));
  }
  return rows;
}

Polyhedron ambiguity_to_polyhedron(const AmbiguitySet& A) {
  const int d = A.dim();
  if (d > 12)
    throw std::invalid_argument(
        "ambiguity_to_polyhedron: dimension too large for facet enumeration");
  Polyhedron P(d);
  // simplex: 1'mu = 1 as two inequalities, mu >= 0
  P.add_row(Eigen::VectorXd::Ones(d), 1.0);
  P.add_row(-Eigen::VectorXd::Ones(d), -1.0);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
    row[i] = -1.0;
    P.add_row(row, 0.0);
  }
  switch (A.kind) {
    case AmbiguityKind::FullSimplex:
      break;
    case AmbiguityKind::Singleton:
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
        row[i] = 1.0;
        P.add_row(row, A.center[i]);
        P.add_row(-row, -A.center[i]);
      }
      break;
    case AmbiguityKind::L1Ball:
      // all sign patterns s'(mu - center) <= radius
      for (long mask = 0; mask < (1L << d); ++mask) {
        Eigen::VectorXd s(d);
        for (int i = 0; i < d; ++i) s[i] = (mask >> i) & 1 ? 1.0 : -1.0;
        P.add_row(s, A.radius + s.dot(A.center));
      }
      break;
  }
  return P;
}

bool is_nested(const AmbiguitySet& candidate, const AmbiguitySet& incumbent,
               double tol) {
  if (candidate.dim() != incumbent.dim())
    throw std::invalid_argument("is_nested: dimension mismatch");
  if (incumbent.kind == AmbiguityKind::FullSimplex) return true;
  if (candidate.kind == AmbiguityKind::Singleton) {
    double dist = (candidate.center - incumbent.center).lpNorm<1>();
    if (incumbent.kind == AmbiguityKind::Singleton) return dist <= tol;
    return dist <= incumbent.radius + tol;
  }
  if (candidate.kind == AmbiguityKind::L1Ball &&
      incumbent.kind == AmbiguityKind::L1Ball) {
    // triangle inequality: sufficient even without the simplex intersection
    double dist = (candidate.center - incumbent.center).lpNorm<1>();
    if (dist + candidate.radius <= incumbent.radius + tol) return true;
  }
  return is_subset(ambiguity_to_polyhedron(candidate),
                   ambiguity_to_polyhedron(incumbent), tol);
}

int sample_next(const Eigen::MatrixXd& P, int w, std::mt19937_64& rng) {
  if (w < 0 || w >= P.rows())
    throw std::out_of_range("sample_next: mode out of range");
  if (std::abs(P.row(w).sum() - 1.0) > 1e-9)
    throw std::invalid_argument("sample_next: row is not a distribution");
  const double u = uniform01(rng);
  double cum = 0.0;
  const int d = static_cast<int>(P.cols());
  for (int i = 0; i < d; ++i) {
    cum += P(w, i);
    if (u < cum) return i;
  }
  return d - 1;  // guard against accumulated rounding
}

Eigen::MatrixXd transition_preset(const std::string& name) {
  Eigen::MatrixXd P(4, 4);
  if (name == "P_p") {
    P << 0.92, 0.04, 0.02, 0.02,  //
        0.29, 0.50, 0.09, 0.12,   //
        0.26, 0.21, 0.36, 0.17,   //
        0.31, 0.25, 0.23, 0.21;
  } else if (name == "P_s") {
    P << 0.29, 0.7, 0.009, 0.001,  //
        0.09, 0.90, 0.009, 0.001,  //
        0.4, 0.29, 0.3, 0.01,      //
        0.048, 0.001, 0.001, 0.95;
  } else {
    throw std::invalid_argument("unknown transition preset: " + name);
  }
  return P;
}

}  // namespace rampc
