#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rampc/polyhedron.hpp"

namespace rampc {

// Empirical transition model built from observed jumps.  Mode indices are
// 0-based throughout.  Rows with no observations fall back to the uniform
// distribution (and to the full simplex as their ambiguity set).
struct TransitionEstimate {
  int d = 0;
  Eigen::MatrixXi counts;  // counts(j, i) = observed j -> i transitions
  Eigen::VectorXi n;       // row totals
  Eigen::MatrixXd p_hat;   // row-stochastic empirical matrix

  static TransitionEstimate empty(int d);
};

enum class AmbiguityKind { Singleton, L1Ball, FullSimplex };

// A set of candidate probability rows: a single distribution, an l1 ball
// around an empirical row (intersected with the simplex), or the whole
// simplex.  Radii clamp to 2 (the l1 diameter of the simplex); a clamped
// ball *is* the full simplex and is constructed as such.
struct AmbiguitySet {
  AmbiguityKind kind = AmbiguityKind::FullSimplex;
  Eigen::VectorXd center;  // probability vector; kept for all kinds
  double radius = 0.0;     // L1Ball: in (0, 2); FullSimplex: 2; Singleton: 0

  int dim() const { return static_cast<int>(center.size()); }

  static AmbiguitySet singleton(Eigen::VectorXd p);
  static AmbiguitySet l1_ball(Eigen::VectorXd center, double radius);
  static AmbiguitySet full_simplex(int d);
};

// counts(j,i) = #{t >= 1 : w_{t-1} = j, w_t = i} over the sample path.
TransitionEstimate estimate(const std::vector<int>& sample, int d);

// Returns a new estimate with one more observed from -> to transition and
// row `from` re-normalised; all other rows are untouched.
TransitionEstimate record_transition(const TransitionEstimate& est, int from,
                                     int to);

// l1 concentration radius: for n > 0,
//   min(2, sqrt(-2 ln(alpha) / n) + sqrt(2 (d-1) / (pi n))
//          + 4 sqrt(d) (d-1)^{1/4} / n^{3/4});
// n = 0 gives 2 (no data: full simplex).
double radius(double alpha, int d, long n);

// One ambiguity set per row: an l1 ball with the concentration radius, or the
// full simplex where the radius clamps.
std::vector<AmbiguitySet> ambiguity_rows(const TransitionEstimate& est,
                                         double alpha);

// Exact containment candidate ⊆ incumbent (sets are intersected with the
// simplex).  Cheap sufficient checks first (full simplex incumbent, the
// triangle inequality), then the polyhedral subset test.
bool is_nested(const AmbiguitySet& candidate, const AmbiguitySet& incumbent,
               double tol = 1e-9);

// Categorical draw from row w of a row-stochastic matrix using a single
// uniform variate (portable uint64 -> [0,1) mapping, so results are
// reproducible across platforms for a given seed).
int sample_next(const Eigen::MatrixXd& P, int w, std::mt19937_64& rng);

// H-representation over mu in R^d: the simplex rows (two inequalities for
// 1'mu = 1, plus mu >= 0) and the kind-specific facets.  d > 12 is rejected
// (2^d sign-pattern facets).
Polyhedron ambiguity_to_polyhedron(const AmbiguitySet& A);

// Named transition matrices used by the experiments ("P_p", "P_s").
Eigen::MatrixXd transition_preset(const std::string& name);

// Portable uniform variate in [0, 1): (rng() >> 11) * 2^-53.
double uniform01(std::mt19937_64& rng);

}  // namespace rampc
