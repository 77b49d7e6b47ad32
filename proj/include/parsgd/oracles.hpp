#ifndef PARSGD_ORACLES_HPP
#define PARSGD_ORACLES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "parsgd/aggregators.hpp"
#include "parsgd/gradient_vector.hpp"
#include "parsgd/rng.hpp"

namespace parsgd::oracles {

/*
 * A labeled aggregation round for the resilience checks: ground truth is
 * known only here, never to the aggregators (they receive plain unlabeled
 * vector sets).
 */
struct LabeledRound {
    std::vector<GradientVector> correct;   // the V_i
    std::vector<GradientVector> byzantine; // the B_j
    GradientVector mu;                     // ground-truth mean
    double epsilon = 0.0;                  // tolerance for the median-vs-mean condition
};

struct WeakCheck {
    bool holds = true;
    std::vector<std::string> violated; // every violated condition, not just the first
};

/*
 * Weak resilience conditions: (i) n > 2f + c with n = |correct| + f + c, and
 * (ii) |g_k - mu_k| <= epsilon per coordinate, g the coordinate-wise median
 * of the collected (correct + byzantine) set.
 */
WeakCheck check_weak_resilience(const LabeledRound& round, int f, int c);

/*
 * Strong condition: in every coordinate the farthest correct value is
 * strictly closer to the median than the closest Byzantine value. An empty
 * Byzantine set holds by convention.
 */
bool check_strong_condition(const LabeledRound& round);

/*
 * One breakdown trial: m random points, floor((m-1)/2) replaced by
 * adversarial values of magnitude up to `outlier_magnitude`; true iff the
 * median of the contaminated set stays within [min, max] of the untouched
 * points. Must always be true for the median.
 */
bool breakdown_trial(int m, KeyedRng& rng, double outlier_magnitude = 1e12);

struct BoundReport {
    double empirical_mse = 0.0;
    double theoretical_bound = 0.0; // f*sigma^2 / (f+1)^2
    double eta = 0.0;               // sqrt(f)*sigma / (f+1)
    long trials = 0;
    double standard_error = 0.0; // of the empirical MSE estimate
    bool passes = false;         // empirical <= bound + 3*standard_error
};

/*
 * Monte Carlo of the estimator's second moment against the idealized
 * f*sigma^2/(f+1)^2 bound: per trial, n = 2f+1 honest i.i.d. Normal(mu,
 * sigma^2) scalars are aggregated with the f-nearest-neighbor mean and the
 * squared deviation from mu is recorded.
 */
BoundReport variance_bound_monte_carlo(int f, double sigma, double mu, long trials,
                                       SelectionMode mode, std::uint64_t seed);

/*
 * Same bound under a pretend-correct Gaussian adversary: f of the 2f+1
 * values are drawn from Normal(mu, sigma_byz^2) instead.
 */
BoundReport pretend_correct_monte_carlo(int f, double sigma, double sigma_byz, double mu,
                                        long trials, SelectionMode mode, std::uint64_t seed);

/*
 * Generator for rounds that satisfy the strong condition by construction:
 * f+1 correct vectors clustered within mu +- 1 and f Byzantine vectors at
 * coordinate distance >= 5 from mu.
 */
LabeledRound make_strong_round(int f, int d, KeyedRng& rng);

// true iff the selection contains no Byzantine member: no Byzantine vector
// (per-vector mode) / no Byzantine-sourced value in any coordinate
// (per-coordinate mode). Byzantine entries occupy indices >= n_correct in
// the aggregated set.
bool selection_excludes_byzantine(const NeighborSelection& sel, std::size_t n_correct);

} // namespace parsgd::oracles

#endif
