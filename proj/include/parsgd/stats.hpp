#ifndef PARSGD_STATS_HPP
#define PARSGD_STATS_HPP

#include <span>
#include <vector>

#include "parsgd/gradient_vector.hpp"

namespace parsgd::stats {

// Per-coordinate summary of a collected gradient set.
struct CoordinateStats {
    std::vector<double> mean;     // mu_k
    std::vector<double> variance; // sigma_k^2, unbiased (m-1), >= 0
    std::vector<double> median;   // g_k
};

// Throws "empty aggregation set" / "dimension mismatch". Returns d.
std::size_t common_dimension(std::span<const GradientVector> vectors);

/*
 * Coordinate k of the result is the 1-d median of the k-th coordinates.
 * Even counts take the midpoint of the two middle order statistics.
 */
GradientVector coordinate_wise_median(std::span<const GradientVector> vectors);

GradientVector coordinate_wise_mean(std::span<const GradientVector> vectors);

// Unbiased sample variance per coordinate; requires m >= 2.
std::vector<double> coordinate_variance(std::span<const GradientVector> vectors);

// mean + variance + median in one pass over the set; requires m >= 2.
CoordinateStats coordinate_stats(std::span<const GradientVector> vectors);

/*
 * Sample skewness m3 / m2^{3/2} with population central moments (divide by n).
 * Diagnostic statistic only; throws "degenerate sample" when m2 == 0.
 */
double absolute_skewness(std::span<const double> samples);

double l1_distance(const GradientVector& a, const GradientVector& b);
double l2_squared(const GradientVector& a, const GradientVector& b);

// 1-d median of a scratch buffer (mangles it). Shared by the kernels above
// and by the resilience oracles.
double median_in_place(std::vector<double>& values);

} // namespace parsgd::stats

#endif
