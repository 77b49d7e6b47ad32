#ifndef PARSGD_REFERENCE_HPP
#define PARSGD_REFERENCE_HPP

#include <span>

#include "parsgd/aggregators.hpp"
#include "parsgd/gradient_vector.hpp"

/*
 * Serial brute-force implementations of every aggregation rule: full sorts
 * and exhaustive loops instead of selection algorithms, no OpenMP. They are
 * the independent oracle the production kernels are checked against and the
 * baseline side of the aggregation benchmark. The production path never
 * calls anything in here.
 */
namespace parsgd::ref {

GradientVector coordinate_wise_median(std::span<const GradientVector> vectors);
GradientVector aggregate_mean(std::span<const GradientVector> vectors);
GradientVector aggregate_trimmed_mean(std::span<const GradientVector> vectors, double beta);
GradientVector aggregate_krum(std::span<const GradientVector> vectors, int f_krum,
                              int multi_m = 1);
NeighborSelection parsgd_select(std::span<const GradientVector> vectors, int f,
                                SelectionMode mode = SelectionMode::PerCoordinate);
GradientVector aggregate_parsgd(std::span<const GradientVector> vectors, int f,
                                SelectionMode mode = SelectionMode::PerCoordinate);

} // namespace parsgd::ref

#endif
