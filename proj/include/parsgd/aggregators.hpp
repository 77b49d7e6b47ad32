#ifndef PARSGD_AGGREGATORS_HPP
#define PARSGD_AGGREGATORS_HPP

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "parsgd/gradient_vector.hpp"

namespace parsgd {

enum class RuleKind { Mean, Median, TrimmedMean, Krum, MultiKrum, ParSgd };

// ParSGD neighbor selection: independently per dimension, or whole vectors
// by L1 distance to the coordinate-wise median.
enum class SelectionMode { PerCoordinate, PerVector };

/*
 * A named, parameterized aggregation rule. Parameters are validated by the
 * factories; an invalid combination never reaches an epoch.
 */
struct AggregationRule {
    RuleKind kind = RuleKind::Mean;
    double trim_beta = 0.0;  // TrimmedMean, in [0, 0.5)
    int declared_f = 0;      // Krum / MultiKrum: declared Byzantine count
    int multi_m = 1;         // MultiKrum: number of lowest-score vectors averaged
    SelectionMode mode = SelectionMode::PerCoordinate; // ParSGD

    static AggregationRule mean();
    static AggregationRule median();
    static AggregationRule trimmed_mean(double beta);
    static AggregationRule krum(int declared_f);
    static AggregationRule multi_krum(int declared_f, int multi_m);
    static AggregationRule parsgd(SelectionMode mode = SelectionMode::PerCoordinate);

    std::string name() const;
};

/*
 * Largest f with n_collected > 2f: floor((n_collected - 1) / 2).
 * n_collected plays the role of n - c; the server infers it each epoch.
 */
int compute_f(int n_collected);

/*
 * The multiset U_{f+1}: the median g plus its f nearest neighbors. Exactly
 * one submitted instance equal to g is excluded from the candidates (it is
 * already represented by g); duplicates beyond that one remain selectable.
 * Ties order by absolute distance, then value, then worker index.
 */
struct NeighborSelection {
    SelectionMode mode = SelectionMode::PerCoordinate;
    int f_used = 0;
    GradientVector median; // g, the (f+1)-th member in both modes

    // PerVector: indices of the f selected vectors, ascending.
    std::vector<std::size_t> vector_indices;

    // PerCoordinate: per dimension, the f selected values and the index of
    // the worker each value came from, ascending by worker index.
    std::vector<std::vector<double>> coordinate_values;
    std::vector<std::vector<std::size_t>> coordinate_sources;

    std::size_t members() const { return static_cast<std::size_t>(f_used) + 1; }
};

NeighborSelection parsgd_select(std::span<const GradientVector> vectors, int f,
                                SelectionMode mode = SelectionMode::PerCoordinate);

// Mean of the f+1 members of U_{f+1} (per coordinate in per-coordinate mode).
GradientVector aggregate_parsgd(std::span<const GradientVector> vectors, int f,
                                SelectionMode mode = SelectionMode::PerCoordinate);

GradientVector aggregate_mean(std::span<const GradientVector> vectors);
GradientVector aggregate_median(std::span<const GradientVector> vectors);

// Per coordinate, drop the floor(beta*m) smallest and largest values and
// average the rest; throws "over-trimmed" if nothing is left.
GradientVector aggregate_trimmed_mean(std::span<const GradientVector> vectors, double beta);

/*
 * score(i) = sum of squared L2 distances to the m - f_krum - 2 nearest other
 * vectors; returns the argmin vector (multi_m = 1) or the mean of the multi_m
 * lowest-score vectors. Ties break toward the lowest worker index.
 */
GradientVector aggregate_krum(std::span<const GradientVector> vectors, int f_krum,
                              int multi_m = 1);

// Dispatch on the rule; epoch_f is the server-computed f consumed by ParSGD.
GradientVector aggregate(const AggregationRule& rule, std::span<const GradientVector> vectors,
                         int epoch_f);

/*
 * Distance-work accounting, incremented once per aggregate call with the
 * exact number of distance computations performed. Backs the complexity
 * benchmark: ParSGD does Theta(n*d) scalar distances and no pairwise vector
 * distances, Krum does n(n-1)/2 pairwise vector distances.
 */
struct OpCounters {
    std::atomic<std::uint64_t> scalar_distance_ops{0};
    std::atomic<std::uint64_t> pairwise_vector_distances{0};

    void reset() {
        scalar_distance_ops.store(0);
        pairwise_vector_distances.store(0);
    }
};

OpCounters& op_counters();

} // namespace parsgd

#endif
