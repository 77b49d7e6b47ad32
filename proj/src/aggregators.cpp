#include "parsgd/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "parsgd/stats.hpp"

namespace parsgd {

OpCounters& op_counters() {
    static OpCounters counters;
    return counters;
}

AggregationRule AggregationRule::mean() { return {RuleKind::Mean}; }
AggregationRule AggregationRule::median() { return {RuleKind::Median}; }

AggregationRule AggregationRule::trimmed_mean(double beta) {
    if (!(beta >= 0.0 && beta < 0.5))
        throw std::invalid_argument("trimmed-mean beta must be in [0, 0.5)");
    AggregationRule r{RuleKind::TrimmedMean};
    r.trim_beta = beta;
    return r;
}

AggregationRule AggregationRule::krum(int declared_f) {
    if (declared_f < 0)
        throw std::invalid_argument("krum declared f must be >= 0");
    AggregationRule r{RuleKind::Krum};
    r.declared_f = declared_f;
    return r;
}

AggregationRule AggregationRule::multi_krum(int declared_f, int multi_m) {
    if (declared_f < 0)
        throw std::invalid_argument("multi-krum declared f must be >= 0");
    if (multi_m < 1)
        throw std::invalid_argument("multi-krum selection count must be >= 1");
    AggregationRule r{RuleKind::MultiKrum};
    r.declared_f = declared_f;
    r.multi_m = multi_m;
    return r;
}

AggregationRule AggregationRule::parsgd(SelectionMode mode) {
    AggregationRule r{RuleKind::ParSgd};
    r.mode = mode;
    return r;
}

std::string AggregationRule::name() const {
    switch (kind) {
    case RuleKind::Mean: return "mean";
    case RuleKind::Median: return "median";
    case RuleKind::TrimmedMean: return "trimmed-mean-b" + std::to_string(trim_beta).substr(0, 4);
    case RuleKind::Krum: return "krum-f" + std::to_string(declared_f);
    case RuleKind::MultiKrum:
        return "multi-krum-f" + std::to_string(declared_f) + "-m" + std::to_string(multi_m);
    case RuleKind::ParSgd:
        return mode == SelectionMode::PerCoordinate ? "parsgd" : "parsgd-pv";
    }
    return "unknown";
}

int compute_f(int n_collected) {
    if (n_collected < 1)
        throw std::invalid_argument("compute_f needs at least one collected update");
    return (n_collected - 1) / 2;
}

namespace {

struct Candidate {
    double dist;
    double value;
    std::size_t index;
};

// Total order: absolute distance, then value, then worker index. The index
// only decides between identical values, so aggregates stay permutation
// invariant.
bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.dist != b.dist)
        return a.dist < b.dist;
    if (a.value != b.value)
        return a.value < b.value;
    return a.index < b.index;
}

/*
 * Fill `cands` with (|v-g|, v, i) for one coordinate, skipping exactly one
 * instance equal to g (lowest index). Returns the candidate count.
 */
std::size_t build_coordinate_candidates(const double* column, std::size_t m, double g,
                                        std::vector<Candidate>& cands) {
    cands.clear();
    bool skipped = false;
    for (std::size_t i = 0; i < m; ++i) {
        const double v = column[i];
        if (!skipped && v == g) {
            skipped = true;
            continue;
        }
        cands.push_back({std::abs(v - g), v, i});
    }
    return cands.size();
}

// Partition the f nearest candidates to the front and order them by worker
// index so downstream sums run in canonical index order.
void select_front(std::vector<Candidate>& cands, std::size_t f) {
    if (f < cands.size())
        std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(f),
                         cands.end(), candidate_less);
    std::sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(f),
              [](const Candidate& a, const Candidate& b) { return a.index < b.index; });
}

std::vector<double> gather_columns(std::span<const GradientVector> vectors, std::size_t d) {
    const std::size_t m = vectors.size();
    std::vector<double> cols(m * d);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& vals = vectors[i].values();
        for (std::size_t k = 0; k < d; ++k)
            cols[k * m + i] = vals[k];
    }
    return cols;
}

void check_parsgd_preconditions(std::span<const GradientVector> vectors, int f) {
    if (f < 0)
        throw std::invalid_argument("f must be >= 0");
    if (static_cast<std::size_t>(f) > vectors.size() - 1)
        throw std::invalid_argument("f exceeds collected set");
}

struct PerVectorOrder {
    std::vector<std::size_t> selected; // ascending worker index
    GradientVector median;
};

PerVectorOrder select_per_vector(std::span<const GradientVector> vectors, int f) {
    const std::size_t m = vectors.size();
    const std::size_t d = vectors[0].dim();
    PerVectorOrder out;
    out.median = stats::coordinate_wise_median(vectors);

    struct VecCand {
        double dist;
        std::size_t index;
    };
    std::vector<VecCand> cands;
    cands.reserve(m);
    bool skipped = false;
    for (std::size_t i = 0; i < m; ++i) {
        if (!skipped && vectors[i] == out.median) {
            skipped = true;
            continue;
        }
        cands.push_back({stats::l1_distance(vectors[i], out.median), i});
    }
    op_counters().scalar_distance_ops.fetch_add(static_cast<std::uint64_t>(cands.size()) * d,
                                                std::memory_order_relaxed);

    const auto fu = static_cast<std::size_t>(f);
    if (fu > cands.size())
        throw std::invalid_argument("f exceeds collected set");
    const auto less = [&](const VecCand& a, const VecCand& b) {
        if (a.dist != b.dist)
            return a.dist < b.dist;
        const auto& va = vectors[a.index].values();
        const auto& vb = vectors[b.index].values();
        if (va != vb)
            return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
        return a.index < b.index;
    };
    if (fu < cands.size())
        std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(fu),
                         cands.end(), less);
    out.selected.reserve(fu);
    for (std::size_t j = 0; j < fu; ++j)
        out.selected.push_back(cands[j].index);
    std::sort(out.selected.begin(), out.selected.end());
    return out;
}

} // namespace

NeighborSelection parsgd_select(std::span<const GradientVector> vectors, int f,
                                SelectionMode mode) {
    const std::size_t d = stats::common_dimension(vectors);
    check_parsgd_preconditions(vectors, f);
    const std::size_t m = vectors.size();
    const auto fu = static_cast<std::size_t>(f);

    NeighborSelection sel;
    sel.mode = mode;
    sel.f_used = f;

    if (mode == SelectionMode::PerVector) {
        auto order = select_per_vector(vectors, f);
        sel.median = std::move(order.median);
        sel.vector_indices = std::move(order.selected);
        return sel;
    }

    const std::vector<double> cols = gather_columns(vectors, d);
    std::vector<double> median(d);
    sel.coordinate_values.assign(d, {});
    sel.coordinate_sources.assign(d, {});
    std::uint64_t scalar_ops = 0;

#pragma omp parallel reduction(+ : scalar_ops)
    {
        std::vector<double> column(m);
        std::vector<Candidate> cands;
        cands.reserve(m);
#pragma omp for schedule(static)
        for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(d); ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            const double* col = cols.data() + k * m;
            std::copy_n(col, m, column.data());
            const double g = stats::median_in_place(column);
            median[k] = g;
            scalar_ops += build_coordinate_candidates(col, m, g, cands);
            select_front(cands, fu);
            auto& values = sel.coordinate_values[k];
            auto& sources = sel.coordinate_sources[k];
            values.reserve(fu);
            sources.reserve(fu);
            for (std::size_t j = 0; j < fu; ++j) {
                values.push_back(cands[j].value);
                sources.push_back(cands[j].index);
            }
        }
    }
    op_counters().scalar_distance_ops.fetch_add(scalar_ops, std::memory_order_relaxed);
    sel.median = GradientVector(std::move(median));
    return sel;
}

GradientVector aggregate_parsgd(std::span<const GradientVector> vectors, int f,
                                SelectionMode mode) {
    const std::size_t d = stats::common_dimension(vectors);
    check_parsgd_preconditions(vectors, f);
    const std::size_t m = vectors.size();
    const auto fu = static_cast<std::size_t>(f);
    const double divisor = static_cast<double>(f) + 1.0;

    if (mode == SelectionMode::PerVector) {
        auto order = select_per_vector(vectors, f);
        std::vector<double> out(d);
        for (std::size_t k = 0; k < d; ++k) {
            double sum = 0.0;
            for (std::size_t idx : order.selected)
                sum += vectors[idx][k];
            out[k] = (sum + order.median[k]) / divisor;
        }
        return GradientVector(std::move(out));
    }

    const std::vector<double> cols = gather_columns(vectors, d);
    std::vector<double> out(d);
    std::uint64_t scalar_ops = 0;

#pragma omp parallel reduction(+ : scalar_ops)
    {
        std::vector<double> column(m);
        std::vector<Candidate> cands;
        cands.reserve(m);
#pragma omp for schedule(static)
        for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(d); ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            const double* col = cols.data() + k * m;
            std::copy_n(col, m, column.data());
            const double g = stats::median_in_place(column);
            scalar_ops += build_coordinate_candidates(col, m, g, cands);
            select_front(cands, fu);
            double sum = 0.0;
            for (std::size_t j = 0; j < fu; ++j)
                sum += cands[j].value;
            out[k] = (sum + g) / divisor;
        }
    }
    op_counters().scalar_distance_ops.fetch_add(scalar_ops, std::memory_order_relaxed);
    return GradientVector(std::move(out));
}

GradientVector aggregate_mean(std::span<const GradientVector> vectors) {
    return stats::coordinate_wise_mean(vectors);
}

GradientVector aggregate_median(std::span<const GradientVector> vectors) {
    return stats::coordinate_wise_median(vectors);
}

GradientVector aggregate_trimmed_mean(std::span<const GradientVector> vectors, double beta) {
    if (!(beta >= 0.0 && beta < 0.5))
        throw std::invalid_argument("trimmed-mean beta must be in [0, 0.5)");
    const std::size_t d = stats::common_dimension(vectors);
    const std::size_t m = vectors.size();
    const auto trim = static_cast<std::size_t>(std::floor(beta * static_cast<double>(m)));
    if (2 * trim >= m)
        throw std::invalid_argument("over-trimmed");
    const std::size_t keep = m - 2 * trim;
    const std::vector<double> cols = gather_columns(vectors, d);
    std::vector<double> out(d);

#pragma omp parallel
    {
        std::vector<double> column(m);
#pragma omp for schedule(static)
        for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(d); ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            std::copy_n(cols.data() + k * m, m, column.data());
            auto mid_first = column.begin() + static_cast<std::ptrdiff_t>(trim);
            auto mid_last = column.begin() + static_cast<std::ptrdiff_t>(m - trim);
            if (trim > 0) {
                std::nth_element(column.begin(), mid_first, column.end());
                std::nth_element(mid_first, mid_last - 1, column.end());
            }
            // canonical ascending order for the surviving values
            std::sort(mid_first, mid_last);
            double sum = 0.0;
            for (auto it = mid_first; it != mid_last; ++it)
                sum += *it;
            out[k] = sum / static_cast<double>(keep);
        }
    }
    return GradientVector(std::move(out));
}

GradientVector aggregate_krum(std::span<const GradientVector> vectors, int f_krum, int multi_m) {
    const std::size_t d = stats::common_dimension(vectors);
    const std::size_t m = vectors.size();
    if (f_krum < 0)
        throw std::invalid_argument("krum declared f must be >= 0");
    const auto neighbors = static_cast<std::ptrdiff_t>(m) - f_krum - 2;
    if (neighbors < 1)
        throw std::invalid_argument("Krum needs n >= f + 3");
    if (multi_m < 1 || static_cast<std::size_t>(multi_m) > m)
        throw std::invalid_argument("multi-krum selection count out of range");

    // upper-triangle pairwise squared distances
    std::vector<double> dist(m * (m - 1) / 2);
    const auto pair_at = [m](std::size_t i, std::size_t j) {
        // i < j
        return i * (2 * m - i - 1) / 2 + (j - i - 1);
    };
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m) - 1; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* a = vectors[i].values().data();
        for (std::size_t j = i + 1; j < m; ++j) {
            const double* b = vectors[j].values().data();
            double sum = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = a[k] - b[k];
                sum += diff * diff;
            }
            dist[pair_at(i, j)] = sum;
        }
    }
    op_counters().pairwise_vector_distances.fetch_add(static_cast<std::uint64_t>(m) * (m - 1) / 2,
                                                      std::memory_order_relaxed);

    struct Neighbor {
        double dist;
        std::size_t index;
    };
    std::vector<double> scores(m);
#pragma omp parallel
    {
        std::vector<Neighbor> others(m - 1);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            std::size_t pos = 0;
            for (std::size_t j = 0; j < m; ++j) {
                if (j == i)
                    continue;
                const double dij = i < j ? dist[pair_at(i, j)] : dist[pair_at(j, i)];
                others[pos++] = {dij, j};
            }
            const auto less = [](const Neighbor& a, const Neighbor& b) {
                if (a.dist != b.dist)
                    return a.dist < b.dist;
                return a.index < b.index;
            };
            std::nth_element(others.begin(), others.begin() + neighbors, others.end(), less);
            std::sort(others.begin(), others.begin() + neighbors,
                      [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
            double score = 0.0;
            for (std::ptrdiff_t j = 0; j < neighbors; ++j)
                score += others[static_cast<std::size_t>(j)].dist;
            scores[i] = score;
        }
    }

    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b])
            return scores[a] < scores[b];
        return a < b;
    });

    if (multi_m == 1)
        return vectors[order[0]];

    std::vector<std::size_t> chosen(order.begin(), order.begin() + multi_m);
    std::sort(chosen.begin(), chosen.end());
    std::vector<double> out(d);
    for (std::size_t k = 0; k < d; ++k) {
        double sum = 0.0;
        for (std::size_t idx : chosen)
            sum += vectors[idx][k];
        out[k] = sum / static_cast<double>(multi_m);
    }
    return GradientVector(std::move(out));
}

GradientVector aggregate(const AggregationRule& rule, std::span<const GradientVector> vectors,
                         int epoch_f) {
    switch (rule.kind) {
    case RuleKind::Mean:
        return aggregate_mean(vectors);
    case RuleKind::Median:
        return aggregate_median(vectors);
    case RuleKind::TrimmedMean:
        return aggregate_trimmed_mean(vectors, rule.trim_beta);
    case RuleKind::Krum:
        return aggregate_krum(vectors, rule.declared_f, 1);
    case RuleKind::MultiKrum:
        return aggregate_krum(vectors, rule.declared_f, rule.multi_m);
    case RuleKind::ParSgd:
        return aggregate_parsgd(vectors, epoch_f, rule.mode);
    }
    throw std::logic_error("unhandled aggregation rule");
}

} // namespace parsgd
