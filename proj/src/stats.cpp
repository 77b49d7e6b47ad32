#include "parsgd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace parsgd::stats {

std::size_t common_dimension(std::span<const GradientVector> vectors) {
    if (vectors.empty())
        throw std::invalid_argument("empty aggregation set");
    const std::size_t d = vectors[0].dim();
    for (const auto& v : vectors)
        if (v.dim() != d)
            throw std::invalid_argument("dimension mismatch");
    return d;
}

double median_in_place(std::vector<double>& values) {
    const std::size_t m = values.size();
    if (m == 1)
        return values[0];
    const std::size_t half = m / 2;
    std::nth_element(values.begin(), values.begin() + half, values.end());
    const double hi = values[half];
    if (m % 2 == 1)
        return hi;
    const double lo = *std::max_element(values.begin(), values.begin() + half);
    return 0.5 * (lo + hi);
}

namespace {

// Column-major copy of the set: column(k) is contiguous. Per-coordinate
// kernels iterate coordinates independently, which keeps OpenMP runs
// bitwise identical to serial ones.
std::vector<double> to_columns(std::span<const GradientVector> vectors, std::size_t d) {
    const std::size_t m = vectors.size();
    std::vector<double> cols(m * d);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& vals = vectors[i].values();
        for (std::size_t k = 0; k < d; ++k)
            cols[k * m + i] = vals[k];
    }
    return cols;
}

} // namespace

GradientVector coordinate_wise_median(std::span<const GradientVector> vectors) {
    const std::size_t d = common_dimension(vectors);
    const std::size_t m = vectors.size();
    const std::vector<double> cols = to_columns(vectors, d);
    std::vector<double> out(d);
#pragma omp parallel
    {
        std::vector<double> column(m);
#pragma omp for schedule(static)
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(d); ++k) {
            std::copy_n(cols.data() + static_cast<std::size_t>(k) * m, m, column.data());
            out[static_cast<std::size_t>(k)] = median_in_place(column);
        }
    }
    return GradientVector(std::move(out));
}

GradientVector coordinate_wise_mean(std::span<const GradientVector> vectors) {
    const std::size_t d = common_dimension(vectors);
    const std::size_t m = vectors.size();
    std::vector<double> out(d);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(d); ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) // fixed index order
            sum += vectors[i][static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(k)] = sum / static_cast<double>(m);
    }
    return GradientVector(std::move(out));
}

std::vector<double> coordinate_variance(std::span<const GradientVector> vectors) {
    const std::size_t d = common_dimension(vectors);
    const std::size_t m = vectors.size();
    if (m < 2)
        throw std::invalid_argument("insufficient samples");
    std::vector<double> out(d);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(d); ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            sum += vectors[i][k];
        const double mean = sum / static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double dev = vectors[i][k] - mean;
            ss += dev * dev;
        }
        out[k] = ss / static_cast<double>(m - 1);
    }
    return out;
}

CoordinateStats coordinate_stats(std::span<const GradientVector> vectors) {
    CoordinateStats s;
    s.variance = coordinate_variance(vectors); // validates m >= 2
    s.mean = coordinate_wise_mean(vectors).values();
    s.median = coordinate_wise_median(vectors).values();
    return s;
}

double absolute_skewness(std::span<const double> samples) {
    if (samples.empty())
        throw std::invalid_argument("empty sample");
    const auto n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double x : samples)
        sum += x;
    const double mean = sum / n;
    double m2 = 0.0;
    double m3 = 0.0;
    for (double x : samples) {
        const double dev = x - mean;
        m2 += dev * dev;
        m3 += dev * dev * dev;
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0)
        throw std::invalid_argument("degenerate sample");
    return m3 / std::pow(m2, 1.5);
}

double l1_distance(const GradientVector& a, const GradientVector& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("dimension mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.dim(); ++k)
        sum += std::abs(a[k] - b[k]);
    return sum;
}

double l2_squared(const GradientVector& a, const GradientVector& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("dimension mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.dim(); ++k) {
        const double diff = a[k] - b[k];
        sum += diff * diff;
    }
    return sum;
}

} // namespace parsgd::stats
