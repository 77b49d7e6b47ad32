#include "parsgd/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace parsgd::ref {

namespace {

std::size_t checked_dimension(std::span<const GradientVector> vectors) {
    if (vectors.empty())
        throw std::invalid_argument("empty aggregation set");
    const std::size_t d = vectors[0].dim();
    for (const auto& v : vectors)
        if (v.dim() != d)
            throw std::invalid_argument("dimension mismatch");
    return d;
}

std::vector<double> column(std::span<const GradientVector> vectors, std::size_t k) {
    std::vector<double> col;
    col.reserve(vectors.size());
    for (const auto& v : vectors)
        col.push_back(v[k]);
    return col;
}

double sorted_median(std::vector<double> col) {
    std::sort(col.begin(), col.end());
    const std::size_t m = col.size();
    if (m % 2 == 1)
        return col[m / 2];
    return 0.5 * (col[m / 2 - 1] + col[m / 2]);
}

} // namespace

GradientVector coordinate_wise_median(std::span<const GradientVector> vectors) {
    const std::size_t d = checked_dimension(vectors);
    std::vector<double> out(d);
    for (std::size_t k = 0; k < d; ++k)
        out[k] = sorted_median(column(vectors, k));
    return GradientVector(std::move(out));
}

GradientVector aggregate_mean(std::span<const GradientVector> vectors) {
    const std::size_t d = checked_dimension(vectors);
    const std::size_t m = vectors.size();
    std::vector<double> out(d);
    for (std::size_t k = 0; k < d; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            sum += vectors[i][k];
        out[k] = sum / static_cast<double>(m);
    }
    return GradientVector(std::move(out));
}

GradientVector aggregate_trimmed_mean(std::span<const GradientVector> vectors, double beta) {
    if (!(beta >= 0.0 && beta < 0.5))
        throw std::invalid_argument("trimmed-mean beta must be in [0, 0.5)");
    const std::size_t d = checked_dimension(vectors);
    const std::size_t m = vectors.size();
    const auto trim = static_cast<std::size_t>(std::floor(beta * static_cast<double>(m)));
    if (2 * trim >= m)
        throw std::invalid_argument("over-trimmed");
    std::vector<double> out(d);
    for (std::size_t k = 0; k < d; ++k) {
        auto col = column(vectors, k);
        std::sort(col.begin(), col.end());
        double sum = 0.0;
        for (std::size_t i = trim; i < m - trim; ++i)
            sum += col[i];
        out[k] = sum / static_cast<double>(m - 2 * trim);
    }
    return GradientVector(std::move(out));
}

GradientVector aggregate_krum(std::span<const GradientVector> vectors, int f_krum, int multi_m) {
    const std::size_t d = checked_dimension(vectors);
    const std::size_t m = vectors.size();
    if (f_krum < 0)
        throw std::invalid_argument("krum declared f must be >= 0");
    const auto neighbors = static_cast<std::ptrdiff_t>(m) - f_krum - 2;
    if (neighbors < 1)
        throw std::invalid_argument("Krum needs n >= f + 3");
    if (multi_m < 1 || static_cast<std::size_t>(multi_m) > m)
        throw std::invalid_argument("multi-krum selection count out of range");

    std::vector<double> scores(m);
    for (std::size_t i = 0; i < m; ++i) {
        struct Entry {
            double dist;
            std::size_t index;
        };
        std::vector<Entry> others;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i)
                continue;
            double sum = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = vectors[i][k] - vectors[j][k];
                sum += diff * diff;
            }
            others.push_back({sum, j});
        }
        std::sort(others.begin(), others.end(), [](const Entry& a, const Entry& b) {
            if (a.dist != b.dist)
                return a.dist < b.dist;
            return a.index < b.index;
        });
        others.resize(static_cast<std::size_t>(neighbors));
        std::sort(others.begin(), others.end(),
                  [](const Entry& a, const Entry& b) { return a.index < b.index; });
        double score = 0.0;
        for (const auto& e : others)
            score += e.dist;
        scores[i] = score;
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

NeighborSelection parsgd_select(std::span<const GradientVector> vectors, int f,
                                SelectionMode mode) {
    const std::size_t d = checked_dimension(vectors);
    const std::size_t m = vectors.size();
    if (f < 0)
        throw std::invalid_argument("f must be >= 0");
    if (static_cast<std::size_t>(f) > m - 1)
        throw std::invalid_argument("f exceeds collected set");
    const auto fu = static_cast<std::size_t>(f);

    NeighborSelection sel;
    sel.mode = mode;
    sel.f_used = f;
    sel.median = coordinate_wise_median(vectors);

    if (mode == SelectionMode::PerVector) {
        struct Entry {
            double dist;
            std::size_t index;
        };
        std::vector<Entry> cands;
        bool skipped = false;
        for (std::size_t i = 0; i < m; ++i) {
            if (!skipped && vectors[i] == sel.median) {
                skipped = true;
                continue;
            }
            double sum = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                sum += std::abs(vectors[i][k] - sel.median[k]);
            cands.push_back({sum, i});
        }
        if (fu > cands.size())
            throw std::invalid_argument("f exceeds collected set");
        std::sort(cands.begin(), cands.end(), [&](const Entry& a, const Entry& b) {
            if (a.dist != b.dist)
                return a.dist < b.dist;
            const auto& va = vectors[a.index].values();
            const auto& vb = vectors[b.index].values();
            if (va != vb)
                return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
            return a.index < b.index;
        });
        for (std::size_t j = 0; j < fu; ++j)
            sel.vector_indices.push_back(cands[j].index);
        std::sort(sel.vector_indices.begin(), sel.vector_indices.end());
        return sel;
    }

    sel.coordinate_values.assign(d, {});
    sel.coordinate_sources.assign(d, {});
    for (std::size_t k = 0; k < d; ++k) {
        const double g = sel.median[k];
        struct Entry {
            double dist;
            double value;
            std::size_t index;
        };
        std::vector<Entry> cands;
        bool skipped = false;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = vectors[i][k];
            if (!skipped && v == g) {
                skipped = true;
                continue;
            }
            cands.push_back({std::abs(v - g), v, i});
        }
        std::sort(cands.begin(), cands.end(), [](const Entry& a, const Entry& b) {
            if (a.dist != b.dist)
                return a.dist < b.dist;
            if (a.value != b.value)
                return a.value < b.value;
            return a.index < b.index;
        });
        cands.resize(fu);
        std::sort(cands.begin(), cands.end(),
                  [](const Entry& a, const Entry& b) { return a.index < b.index; });
        for (const auto& c : cands) {
            sel.coordinate_values[k].push_back(c.value);
            sel.coordinate_sources[k].push_back(c.index);
        }
    }
    return sel;
}

GradientVector aggregate_parsgd(std::span<const GradientVector> vectors, int f,
                                SelectionMode mode) {
    const auto sel = parsgd_select(vectors, f, mode);
    const std::size_t d = sel.median.dim();
    const double divisor = static_cast<double>(f) + 1.0;
    std::vector<double> out(d);
    if (mode == SelectionMode::PerVector) {
        for (std::size_t k = 0; k < d; ++k) {
            double sum = 0.0;
            for (std::size_t idx : sel.vector_indices)
                sum += vectors[idx][k];
            out[k] = (sum + sel.median[k]) / divisor;
        }
    } else {
        for (std::size_t k = 0; k < d; ++k) {
            double sum = 0.0;
            for (double v : sel.coordinate_values[k])
                sum += v;
            out[k] = (sum + sel.median[k]) / divisor;
        }
    }
    return GradientVector(std::move(out));
}

} // namespace parsgd::ref
