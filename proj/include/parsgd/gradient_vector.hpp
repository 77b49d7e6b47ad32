#ifndef PARSGD_GRADIENT_VECTOR_HPP
#define PARSGD_GRADIENT_VECTOR_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace parsgd {

/*
 * Dense d-dimensional gradient. Coordinates are validated finite on
 * construction and the object is immutable afterwards; corrupted gradients
 * produced by attacks are still finite reals, so non-finite values can only
 * indicate a bug and are rejected outright.
 */
class GradientVector {
public:
    GradientVector() = default;

    explicit GradientVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty())
            throw std::invalid_argument("gradient vector must have dimension >= 1");
        for (double v : values_)
            if (!std::isfinite(v))
                throw std::invalid_argument("non-finite coordinate in gradient vector");
    }

    GradientVector(std::initializer_list<double> values)
        : GradientVector(std::vector<double>(values)) {}

    static GradientVector zeros(std::size_t dim) {
        return GradientVector(std::vector<double>(dim, 0.0));
    }

    std::size_t dim() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::span<const double> span() const noexcept { return values_; }

    friend bool operator==(const GradientVector& a, const GradientVector& b) = default;

private:
    std::vector<double> values_;
};

} // namespace parsgd

#endif
