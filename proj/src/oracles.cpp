#include "parsgd/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "parsgd/stats.hpp"

namespace parsgd::oracles {

namespace {

std::vector<GradientVector> collected_set(const LabeledRound& round) {
    std::vector<GradientVector> all;
    all.reserve(round.correct.size() + round.byzantine.size());
    for (const auto& v : round.correct)
        all.push_back(v);
    for (const auto& v : round.byzantine)
        all.push_back(v);
    return all;
}

} // namespace

WeakCheck check_weak_resilience(const LabeledRound& round, int f, int c) {
    if (round.correct.empty())
        throw std::invalid_argument("round needs at least one correct vector");
    if (static_cast<std::size_t>(f) != round.byzantine.size())
        throw std::invalid_argument("declared f disagrees with the round contents");
    if (c < 0)
        throw std::invalid_argument("crash count must be >= 0");

    WeakCheck result;
    const int n = static_cast<int>(round.correct.size()) + f + c;
    if (!(n > 2 * f + c))
        result.violated.push_back("n > 2f + c");

    const auto all = collected_set(round);
    const auto g = stats::coordinate_wise_median(all);
    if (g.dim() != round.mu.dim())
        throw std::invalid_argument("dimension mismatch");
    for (std::size_t k = 0; k < g.dim(); ++k) {
        if (std::abs(g[k] - round.mu[k]) > round.epsilon) {
            result.violated.push_back("|g_k - mu_k| <= epsilon at coordinate " +
                                      std::to_string(k));
        }
    }
    result.holds = result.violated.empty();
    return result;
}

bool check_strong_condition(const LabeledRound& round) {
    if (round.correct.empty())
        throw std::invalid_argument("round needs at least one correct vector");
    if (round.byzantine.empty())
        return true; // no attacker to be closer
    const auto all = collected_set(round);
    const auto g = stats::coordinate_wise_median(all);
    for (std::size_t k = 0; k < g.dim(); ++k) {
        double far_correct = 0.0;
        for (const auto& v : round.correct)
            far_correct = std::max(far_correct, std::abs(g[k] - v[k]));
        double close_byz = std::numeric_limits<double>::infinity();
        for (const auto& b : round.byzantine)
            close_byz = std::min(close_byz, std::abs(g[k] - b[k]));
        if (!(far_correct < close_byz))
            return false;
    }
    return true;
}

bool breakdown_trial(int m, KeyedRng& rng, double outlier_magnitude) {
    if (m < 3 || m % 2 == 0)
        throw std::invalid_argument("breakdown trial needs odd m >= 3");
    std::vector<double> points(static_cast<std::size_t>(m));
    for (auto& p : points)
        p = rng.normal(0.0, 1.0);

    const int corrupted = (m - 1) / 2;
    std::vector<double> contaminated = points;
    for (int i = 0; i < corrupted; ++i) {
        const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        contaminated[static_cast<std::size_t>(i)] = sign * rng.uniform(0.0, outlier_magnitude);
    }

    double lo = points[static_cast<std::size_t>(corrupted)];
    double hi = lo;
    for (int i = corrupted; i < m; ++i) { // the untouched points
        lo = std::min(lo, points[static_cast<std::size_t>(i)]);
        hi = std::max(hi, points[static_cast<std::size_t>(i)]);
    }
    const double med = stats::median_in_place(contaminated);
    return med >= lo && med <= hi;
}

namespace {

BoundReport bound_report_from_trials(int f, double sigma, const std::vector<double>& sq_devs) {
    BoundReport report;
    report.trials = static_cast<long>(sq_devs.size());
    const double inv = 1.0 / static_cast<double>(sq_devs.size());
    double mean = 0.0;
    for (double v : sq_devs) // fixed trial order
        mean += v;
    mean *= inv;
    double var = 0.0;
    for (double v : sq_devs) {
        const double dev = v - mean;
        var += dev * dev;
    }
    var *= inv;
    report.empirical_mse = mean;
    report.standard_error = std::sqrt(var * inv);
    const double fp1 = static_cast<double>(f) + 1.0;
    report.theoretical_bound = static_cast<double>(f) * sigma * sigma / (fp1 * fp1);
    report.eta = std::sqrt(static_cast<double>(f)) * sigma / fp1;
    report.passes = report.empirical_mse <= report.theoretical_bound + 3.0 * report.standard_error;
    return report;
}

BoundReport run_bound_trials(int f, double sigma, double sigma_byz, bool with_byzantine,
                             double mu, long trials, SelectionMode mode, std::uint64_t seed) {
    if (f < 1)
        throw std::invalid_argument("bound check needs f >= 1");
    if (trials < 10000)
        throw std::invalid_argument("trials too small");
    const int n = 2 * f + 1;
    std::vector<double> sq_devs(static_cast<std::size_t>(trials));

    // per-trial keyed streams: the reported aggregate cannot depend on
    // execution order
#pragma omp parallel
    {
        std::vector<GradientVector> values;
        values.reserve(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
        for (long trial = 0; trial < trials; ++trial) {
            auto rng = KeyedRng::for_stream(seed, 0x6d5eull, static_cast<std::uint64_t>(trial));
            values.clear();
            for (int i = 0; i < n; ++i) {
                const bool byz = with_byzantine && i < f;
                const double s = byz ? sigma_byz : sigma;
                values.push_back(GradientVector{rng.normal(mu, s)});
            }
            const auto u = aggregate_parsgd(values, f, mode);
            const double dev = u[0] - mu;
            sq_devs[static_cast<std::size_t>(trial)] = dev * dev;
        }
    }
    return bound_report_from_trials(f, sigma, sq_devs);
}

} // namespace

BoundReport variance_bound_monte_carlo(int f, double sigma, double mu, long trials,
                                       SelectionMode mode, std::uint64_t seed) {
    return run_bound_trials(f, sigma, 0.0, false, mu, trials, mode, seed);
}

BoundReport pretend_correct_monte_carlo(int f, double sigma, double sigma_byz, double mu,
                                        long trials, SelectionMode mode, std::uint64_t seed) {
    return run_bound_trials(f, sigma, sigma_byz, true, mu, trials, mode, seed);
}

LabeledRound make_strong_round(int f, int d, KeyedRng& rng) {
    if (f < 1 || d < 1)
        throw std::invalid_argument("strong round needs f >= 1 and d >= 1");
    LabeledRound round;
    std::vector<double> mu(static_cast<std::size_t>(d));
    for (auto& m : mu)
        m = rng.uniform(-10.0, 10.0);

    for (int i = 0; i < f + 1; ++i) {
        std::vector<double> v(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k)
            v[static_cast<std::size_t>(k)] = mu[static_cast<std::size_t>(k)] + rng.uniform(-1.0, 1.0);
        round.correct.emplace_back(std::move(v));
    }
    for (int i = 0; i < f; ++i) {
        std::vector<double> b(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) {
            const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            b[static_cast<std::size_t>(k)] = mu[static_cast<std::size_t>(k)] + sign * rng.uniform(5.0, 100.0);
        }
        round.byzantine.emplace_back(std::move(b));
    }
    round.mu = GradientVector(std::move(mu));
    round.epsilon = 1.0;
    return round;
}

bool selection_excludes_byzantine(const NeighborSelection& sel, std::size_t n_correct) {
    if (sel.mode == SelectionMode::PerVector) {
        for (std::size_t idx : sel.vector_indices)
            if (idx >= n_correct)
                return false;
        return true;
    }
    for (const auto& sources : sel.coordinate_sources)
        for (std::size_t idx : sources)
            if (idx >= n_correct)
                return false;
    return true;
}

} // namespace parsgd::oracles
