#include "parsgd/simnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "parsgd/rng.hpp"

namespace parsgd {

double DelayModel::base_for(int worker_id) const {
    if (base_delay_s.empty())
        throw std::invalid_argument("delay model has no base delay");
    if (base_delay_s.size() == 1)
        return base_delay_s[0];
    return base_delay_s.at(static_cast<std::size_t>(worker_id));
}

double DelayModel::mean_base_s() const {
    if (base_delay_s.empty())
        throw std::invalid_argument("delay model has no base delay");
    double sum = 0.0;
    for (double b : base_delay_s)
        sum += b;
    return sum / static_cast<double>(base_delay_s.size());
}

std::int64_t DelayModel::sample_delay_us(int worker_id, int epoch) const {
    double delay_s = base_for(worker_id);
    if (jitter.kind != JitterSpec::Kind::None) {
        auto rng = KeyedRng::for_stream(seed, static_cast<std::uint64_t>(worker_id),
                                        static_cast<std::uint64_t>(epoch));
        if (jitter.kind == JitterSpec::Kind::Uniform)
            delay_s += rng.uniform(jitter.a, jitter.b);
        else
            delay_s += rng.exponential(jitter.a);
    }
    if (!std::isfinite(delay_s))
        throw std::invalid_argument("sampled delay is not finite");
    const auto us = static_cast<std::int64_t>(std::llround(delay_s * 1e6));
    return std::max<std::int64_t>(1, us);
}

void SimConfig::validate() const {
    if (n_workers < 1)
        throw std::invalid_argument("n_workers must be >= 1");
    if (epochs < 1)
        throw std::invalid_argument("epochs must be >= 1");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("learning_rate must be > 0");
    if (batch_size < 0)
        throw std::invalid_argument("batch_size must be >= 0");
    if (delta_t_init_us < 1)
        throw std::invalid_argument("delta_t_init must be positive");
    if (delta_t_floor_us < 1)
        throw std::invalid_argument("delta_t_floor must be positive");
    if (!(delta_t_smoothing >= 0.0 && delta_t_smoothing <= 1.0))
        throw std::invalid_argument("delta_t_smoothing must be in [0, 1]");
}

std::int64_t update_delta_t(std::int64_t old_delta_t_us, int collected, int n,
                            std::int64_t max_observed_rtt_us, double smoothing,
                            std::int64_t floor_us) {
    if (old_delta_t_us < 1)
        throw std::invalid_argument("delta_t must be positive");
    if (collected != n)
        return old_delta_t_us;
    const double blended = smoothing * static_cast<double>(max_observed_rtt_us) +
                           (1.0 - smoothing) * static_cast<double>(old_delta_t_us);
    return std::max<std::int64_t>(floor_us, static_cast<std::int64_t>(std::llround(blended)));
}

std::vector<WorkerUpdate> collect_replies(const ServerState& state, const Problem& problem,
                                          const AttackSpec& attack, const DelayModel& delays,
                                          const SimConfig& cfg) {
    const int n = cfg.n_workers;
    std::vector<std::optional<WorkerUpdate>> slots(static_cast<std::size_t>(n));

    // Per-worker work is independent and keyed; results merge in worker-id
    // order so the trace does not depend on physical parallelism.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        if (!is_active(i, state.epoch, attack))
            continue;
        WorkerUpdate raw;
        raw.worker_id = i;
        raw.epoch = state.epoch;
        raw.gradient = problem.local_gradient(state.w, i, cfg.batch_size, cfg.seed, state.epoch);
        auto sent = corrupt(raw, attack);
        if (!sent)
            continue;
        sent->arrival_time_us = state.clock_us + delays.sample_delay_us(i, state.epoch);
        slots[static_cast<std::size_t>(i)] = std::move(*sent);
    }

    std::vector<WorkerUpdate> events;
    events.reserve(static_cast<std::size_t>(n));
    for (auto& slot : slots)
        if (slot)
            events.push_back(std::move(*slot));
    // nondecreasing simulated time; equal-time ties by worker id
    std::stable_sort(events.begin(), events.end(),
                     [](const WorkerUpdate& a, const WorkerUpdate& b) {
                         if (a.arrival_time_us != b.arrival_time_us)
                             return a.arrival_time_us < b.arrival_time_us;
                         return a.worker_id < b.worker_id;
                     });
    return events;
}

namespace {

double epoch_learning_rate(const SimConfig& cfg, int epoch) {
    if (cfg.lr_decay == LrDecay::InvSqrt)
        return cfg.learning_rate / std::sqrt(static_cast<double>(epoch));
    return cfg.learning_rate;
}

void fill_metrics(EpochReport& report, const Problem& problem, const GradientVector& w) {
    const auto train = problem.evaluate(w, Split::Train);
    const auto test = problem.evaluate(w, Split::Test);
    report.train_loss = train.loss;
    report.test_loss = test.loss;
    report.top1 = test.top1;
    report.topk = test.topk;
}

} // namespace

EpochReport run_epoch(ServerState& state, const Problem& problem, const AggregationRule& rule,
                      const AttackSpec& attack, const DelayModel& delays, const SimConfig& cfg) {
    EpochReport report;
    report.epoch = state.epoch;
    report.delta_t_us = state.delta_t_us;

    const auto events = collect_replies(state, problem, attack, delays, cfg);

    std::vector<GradientVector> admitted;
    std::int64_t max_rtt = 0;
    if (cfg.strict_synchronous) {
        // wait for all n replies; a missing worker means waiting forever
        if (static_cast<int>(events.size()) < cfg.n_workers) {
            report.status = EpochStatus::Stalled;
            report.collected = static_cast<int>(events.size());
            report.inferred_c = cfg.n_workers - report.collected;
            fill_metrics(report, problem, state.w);
            return report;
        }
        for (const auto& e : events) {
            admitted.push_back(e.gradient);
            max_rtt = std::max(max_rtt, e.arrival_time_us - state.clock_us);
        }
        state.clock_us += max_rtt;
    } else {
        const std::int64_t deadline = state.clock_us + 2 * state.delta_t_us;
        for (const auto& e : events) {
            if (e.arrival_time_us > deadline)
                break; // events are time-ordered; everything later is late too
            admitted.push_back(e.gradient);
            max_rtt = std::max(max_rtt, e.arrival_time_us - state.clock_us);
        }
        state.clock_us += 2 * state.delta_t_us;
    }

    report.collected = static_cast<int>(admitted.size());
    report.inferred_c = cfg.n_workers - report.collected;
    report.max_rtt_us = max_rtt;

    if (admitted.empty()) {
        // starved: freeze parameters, widen the window, try again
        report.status = EpochStatus::Starved;
        state.delta_t_us *= 2;
        report.delta_t_us = state.delta_t_us;
        fill_metrics(report, problem, state.w);
        return report;
    }

    report.f_used = compute_f(report.collected);

    const auto t0 = std::chrono::steady_clock::now();
    const GradientVector u = aggregate(rule, admitted, report.f_used);
    const auto t1 = std::chrono::steady_clock::now();
    report.agg_wallclock_us =
        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();

    const double gamma = epoch_learning_rate(cfg, state.epoch);
    std::vector<double> next(state.w.dim());
    for (std::size_t k = 0; k < next.size(); ++k)
        next[k] = state.w[k] - gamma * u[k];
    state.w = GradientVector(std::move(next));

    state.delta_t_us = update_delta_t(state.delta_t_us, report.collected, cfg.n_workers, max_rtt,
                                      cfg.delta_t_smoothing, cfg.delta_t_floor_us);
    report.delta_t_us = state.delta_t_us;

    fill_metrics(report, problem, state.w);
    return report;
}

TrainingResult run_training(const Problem& problem, const AggregationRule& rule,
                            const AttackSpec& attack, const DelayModel& delays,
                            const SimConfig& cfg) {
    cfg.validate();
    attack.validate();
    if (attack.n_workers != cfg.n_workers)
        throw std::invalid_argument("attack spec and sim config disagree on n_workers");
    if (problem.kind() != ProblemKind::Quadratic) {
        if (problem.n_workers() != cfg.n_workers)
            throw std::invalid_argument("problem shards and sim config disagree on n_workers");
        // fail here rather than inside the parallel gradient loop
        for (const auto& shard : problem.shards())
            if (static_cast<std::size_t>(cfg.batch_size) > shard.train.size())
                throw std::invalid_argument("batch size exceeds shard size");
    }

    TrainingResult result;
    ServerState state;
    state.w = problem.initial_parameters(cfg.seed);
    state.delta_t_us = cfg.delta_t_init_us;
    state.clock_us = 0;

    for (int t = 1; t <= cfg.epochs; ++t) {
        state.epoch = t;
        EpochReport report = run_epoch(state, problem, rule, attack, delays, cfg);
        const EpochStatus status = report.status;
        result.epochs.push_back(std::move(report));

        if (status == EpochStatus::Stalled) {
            result.status = RunStatus::Stalled;
            break;
        }
        if (status == EpochStatus::Starved) {
            bool anyone_left = false;
            for (int i = 0; i < cfg.n_workers && !anyone_left; ++i)
                anyone_left = is_active(i, t, attack);
            if (!anyone_left) { // crash-stop is permanent; no epoch can ever collect
                result.status = RunStatus::StarvedAbort;
                break;
            }
        }
    }
    result.final_w = state.w;
    return result;
}

} // namespace parsgd
