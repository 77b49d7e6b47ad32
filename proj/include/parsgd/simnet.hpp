#ifndef PARSGD_SIMNET_HPP
#define PARSGD_SIMNET_HPP

#include <cstdint>
#include <vector>

#include "parsgd/adversary.hpp"
#include "parsgd/aggregators.hpp"
#include "parsgd/gradient_vector.hpp"
#include "parsgd/problems.hpp"

namespace parsgd {

/*
 * Per-worker reply delay, simulated in integer microseconds so event
 * ordering never suffers float drift. Sampled delays are > 0 and finite,
 * keyed by (seed, worker, epoch).
 */
struct JitterSpec {
    enum class Kind { None, Uniform, Exponential };
    Kind kind = Kind::None;
    double a = 0.0; // Uniform: low seconds; Exponential: mean seconds
    double b = 0.0; // Uniform: high seconds
};

struct DelayModel {
    std::vector<double> base_delay_s; // one entry, or one per worker
    JitterSpec jitter;
    std::uint64_t seed = 0;

    double base_for(int worker_id) const;
    std::int64_t sample_delay_us(int worker_id, int epoch) const;
    double mean_base_s() const;
};

enum class LrDecay { Constant, InvSqrt };
enum class EpochStatus { Normal, Starved, Stalled };
enum class RunStatus { Completed, Stalled, StarvedAbort };

struct EpochReport {
    int epoch = 0;
    int collected = 0;
    int inferred_c = 0;
    int f_used = 0;
    std::int64_t delta_t_us = 0;
    std::int64_t max_rtt_us = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double top1 = 0.0;
    double topk = 0.0;
    std::int64_t agg_wallclock_us = 0;
    EpochStatus status = EpochStatus::Normal;
};

struct ServerState {
    GradientVector w;
    std::int64_t delta_t_us = 0;
    std::int64_t clock_us = 0;
    int epoch = 0;
};

struct SimConfig {
    int n_workers = 1;
    int epochs = 1;
    double learning_rate = 0.05;
    LrDecay lr_decay = LrDecay::Constant;
    int batch_size = 0; // 0 = full shard
    bool strict_synchronous = false;
    std::int64_t delta_t_init_us = 0;
    std::int64_t delta_t_floor_us = 1000; // 1 ms
    double delta_t_smoothing = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainingResult {
    std::vector<EpochReport> epochs;
    RunStatus status = RunStatus::Completed;
    GradientVector final_w;
};

/*
 * Smoothed max-RTT recalculation, applied only when every worker responded
 * (collected == n); otherwise deltat is left alone. Floored so a degenerate
 * RTT cannot deadlock the collection window.
 */
std::int64_t update_delta_t(std::int64_t old_delta_t_us, int collected, int n,
                            std::int64_t max_observed_rtt_us, double smoothing,
                            std::int64_t floor_us);

/*
 * One broadcast-compute-collect-aggregate-update round. Admits every reply
 * with arrival <= epoch_start + 2*deltat (partial synchrony) or waits for all
 * n replies (strict synchrony; reports Stalled when someone never replies).
 * A starved epoch leaves w frozen and doubles deltat.
 */
EpochReport run_epoch(ServerState& state, const Problem& problem, const AggregationRule& rule,
                      const AttackSpec& attack, const DelayModel& delays, const SimConfig& cfg);

// The full T-epoch loop; stops early on Stalled or on a starved epoch with
// no active worker left (StarvedAbort).
TrainingResult run_training(const Problem& problem, const AggregationRule& rule,
                            const AttackSpec& attack, const DelayModel& delays,
                            const SimConfig& cfg);

// The epoch's reply events in processing order (time, then worker id);
// exposed for the event-ordering and collection tests.
std::vector<WorkerUpdate> collect_replies(const ServerState& state, const Problem& problem,
                                          const AttackSpec& attack, const DelayModel& delays,
                                          const SimConfig& cfg);

} // namespace parsgd

#endif
