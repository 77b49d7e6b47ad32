#ifndef PARSGD_ADVERSARY_HPP
#define PARSGD_ADVERSARY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "parsgd/gradient_vector.hpp"

namespace parsgd {

enum class AttackKind { None, BitFlip, Gaussian };

struct WorkerUpdate {
    int worker_id = 0;
    int epoch = 0;
    GradientVector gradient;
    std::int64_t arrival_time_us = 0;
};

/*
 * Which workers misbehave and how. Byzantine and crash sets are disjoint
 * (each worker counts once toward b = f + c). Corruption is keyed by
 * (seed, worker, epoch), so it is reproducible under any evaluation order.
 */
struct AttackSpec {
    int n_workers = 0;
    std::set<int> byzantine_ids;
    std::map<int, int> crash_epochs; // worker id -> first silent epoch
    AttackKind kind = AttackKind::None;
    double bitflip_scale = 1.0;      // the constant c_i
    bool bitflip_random_scale = false; // c_i ~ Uniform[0.5, 2] once per worker
    double gaussian_mean = 0.0;
    double gaussian_sigma = 0.0;
    std::uint64_t seed = 0;

    static AttackSpec none(int n_workers);
    static AttackSpec bitflip(int n_workers, int f, double scale = 1.0,
                              std::uint64_t seed = 0);
    static AttackSpec gaussian(int n_workers, int f, double mean, double sigma,
                               std::uint64_t seed = 0);
    // c workers crash-stop at crash_epoch; ids taken from the top of the range
    static AttackSpec crash(int n_workers, int c, int crash_epoch = 0);

    void validate() const; // throws on any violated invariant
    bool is_byzantine(int worker_id) const { return byzantine_ids.count(worker_id) > 0; }
    double bitflip_coefficient(int worker_id) const;
    int byzantine_count() const { return static_cast<int>(byzantine_ids.size()); }
    int crash_count() const { return static_cast<int>(crash_epochs.size()); }
    std::string name() const;
};

// false iff the worker has crash-stopped by this epoch; monotone per worker.
bool is_active(int worker_id, int epoch, const AttackSpec& spec);

/*
 * Apply the attack to one update. Crashed workers yield nullopt (dropped,
 * forever); honest workers pass through bit-identical. Never fails:
 * misconfiguration is caught by AttackSpec::validate.
 */
std::optional<WorkerUpdate> corrupt(const WorkerUpdate& update, const AttackSpec& spec);

} // namespace parsgd

#endif
