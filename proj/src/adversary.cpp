#include "parsgd/adversary.hpp"

#include <cmath>
#include <stdexcept>

#include "parsgd/rng.hpp"

namespace parsgd {

namespace {
// sub-stream tags so per-purpose draws never collide
constexpr std::uint64_t kScaleStream = 0xa77ac4ull;
constexpr std::uint64_t kNoiseStream = 0x6e015eull;
} // namespace

AttackSpec AttackSpec::none(int n_workers) {
    AttackSpec s;
    s.n_workers = n_workers;
    s.validate();
    return s;
}

AttackSpec AttackSpec::bitflip(int n_workers, int f, double scale, std::uint64_t seed) {
    AttackSpec s;
    s.n_workers = n_workers;
    s.kind = AttackKind::BitFlip;
    s.bitflip_scale = scale;
    s.seed = seed;
    for (int i = 0; i < f; ++i)
        s.byzantine_ids.insert(i);
    s.validate();
    return s;
}

AttackSpec AttackSpec::gaussian(int n_workers, int f, double mean, double sigma,
                                std::uint64_t seed) {
    AttackSpec s;
    s.n_workers = n_workers;
    s.kind = AttackKind::Gaussian;
    s.gaussian_mean = mean;
    s.gaussian_sigma = sigma;
    s.seed = seed;
    for (int i = 0; i < f; ++i)
        s.byzantine_ids.insert(i);
    s.validate();
    return s;
}

AttackSpec AttackSpec::crash(int n_workers, int c, int crash_epoch) {
    AttackSpec s;
    s.n_workers = n_workers;
    for (int i = n_workers - c; i < n_workers; ++i)
        s.crash_epochs[i] = crash_epoch;
    s.validate();
    return s;
}

void AttackSpec::validate() const {
    if (n_workers < 1)
        throw std::invalid_argument("attack spec needs n_workers >= 1");
    for (int id : byzantine_ids)
        if (id < 0 || id >= n_workers)
            throw std::invalid_argument("byzantine worker id out of range");
    for (const auto& [id, epoch] : crash_epochs) {
        if (id < 0 || id >= n_workers)
            throw std::invalid_argument("crash worker id out of range");
        if (epoch < 0)
            throw std::invalid_argument("crash epoch must be >= 0");
        if (byzantine_ids.count(id) > 0)
            throw std::invalid_argument("worker listed as both byzantine and crash");
    }
    if (byzantine_ids.size() + crash_epochs.size() > static_cast<std::size_t>(n_workers))
        throw std::invalid_argument("more faulty workers than workers");
    if (!(bitflip_scale >= 0.0) || !std::isfinite(bitflip_scale))
        throw std::invalid_argument("bitflip scale must be a finite value >= 0");
    if (!(gaussian_sigma >= 0.0) || !std::isfinite(gaussian_sigma))
        throw std::invalid_argument("gaussian sigma must be a finite value >= 0");
    if (!std::isfinite(gaussian_mean))
        throw std::invalid_argument("gaussian mean must be finite");
}

double AttackSpec::bitflip_coefficient(int worker_id) const {
    if (!bitflip_random_scale)
        return bitflip_scale;
    // sampled once per worker, identical every epoch
    auto rng = KeyedRng::for_stream(seed, static_cast<std::uint64_t>(worker_id), kScaleStream);
    return rng.uniform(0.5, 2.0);
}

std::string AttackSpec::name() const {
    std::string base;
    switch (kind) {
    case AttackKind::None: base = "none"; break;
    case AttackKind::BitFlip: base = "bitflip"; break;
    case AttackKind::Gaussian: base = "gaussian"; break;
    }
    if (!byzantine_ids.empty())
        base += "-f" + std::to_string(byzantine_ids.size());
    if (!crash_epochs.empty())
        base += "-c" + std::to_string(crash_epochs.size());
    return base;
}

bool is_active(int worker_id, int epoch, const AttackSpec& spec) {
    if (worker_id < 0 || worker_id >= spec.n_workers)
        throw std::invalid_argument("unknown worker id");
    const auto it = spec.crash_epochs.find(worker_id);
    if (it == spec.crash_epochs.end())
        return true;
    return epoch < it->second;
}

std::optional<WorkerUpdate> corrupt(const WorkerUpdate& update, const AttackSpec& spec) {
    if (!is_active(update.worker_id, update.epoch, spec))
        return std::nullopt;
    if (!spec.is_byzantine(update.worker_id) || spec.kind == AttackKind::None)
        return update;

    const std::size_t d = update.gradient.dim();
    std::vector<double> out(d);
    if (spec.kind == AttackKind::BitFlip) {
        const double c = spec.bitflip_coefficient(update.worker_id);
        for (std::size_t k = 0; k < d; ++k)
            out[k] = -c * update.gradient[k];
    } else {
        // fresh noise every epoch: pretend-correct workers vary like honest ones
        auto rng = KeyedRng::for_stream(spec.seed ^ kNoiseStream,
                                        static_cast<std::uint64_t>(update.worker_id),
                                        static_cast<std::uint64_t>(update.epoch));
        for (std::size_t k = 0; k < d; ++k)
            out[k] = rng.normal(spec.gaussian_mean, spec.gaussian_sigma);
    }
    WorkerUpdate corrupted = update;
    corrupted.gradient = GradientVector(std::move(out));
    return corrupted;
}

} // namespace parsgd
