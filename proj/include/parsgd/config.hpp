#ifndef PARSGD_CONFIG_HPP
#define PARSGD_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parsgd/aggregators.hpp"
#include "parsgd/problems.hpp"
#include "parsgd/simnet.hpp"

namespace parsgd {

struct ProblemConfig {
    std::string kind = "logistic"; // quadratic | logistic | tiny-mlp
    int features = 2;
    int classes = 2;
    int hidden_units = 8;
    int samples_per_worker = 20;
    double separation = 3.0;
    double noise = 1.0;
    double l2_lambda = 0.0;
    double train_fraction = 0.8;
    std::uint64_t dataset_seed = 0;
    std::vector<double> quadratic_target; // quadratic only
    std::string idx_images;               // optional IDX loader paths
    std::string idx_labels;
};

struct RuleConfig {
    std::string kind = "mean"; // mean | median | trimmed-mean | krum | multi-krum | parsgd
    double beta = 0.1;         // trimmed-mean
    int f = 0;                 // krum / multi-krum declared f
    int m = 1;                 // multi-krum
    std::string mode = "per-coordinate"; // parsgd: per-coordinate | per-vector
};

struct AttackConfig {
    std::string kind = "none"; // none | bitflip | gaussian (crash via c > 0)
    std::string preset;        // bitflip | gaussian-far | gaussian-pretend | crash
    int f = 0;                 // byzantine count
    int c = 0;                 // crash-stop count
    int crash_epoch = 0;
    double scale = 1.0; // bitflip c_i
    bool random_scale = false;
    double mean = 0.0; // gaussian
    double sigma = 0.0;
};

struct DelayConfig {
    std::vector<double> base_delay_s = {0.05}; // one entry or one per worker
    std::string jitter_kind = "none";          // none | uniform | exponential
    double jitter_low_s = 0.0;                 // uniform low / exponential mean
    double jitter_high_s = 0.0;                // uniform high
    std::uint64_t seed = 0;
};

/*
 * The whole experiment grid: rules x attacks x f-sweep. Serializes to a
 * single human-editable JSON file and parses back to an identical value.
 */
struct ExperimentConfig {
    int n_workers = 50;
    int epochs = 200;
    double learning_rate = 0.05;
    std::string lr_decay = "constant"; // constant | inv-sqrt
    int batch_size = 100;
    std::uint64_t seed = 0;
    bool strict_synchronous = false;
    std::optional<double> delta_t_initial_s; // default: 2x mean base delay
    double delta_t_floor_s = 0.001;
    double delta_t_smoothing = 0.5;
    double converged_factor = 1.05;
    std::string output_dir = "traces";
    ProblemConfig problem;
    DelayConfig delay;
    std::vector<RuleConfig> rules;
    std::vector<AttackConfig> attacks;
    std::vector<int> f_sweep;

    // every violated constraint with its field path; empty means valid
    std::vector<std::string> validate() const;
    // advisory flags (near-boundary f values etc.), never fatal
    std::vector<std::string> warnings() const;

    std::string serialize() const; // canonical pretty JSON
    static ExperimentConfig parse(const std::string& json_text);
    static ExperimentConfig load(const std::string& path);

    // stable across runs; changes iff a semantically meaningful field
    // changes (output_dir excluded)
    std::string semantic_hash() const;

    double effective_delta_t_initial_s() const;

    // materialized pieces (validate() must be clean before calling)
    Problem build_problem() const;
    DelayModel build_delay_model() const;
    SimConfig build_sim_config() const;
    AggregationRule build_rule(const RuleConfig& rc) const;
    AttackSpec build_attack(const AttackConfig& ac, std::optional<int> f_override) const;

    friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

// preset expansion used while parsing attack entries
AttackConfig expand_attack_preset(const AttackConfig& raw);

} // namespace parsgd

#endif
