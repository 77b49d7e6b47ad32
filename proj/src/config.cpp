#include "parsgd/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace parsgd {

using nlohmann::json;

namespace {

json to_json(const ProblemConfig& p) {
    json j;
    j["kind"] = p.kind;
    j["features"] = p.features;
    j["classes"] = p.classes;
    j["hidden_units"] = p.hidden_units;
    j["samples_per_worker"] = p.samples_per_worker;
    j["separation"] = p.separation;
    j["noise"] = p.noise;
    j["l2_lambda"] = p.l2_lambda;
    j["train_fraction"] = p.train_fraction;
    j["dataset_seed"] = p.dataset_seed;
    if (!p.quadratic_target.empty())
        j["quadratic_target"] = p.quadratic_target;
    if (!p.idx_images.empty()) {
        j["idx_images"] = p.idx_images;
        j["idx_labels"] = p.idx_labels;
    }
    return j;
}

ProblemConfig problem_from_json(const json& j) {
    ProblemConfig p;
    p.kind = j.value("kind", p.kind);
    p.features = j.value("features", p.features);
    p.classes = j.value("classes", p.classes);
    p.hidden_units = j.value("hidden_units", p.hidden_units);
    p.samples_per_worker = j.value("samples_per_worker", p.samples_per_worker);
    p.separation = j.value("separation", p.separation);
    p.noise = j.value("noise", p.noise);
    p.l2_lambda = j.value("l2_lambda", p.l2_lambda);
    p.train_fraction = j.value("train_fraction", p.train_fraction);
    p.dataset_seed = j.value("dataset_seed", p.dataset_seed);
    if (j.contains("quadratic_target"))
        p.quadratic_target = j["quadratic_target"].get<std::vector<double>>();
    p.idx_images = j.value("idx_images", p.idx_images);
    p.idx_labels = j.value("idx_labels", p.idx_labels);
    return p;
}

json to_json(const RuleConfig& r) {
    json j;
    j["kind"] = r.kind;
    if (r.kind == "trimmed-mean")
        j["beta"] = r.beta;
    if (r.kind == "krum" || r.kind == "multi-krum")
        j["f"] = r.f;
    if (r.kind == "multi-krum")
        j["m"] = r.m;
    if (r.kind == "parsgd")
        j["mode"] = r.mode;
    return j;
}

RuleConfig rule_from_json(const json& j) {
    RuleConfig r;
    r.kind = j.value("kind", r.kind);
    r.beta = j.value("beta", r.beta);
    r.f = j.value("f", r.f);
    r.m = j.value("m", r.m);
    r.mode = j.value("mode", r.mode);
    return r;
}

json to_json(const AttackConfig& a) {
    json j;
    j["kind"] = a.kind;
    if (a.f > 0)
        j["f"] = a.f;
    if (a.c > 0) {
        j["c"] = a.c;
        j["crash_epoch"] = a.crash_epoch;
    }
    if (a.kind == "bitflip") {
        if (a.random_scale)
            j["scale"] = "random";
        else
            j["scale"] = a.scale;
    }
    if (a.kind == "gaussian") {
        j["mean"] = a.mean;
        j["sigma"] = a.sigma;
    }
    return j;
}

AttackConfig attack_from_json(const json& j) {
    AttackConfig a;
    a.preset = j.value("preset", a.preset);
    a.kind = j.value("kind", a.kind);
    a.f = j.value("f", a.f);
    a.c = j.value("c", a.c);
    a.crash_epoch = j.value("crash_epoch", a.crash_epoch);
    if (j.contains("scale")) {
        if (j["scale"].is_string() && j["scale"].get<std::string>() == "random")
            a.random_scale = true;
        else
            a.scale = j["scale"].get<double>();
    }
    a.mean = j.value("mean", a.mean);
    a.sigma = j.value("sigma", a.sigma);
    return expand_attack_preset(a);
}

json to_json(const DelayConfig& d) {
    json j;
    if (d.base_delay_s.size() == 1)
        j["base_delay_s"] = d.base_delay_s[0];
    else
        j["base_delay_s"] = d.base_delay_s;
    json jit;
    jit["kind"] = d.jitter_kind;
    if (d.jitter_kind == "uniform") {
        jit["low_s"] = d.jitter_low_s;
        jit["high_s"] = d.jitter_high_s;
    } else if (d.jitter_kind == "exponential") {
        jit["mean_s"] = d.jitter_low_s;
    }
    j["jitter"] = jit;
    j["seed"] = d.seed;
    return j;
}

DelayConfig delay_from_json(const json& j) {
    DelayConfig d;
    if (j.contains("base_delay_s")) {
        if (j["base_delay_s"].is_array())
            d.base_delay_s = j["base_delay_s"].get<std::vector<double>>();
        else
            d.base_delay_s = {j["base_delay_s"].get<double>()};
    }
    if (j.contains("jitter")) {
        const auto& jit = j["jitter"];
        d.jitter_kind = jit.value("kind", d.jitter_kind);
        if (d.jitter_kind == "uniform") {
            d.jitter_low_s = jit.value("low_s", 0.0);
            d.jitter_high_s = jit.value("high_s", 0.0);
        } else if (d.jitter_kind == "exponential") {
            d.jitter_low_s = jit.value("mean_s", 0.0);
        }
    }
    d.seed = j.value("seed", d.seed);
    return d;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["n_workers"] = c.n_workers;
    j["epochs"] = c.epochs;
    j["learning_rate"] = c.learning_rate;
    j["lr_decay"] = c.lr_decay;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    j["strict_synchronous"] = c.strict_synchronous;
    json dt;
    if (c.delta_t_initial_s)
        dt["initial_s"] = *c.delta_t_initial_s;
    dt["floor_s"] = c.delta_t_floor_s;
    dt["smoothing"] = c.delta_t_smoothing;
    j["delta_t"] = dt;
    j["converged_factor"] = c.converged_factor;
    j["output_dir"] = c.output_dir;
    j["problem"] = to_json(c.problem);
    j["delay_model"] = to_json(c.delay);
    j["rules"] = json::array();
    for (const auto& r : c.rules)
        j["rules"].push_back(to_json(r));
    j["attacks"] = json::array();
    for (const auto& a : c.attacks)
        j["attacks"].push_back(to_json(a));
    if (!c.f_sweep.empty())
        j["f_sweep"] = c.f_sweep;
    return j;
}

} // namespace

AttackConfig expand_attack_preset(const AttackConfig& raw) {
    if (raw.preset.empty())
        return raw;
    AttackConfig a = raw;
    if (raw.preset == "bitflip") {
        a.kind = "bitflip";
        a.scale = 1.0;
    } else if (raw.preset == "gaussian-far") {
        a.kind = "gaussian";
        a.mean = -1e8;
        a.sigma = 1.0;
    } else if (raw.preset == "gaussian-pretend") {
        a.kind = "gaussian";
        a.mean = 0.0;
        a.sigma = 200.0;
    } else if (raw.preset == "crash") {
        a.kind = "none";
        if (a.c == 0)
            a.c = 5;
        a.crash_epoch = 0;
    } else {
        throw std::invalid_argument("unknown attack preset: " + raw.preset);
    }
    a.preset.clear();
    return a;
}

std::string ExperimentConfig::serialize() const { return to_json(*this).dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::parse(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    try {
        c.n_workers = j.value("n_workers", c.n_workers);
        c.epochs = j.value("epochs", c.epochs);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.lr_decay = j.value("lr_decay", c.lr_decay);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.seed = j.value("seed", c.seed);
        c.strict_synchronous = j.value("strict_synchronous", c.strict_synchronous);
        if (j.contains("delta_t")) {
            const auto& dt = j["delta_t"];
            if (dt.contains("initial_s"))
                c.delta_t_initial_s = dt["initial_s"].get<double>();
            c.delta_t_floor_s = dt.value("floor_s", c.delta_t_floor_s);
            c.delta_t_smoothing = dt.value("smoothing", c.delta_t_smoothing);
        }
        c.converged_factor = j.value("converged_factor", c.converged_factor);
        c.output_dir = j.value("output_dir", c.output_dir);
        if (j.contains("problem"))
            c.problem = problem_from_json(j["problem"]);
        if (j.contains("delay_model"))
            c.delay = delay_from_json(j["delay_model"]);
        if (j.contains("rules"))
            for (const auto& r : j["rules"])
                c.rules.push_back(rule_from_json(r));
        if (j.contains("attacks"))
            for (const auto& a : j["attacks"])
                c.attacks.push_back(attack_from_json(a));
        if (j.contains("f_sweep"))
            c.f_sweep = j["f_sweep"].get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed config field: ") + e.what());
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    const auto require = [&](bool ok, const std::string& msg) {
        if (!ok)
            errors.push_back(msg);
    };
    require(n_workers >= 1, "n_workers: must be >= 1");
    require(epochs >= 1, "epochs: must be >= 1");
    require(learning_rate > 0.0 && std::isfinite(learning_rate),
            "learning_rate: must be > 0");
    require(lr_decay == "constant" || lr_decay == "inv-sqrt",
            "lr_decay: must be constant or inv-sqrt");
    require(batch_size >= 0, "batch_size: must be >= 0");
    if (delta_t_initial_s)
        require(*delta_t_initial_s > 0.0, "delta_t.initial_s: must be > 0");
    require(delta_t_floor_s > 0.0, "delta_t.floor_s: must be > 0");
    require(delta_t_smoothing >= 0.0 && delta_t_smoothing <= 1.0,
            "delta_t.smoothing: must be in [0, 1]");
    require(converged_factor > 0.0, "converged_factor: must be > 0");
    require(!output_dir.empty(), "output_dir: must not be empty");

    const bool quadratic = problem.kind == "quadratic";
    require(problem.kind == "logistic" || problem.kind == "tiny-mlp" || quadratic,
            "problem.kind: must be quadratic, logistic or tiny-mlp");
    if (quadratic) {
        require(!problem.quadratic_target.empty(),
                "problem.quadratic_target: required for the quadratic problem");
    } else {
        require(problem.features >= 1, "problem.features: must be >= 1");
        require(problem.classes >= 2, "problem.classes: must be >= 2");
        require(problem.samples_per_worker >= 1 || !problem.idx_images.empty(),
                "problem.samples_per_worker: must be >= 1");
        require(problem.train_fraction > 0.0 && problem.train_fraction < 1.0,
                "problem.train_fraction: must be in (0, 1)");
        require(problem.l2_lambda >= 0.0, "problem.l2_lambda: must be >= 0");
        require(problem.noise >= 0.0, "problem.noise: must be >= 0");
        require(problem.separation >= 0.0, "problem.separation: must be >= 0");
        if (problem.kind == "tiny-mlp")
            require(problem.hidden_units >= 1 && problem.hidden_units <= 64,
                    "problem.hidden_units: must be in [1, 64]");
        if (!problem.idx_images.empty())
            require(!problem.idx_labels.empty(),
                    "problem.idx_labels: required when idx_images is set");
    }

    require(!delay.base_delay_s.empty(), "delay_model.base_delay_s: must not be empty");
    require(delay.base_delay_s.size() == 1 ||
                delay.base_delay_s.size() == static_cast<std::size_t>(n_workers),
            "delay_model.base_delay_s: one value or one per worker");
    for (double b : delay.base_delay_s)
        require(b > 0.0 && std::isfinite(b), "delay_model.base_delay_s: values must be > 0");
    require(delay.jitter_kind == "none" || delay.jitter_kind == "uniform" ||
                delay.jitter_kind == "exponential",
            "delay_model.jitter.kind: must be none, uniform or exponential");
    if (delay.jitter_kind == "uniform")
        require(delay.jitter_low_s >= 0.0 && delay.jitter_high_s >= delay.jitter_low_s,
                "delay_model.jitter: need 0 <= low_s <= high_s");
    if (delay.jitter_kind == "exponential")
        require(delay.jitter_low_s >= 0.0, "delay_model.jitter.mean_s: must be >= 0");

    require(!rules.empty(), "rules: at least one aggregation rule required");
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto& r = rules[i];
        const std::string at = "rules[" + std::to_string(i) + "]";
        if (r.kind == "trimmed-mean")
            require(r.beta >= 0.0 && r.beta < 0.5, at + ".beta: must be in [0, 0.5)");
        else if (r.kind == "krum" || r.kind == "multi-krum") {
            require(r.f >= 0, at + ".f: must be >= 0");
            require(n_workers - r.f - 2 >= 1, at + ".f: Krum needs n >= f + 3");
            if (r.kind == "multi-krum")
                require(r.m >= 1 && r.m <= n_workers, at + ".m: must be in [1, n_workers]");
        } else if (r.kind == "parsgd")
            require(r.mode == "per-coordinate" || r.mode == "per-vector",
                    at + ".mode: must be per-coordinate or per-vector");
        else
            require(r.kind == "mean" || r.kind == "median",
                    at + ".kind: unknown aggregation rule '" + r.kind + "'");
    }

    require(!attacks.empty(), "attacks: at least one attack entry required (use kind none)");
    for (std::size_t i = 0; i < attacks.size(); ++i) {
        const auto& a = attacks[i];
        const std::string at = "attacks[" + std::to_string(i) + "]";
        require(a.kind == "none" || a.kind == "bitflip" || a.kind == "gaussian",
                at + ".kind: must be none, bitflip or gaussian");
        require(a.f >= 0, at + ".f: must be >= 0");
        require(a.c >= 0, at + ".c: must be >= 0");
        require(a.f + a.c <= n_workers, at + ": f + c exceeds n_workers");
        require(a.crash_epoch >= 0, at + ".crash_epoch: must be >= 0");
        if (a.kind == "bitflip")
            require(a.scale >= 0.0 && std::isfinite(a.scale), at + ".scale: must be >= 0");
        if (a.kind == "gaussian")
            require(a.sigma >= 0.0 && std::isfinite(a.sigma), at + ".sigma: must be >= 0");
    }
    for (int f : f_sweep)
        require(f >= 0 && f <= n_workers, "f_sweep: values must be in [0, n_workers]");

    return errors;
}

std::vector<std::string> ExperimentConfig::warnings() const {
    std::vector<std::string> notes;
    for (int f : f_sweep)
        if (2 * f >= n_workers)
            notes.push_back("f_sweep: f=" + std::to_string(f) +
                            " is not below n/2; resilience guarantees do not apply");
    for (const auto& a : attacks)
        if (2 * a.f >= n_workers)
            notes.push_back("attacks: f=" + std::to_string(a.f) +
                            " is not below n/2; resilience guarantees do not apply");
    return notes;
}

std::string ExperimentConfig::semantic_hash() const {
    json j = to_json(*this);
    j.erase("output_dir"); // where traces land does not change results
    const std::string canonical = j.dump();
    std::uint64_t h = 1469598103934665603ull; // FNV-1a
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

double ExperimentConfig::effective_delta_t_initial_s() const {
    if (delta_t_initial_s)
        return *delta_t_initial_s;
    DelayModel model;
    model.base_delay_s = delay.base_delay_s;
    return 2.0 * model.mean_base_s();
}

Problem ExperimentConfig::build_problem() const {
    if (problem.kind == "quadratic")
        return Problem::quadratic(GradientVector(problem.quadratic_target));

    std::vector<Shard> shards;
    int features = problem.features;
    int classes = problem.classes;
    if (!problem.idx_images.empty()) {
        shards = load_idx_dataset(problem.idx_images, problem.idx_labels, n_workers,
                                  problem.train_fraction);
        features = static_cast<int>(shards[0].train[0].x.size());
        int max_label = 0;
        for (const auto& shard : shards)
            for (const auto* part : {&shard.train, &shard.test})
                for (const auto& s : *part)
                    max_label = std::max(max_label, s.label);
        classes = std::max(2, max_label + 1);
    } else {
        DatasetSpec spec;
        spec.n_workers = n_workers;
        spec.samples_per_worker = problem.samples_per_worker;
        spec.classes = classes;
        spec.features = features;
        spec.separation = problem.separation;
        spec.noise = problem.noise;
        spec.train_fraction = problem.train_fraction;
        spec.seed = problem.dataset_seed;
        shards = generate_dataset(spec);
    }
    if (problem.kind == "tiny-mlp")
        return Problem::tiny_mlp(std::move(shards), features, classes, problem.hidden_units,
                                 problem.l2_lambda);
    return Problem::logistic(std::move(shards), features, classes, problem.l2_lambda);
}

DelayModel ExperimentConfig::build_delay_model() const {
    DelayModel model;
    model.base_delay_s = delay.base_delay_s;
    model.seed = delay.seed;
    if (delay.jitter_kind == "uniform")
        model.jitter = {JitterSpec::Kind::Uniform, delay.jitter_low_s, delay.jitter_high_s};
    else if (delay.jitter_kind == "exponential")
        model.jitter = {JitterSpec::Kind::Exponential, delay.jitter_low_s, 0.0};
    return model;
}

SimConfig ExperimentConfig::build_sim_config() const {
    SimConfig sc;
    sc.n_workers = n_workers;
    sc.epochs = epochs;
    sc.learning_rate = learning_rate;
    sc.lr_decay = lr_decay == "inv-sqrt" ? LrDecay::InvSqrt : LrDecay::Constant;
    sc.batch_size = batch_size;
    sc.strict_synchronous = strict_synchronous;
    sc.delta_t_init_us =
        std::max<std::int64_t>(1, std::llround(effective_delta_t_initial_s() * 1e6));
    sc.delta_t_floor_us = std::max<std::int64_t>(1, std::llround(delta_t_floor_s * 1e6));
    sc.delta_t_smoothing = delta_t_smoothing;
    sc.seed = seed;
    return sc;
}

AggregationRule ExperimentConfig::build_rule(const RuleConfig& rc) const {
    if (rc.kind == "mean")
        return AggregationRule::mean();
    if (rc.kind == "median")
        return AggregationRule::median();
    if (rc.kind == "trimmed-mean")
        return AggregationRule::trimmed_mean(rc.beta);
    if (rc.kind == "krum")
        return AggregationRule::krum(rc.f);
    if (rc.kind == "multi-krum")
        return AggregationRule::multi_krum(rc.f, rc.m);
    if (rc.kind == "parsgd")
        return AggregationRule::parsgd(rc.mode == "per-vector" ? SelectionMode::PerVector
                                                               : SelectionMode::PerCoordinate);
    throw std::invalid_argument("unknown aggregation rule: " + rc.kind);
}

AttackSpec ExperimentConfig::build_attack(const AttackConfig& ac,
                                          std::optional<int> f_override) const {
    AttackSpec spec;
    spec.n_workers = n_workers;
    spec.seed = seed;
    const int f = f_override.value_or(ac.f);
    if (ac.kind == "bitflip") {
        spec.kind = AttackKind::BitFlip;
        spec.bitflip_scale = ac.scale;
        spec.bitflip_random_scale = ac.random_scale;
    } else if (ac.kind == "gaussian") {
        spec.kind = AttackKind::Gaussian;
        spec.gaussian_mean = ac.mean;
        spec.gaussian_sigma = ac.sigma;
    }
    if (spec.kind != AttackKind::None)
        for (int i = 0; i < f; ++i)
            spec.byzantine_ids.insert(i);
    for (int i = n_workers - ac.c; i < n_workers; ++i)
        spec.crash_epochs[i] = ac.crash_epoch;
    spec.validate();
    return spec;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.serialize() == b.serialize();
}

} // namespace parsgd
