#include "parsgd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "parsgd/rng.hpp"

namespace parsgd {

namespace {

constexpr std::uint64_t kDataStream = 0xda7a5e7ull;
constexpr std::uint64_t kShuffleStream = 0x5ffull;
constexpr std::uint64_t kBatchStream = 0xba7c4ull;
constexpr std::uint64_t kInitStream = 0x141ull;

void standardize_features(std::vector<Sample>& pool) {
    if (pool.empty())
        return;
    const std::size_t p = pool[0].x.size();
    for (std::size_t j = 0; j < p; ++j) {
        double sum = 0.0;
        for (const auto& s : pool)
            sum += s.x[j];
        const double mean = sum / static_cast<double>(pool.size());
        double ss = 0.0;
        for (const auto& s : pool) {
            const double dev = s.x[j] - mean;
            ss += dev * dev;
        }
        const double sd = std::sqrt(ss / static_cast<double>(pool.size()));
        for (auto& s : pool)
            s.x[j] = sd > 0.0 ? (s.x[j] - mean) / sd : s.x[j] - mean;
    }
}

std::vector<Shard> shard_and_split(std::vector<Sample> pool, int n_workers,
                                   double train_fraction) {
    if (n_workers < 1)
        throw std::invalid_argument("dataset needs n_workers >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train fraction must be in (0, 1)");
    if (pool.size() < static_cast<std::size_t>(n_workers))
        throw std::invalid_argument("fewer samples than workers");

    const std::size_t total = pool.size();
    const std::size_t base = total / static_cast<std::size_t>(n_workers);
    std::size_t remainder = total % static_cast<std::size_t>(n_workers);

    std::vector<Shard> shards(static_cast<std::size_t>(n_workers));
    std::size_t cursor = 0;
    for (auto& shard : shards) {
        std::size_t take = base + (remainder > 0 ? 1 : 0);
        if (remainder > 0)
            --remainder;
        const auto n_train =
            static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(take)));
        if (n_train < 1)
            throw std::invalid_argument("shard too small for the train fraction");
        for (std::size_t i = 0; i < take; ++i) {
            auto& dst = i < n_train ? shard.train : shard.test;
            dst.push_back(std::move(pool[cursor + i]));
        }
        cursor += take;
    }
    return shards;
}

} // namespace

std::vector<Shard> generate_dataset(const DatasetSpec& spec) {
    if (spec.generator != DatasetSpec::Generator::GaussianBlobs)
        throw std::invalid_argument("generate_dataset handles gaussian-blobs specs");
    if (spec.samples_per_worker < 1)
        throw std::invalid_argument("samples_per_worker must be >= 1");
    if (spec.classes < 2)
        throw std::invalid_argument("need at least 2 classes");
    if (spec.features < 1)
        throw std::invalid_argument("need at least 1 feature");
    if (spec.samples_per_worker * spec.n_workers < spec.classes)
        throw std::invalid_argument("too few samples for the class count");
    if (!(spec.noise >= 0.0) || !(spec.separation >= 0.0))
        throw std::invalid_argument("noise and separation must be >= 0");

    const std::size_t total =
        static_cast<std::size_t>(spec.n_workers) * static_cast<std::size_t>(spec.samples_per_worker);

    // class centers on a circle in the first two feature dimensions
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(spec.classes),
                                             std::vector<double>(spec.features, 0.0));
    for (int c = 0; c < spec.classes; ++c) {
        const double theta = 2.0 * 3.14159265358979323846 * c / spec.classes;
        centers[static_cast<std::size_t>(c)][0] = spec.separation * std::cos(theta);
        if (spec.features > 1)
            centers[static_cast<std::size_t>(c)][1] = spec.separation * std::sin(theta);
    }

    auto rng = KeyedRng::for_stream(spec.seed, kDataStream, 0);
    std::vector<Sample> pool(total);
    for (std::size_t i = 0; i < total; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
        pool[i].label = label;
        pool[i].x.resize(static_cast<std::size_t>(spec.features));
        for (int j = 0; j < spec.features; ++j)
            pool[i].x[static_cast<std::size_t>(j)] =
                centers[static_cast<std::size_t>(label)][static_cast<std::size_t>(j)] +
                rng.normal(0.0, spec.noise);
    }

    auto shuffle_rng = KeyedRng::for_stream(spec.seed, kShuffleStream, 0);
    for (std::size_t i = total - 1; i > 0; --i)
        std::swap(pool[i], pool[shuffle_rng.below(i + 1)]);

    standardize_features(pool);
    return shard_and_split(std::move(pool), spec.n_workers, spec.train_fraction);
}

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4))
        throw std::runtime_error("truncated IDX file: " + path);
    return (static_cast<std::uint32_t>(bytes[0]) << 24) |
           (static_cast<std::uint32_t>(bytes[1]) << 16) |
           (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

} // namespace

std::vector<Shard> load_idx_dataset(const std::string& images_path,
                                    const std::string& labels_path, int n_workers,
                                    double train_fraction) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images)
        throw std::runtime_error("cannot open IDX image file: " + images_path);
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels)
        throw std::runtime_error("cannot open IDX label file: " + labels_path);

    if (read_be_u32(images, images_path) != 0x00000803u)
        throw std::runtime_error("bad IDX image magic in " + images_path);
    if (read_be_u32(labels, labels_path) != 0x00000801u)
        throw std::runtime_error("bad IDX label magic in " + labels_path);

    const std::uint32_t count = read_be_u32(images, images_path);
    const std::uint32_t rows = read_be_u32(images, images_path);
    const std::uint32_t cols = read_be_u32(images, images_path);
    const std::uint32_t label_count = read_be_u32(labels, labels_path);
    if (count != label_count)
        throw std::runtime_error("IDX image/label counts differ");
    if (count == 0 || rows == 0 || cols == 0)
        throw std::runtime_error("empty IDX dataset");

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<Sample> pool(count);
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!images.read(reinterpret_cast<char*>(buf.data()),
                         static_cast<std::streamsize>(pixels)))
            throw std::runtime_error("truncated IDX image data: " + images_path);
        auto& s = pool[i];
        s.x.resize(pixels);
        for (std::size_t j = 0; j < pixels; ++j)
            s.x[j] = buf[j] / 255.0;
        char label = 0;
        if (!labels.read(&label, 1))
            throw std::runtime_error("truncated IDX label data: " + labels_path);
        s.label = static_cast<unsigned char>(label);
    }

    standardize_features(pool);
    return shard_and_split(std::move(pool), n_workers, train_fraction);
}

// ---------------------------------------------------------------------------

Problem Problem::quadratic(GradientVector target) {
    Problem p;
    p.kind_ = ProblemKind::Quadratic;
    p.dim_ = static_cast<int>(target.dim());
    p.target_ = std::move(target);
    return p;
}

namespace {

void check_shards(const std::vector<Shard>& shards, int features, int classes) {
    if (shards.empty())
        throw std::invalid_argument("problem needs at least one worker shard");
    for (const auto& shard : shards) {
        if (shard.train.empty())
            throw std::invalid_argument("every worker's train shard must be nonempty");
        for (const auto* part : {&shard.train, &shard.test})
            for (const auto& s : *part) {
                if (s.x.size() != static_cast<std::size_t>(features))
                    throw std::invalid_argument("sample feature dimension mismatch");
                if (s.label < 0 || s.label >= classes)
                    throw std::invalid_argument("sample label out of range");
                for (double v : s.x)
                    if (!std::isfinite(v))
                        throw std::invalid_argument("non-finite feature value");
            }
    }
}

} // namespace

Problem Problem::logistic(std::vector<Shard> shards, int features, int classes,
                          double l2_lambda) {
    if (classes < 2 || features < 1 || l2_lambda < 0.0)
        throw std::invalid_argument("invalid logistic problem parameters");
    check_shards(shards, features, classes);
    Problem p;
    p.kind_ = ProblemKind::Logistic;
    p.features_ = features;
    p.classes_ = classes;
    p.l2_lambda_ = l2_lambda;
    p.dim_ = classes * (features + 1);
    p.shards_ = std::move(shards);
    return p;
}

Problem Problem::tiny_mlp(std::vector<Shard> shards, int features, int classes,
                          int hidden_units, double l2_lambda) {
    if (classes < 2 || features < 1 || l2_lambda < 0.0)
        throw std::invalid_argument("invalid mlp problem parameters");
    if (hidden_units < 1 || hidden_units > 64)
        throw std::invalid_argument("hidden units must be in [1, 64]");
    check_shards(shards, features, classes);
    Problem p;
    p.kind_ = ProblemKind::TinyMlp;
    p.features_ = features;
    p.classes_ = classes;
    p.hidden_ = hidden_units;
    p.l2_lambda_ = l2_lambda;
    p.dim_ = hidden_units * features + hidden_units + classes * hidden_units + classes;
    p.shards_ = std::move(shards);
    return p;
}

GradientVector Problem::initial_parameters(std::uint64_t seed) const {
    if (kind_ != ProblemKind::TinyMlp)
        return GradientVector::zeros(static_cast<std::size_t>(dim_));
    // break hidden-unit symmetry
    auto rng = KeyedRng::for_stream(seed, kInitStream, 0);
    std::vector<double> w(static_cast<std::size_t>(dim_));
    for (auto& v : w)
        v = rng.normal(0.0, 0.1);
    return GradientVector(std::move(w));
}

namespace {

/*
 * Softmax cross-entropy forward/backward shared by Logistic and TinyMlp.
 * Returns the per-sample loss; when grad != nullptr the per-sample gradient
 * is accumulated into it (caller divides by the batch size).
 */
struct LogisticView {
    int p, k;
    const double* w; // [k][p] weights then [k] biases, row-major per class
    double weight(int c, int j) const { return w[c * (p + 1) + j]; }
    double bias(int c) const { return w[c * (p + 1) + p]; }
};

double softmax_loss(const std::vector<double>& logits, int label,
                    std::vector<double>& probs_out) {
    const std::size_t k = logits.size();
    double zmax = logits[0];
    for (double z : logits)
        zmax = std::max(zmax, z);
    double sum = 0.0;
    probs_out.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        probs_out[c] = std::exp(logits[c] - zmax);
        sum += probs_out[c];
    }
    for (auto& pr : probs_out)
        pr /= sum;
    return std::log(sum) + zmax - logits[static_cast<std::size_t>(label)];
}

} // namespace

double Problem::local_loss(const GradientVector& w, int worker_id, int batch_size,
                           std::uint64_t seed, int epoch) const {
    if (w.dim() != static_cast<std::size_t>(dim_))
        throw std::invalid_argument("dimension mismatch");
    if (kind_ == ProblemKind::Quadratic) {
        double sum = 0.0;
        for (std::size_t j = 0; j < w.dim(); ++j) {
            const double dev = w[j] - target_[j];
            sum += dev * dev;
        }
        return 0.5 * sum;
    }

    const auto batch = select_batch(worker_id, batch_size, seed, epoch);
    const auto& train = shards_[static_cast<std::size_t>(worker_id)].train;
    double loss = 0.0;
    std::vector<double> logits, probs, hidden;
    for (std::size_t idx : batch) {
        forward(w, train[idx].x, logits, hidden);
        loss += softmax_loss(logits, train[idx].label, probs);
    }
    loss /= static_cast<double>(batch.size());
    return loss + regularization(w);
}

GradientVector Problem::local_gradient(const GradientVector& w, int worker_id, int batch_size,
                                       std::uint64_t seed, int epoch) const {
    if (w.dim() != static_cast<std::size_t>(dim_))
        throw std::invalid_argument("dimension mismatch");
    if (kind_ == ProblemKind::Quadratic) {
        std::vector<double> g(w.dim());
        for (std::size_t j = 0; j < w.dim(); ++j)
            g[j] = w[j] - target_[j];
        return GradientVector(std::move(g));
    }

    const auto batch = select_batch(worker_id, batch_size, seed, epoch);
    const auto& train = shards_[static_cast<std::size_t>(worker_id)].train;
    std::vector<double> grad(w.dim(), 0.0);
    std::vector<double> logits, probs, hidden;

    for (std::size_t idx : batch) {
        const auto& sample = train[idx];
        forward(w, sample.x, logits, hidden);
        softmax_loss(logits, sample.label, probs);
        backward(w, sample, probs, hidden, grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& g : grad)
        g *= inv;
    add_regularization_gradient(w, grad);
    return GradientVector(std::move(grad));
}

EvalResult Problem::evaluate(const GradientVector& w, Split split) const {
    if (w.dim() != static_cast<std::size_t>(dim_))
        throw std::invalid_argument("dimension mismatch");
    EvalResult r;
    if (kind_ == ProblemKind::Quadratic) {
        double sum = 0.0;
        for (std::size_t j = 0; j < w.dim(); ++j) {
            const double dev = w[j] - target_[j];
            sum += dev * dev;
        }
        r.loss = 0.5 * sum;
        return r;
    }

    const int k_top = classes_ > 5 ? 5 : std::max(1, classes_ - 1);
    std::size_t count = 0, hit1 = 0, hitk = 0;
    double loss = 0.0;
    std::vector<double> logits, probs, hidden;
    for (const auto& shard : shards_) {
        const auto& part = split == Split::Train ? shard.train : shard.test;
        for (const auto& sample : part) {
            forward(w, sample.x, logits, hidden);
            loss += softmax_loss(logits, sample.label, probs);
            ++count;
            const double zy = logits[static_cast<std::size_t>(sample.label)];
            int rank = 0;
            for (int c = 0; c < classes_; ++c) {
                const double zc = logits[static_cast<std::size_t>(c)];
                if (zc > zy || (zc == zy && c < sample.label))
                    ++rank;
            }
            if (rank == 0)
                ++hit1;
            if (rank < k_top)
                ++hitk;
        }
    }
    if (count == 0)
        return r;
    r.loss = loss / static_cast<double>(count);
    r.top1 = static_cast<double>(hit1) / static_cast<double>(count);
    r.topk = static_cast<double>(hitk) / static_cast<double>(count);
    return r;
}

std::vector<std::size_t> Problem::select_batch(int worker_id, int batch_size,
                                               std::uint64_t seed, int epoch) const {
    if (worker_id < 0 || worker_id >= n_workers())
        throw std::invalid_argument("unknown worker id");
    const auto& train = shards_[static_cast<std::size_t>(worker_id)].train;
    const std::size_t size = train.size();
    if (batch_size < 0 || static_cast<std::size_t>(batch_size) > size)
        throw std::invalid_argument("batch size exceeds shard size");

    std::vector<std::size_t> indices(size);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (batch_size == 0 || static_cast<std::size_t>(batch_size) == size)
        return indices;

    auto rng = KeyedRng::for_stream(seed ^ kBatchStream, static_cast<std::uint64_t>(worker_id),
                                    static_cast<std::uint64_t>(epoch));
    const auto b = static_cast<std::size_t>(batch_size);
    for (std::size_t i = 0; i < b; ++i)
        std::swap(indices[i], indices[i + rng.below(size - i)]);
    indices.resize(b);
    return indices;
}

void Problem::forward(const GradientVector& w, const std::vector<double>& x,
                      std::vector<double>& logits, std::vector<double>& hidden) const {
    const double* wp = w.values().data();
    logits.assign(static_cast<std::size_t>(classes_), 0.0);
    if (kind_ == ProblemKind::Logistic) {
        for (int c = 0; c < classes_; ++c) {
            const double* row = wp + c * (features_ + 1);
            double z = row[features_];
            for (int j = 0; j < features_; ++j)
                z += row[j] * x[static_cast<std::size_t>(j)];
            logits[static_cast<std::size_t>(c)] = z;
        }
        return;
    }
    // TinyMlp: tanh hidden layer then linear softmax head
    const double* w1 = wp;
    const double* b1 = wp + hidden_ * features_;
    const double* w2 = b1 + hidden_;
    const double* b2 = w2 + classes_ * hidden_;
    hidden.assign(static_cast<std::size_t>(hidden_), 0.0);
    for (int i = 0; i < hidden_; ++i) {
        double a = b1[i];
        const double* row = w1 + i * features_;
        for (int j = 0; j < features_; ++j)
            a += row[j] * x[static_cast<std::size_t>(j)];
        hidden[static_cast<std::size_t>(i)] = std::tanh(a);
    }
    for (int c = 0; c < classes_; ++c) {
        double z = b2[c];
        const double* row = w2 + c * hidden_;
        for (int i = 0; i < hidden_; ++i)
            z += row[i] * hidden[static_cast<std::size_t>(i)];
        logits[static_cast<std::size_t>(c)] = z;
    }
}

void Problem::backward(const GradientVector& w, const Sample& sample,
                       const std::vector<double>& probs, const std::vector<double>& hidden,
                       std::vector<double>& grad) const {
    if (kind_ == ProblemKind::Logistic) {
        for (int c = 0; c < classes_; ++c) {
            const double coef =
                probs[static_cast<std::size_t>(c)] - (c == sample.label ? 1.0 : 0.0);
            double* row = grad.data() + c * (features_ + 1);
            for (int j = 0; j < features_; ++j)
                row[j] += coef * sample.x[static_cast<std::size_t>(j)];
            row[features_] += coef;
        }
        return;
    }
    const double* wp = w.values().data();
    const double* w2 = wp + hidden_ * features_ + hidden_;
    double* g1 = grad.data();
    double* gb1 = grad.data() + hidden_ * features_;
    double* g2 = gb1 + hidden_;
    double* gb2 = g2 + classes_ * hidden_;

    std::vector<double> dhidden(static_cast<std::size_t>(hidden_), 0.0);
    for (int c = 0; c < classes_; ++c) {
        const double dz = probs[static_cast<std::size_t>(c)] - (c == sample.label ? 1.0 : 0.0);
        double* row = g2 + c * hidden_;
        const double* w2row = w2 + c * hidden_;
        for (int i = 0; i < hidden_; ++i) {
            row[i] += dz * hidden[static_cast<std::size_t>(i)];
            dhidden[static_cast<std::size_t>(i)] += dz * w2row[i];
        }
        gb2[c] += dz;
    }
    for (int i = 0; i < hidden_; ++i) {
        const double h = hidden[static_cast<std::size_t>(i)];
        const double da = dhidden[static_cast<std::size_t>(i)] * (1.0 - h * h);
        double* row = g1 + i * features_;
        for (int j = 0; j < features_; ++j)
            row[j] += da * sample.x[static_cast<std::size_t>(j)];
        gb1[i] += da;
    }
}

double Problem::regularization(const GradientVector& w) const {
    if (l2_lambda_ == 0.0)
        return 0.0;
    double sum = 0.0;
    for_each_weight(w.dim(), [&](std::size_t idx) { sum += w[idx] * w[idx]; });
    return 0.5 * l2_lambda_ * sum;
}

void Problem::add_regularization_gradient(const GradientVector& w,
                                          std::vector<double>& grad) const {
    if (l2_lambda_ == 0.0)
        return;
    for_each_weight(w.dim(), [&](std::size_t idx) { grad[idx] += l2_lambda_ * w[idx]; });
}

template <typename Fn> void Problem::for_each_weight(std::size_t dim, Fn&& fn) const {
    (void)dim;
    if (kind_ == ProblemKind::Logistic) {
        for (int c = 0; c < classes_; ++c)
            for (int j = 0; j < features_; ++j) // biases excluded
                fn(static_cast<std::size_t>(c * (features_ + 1) + j));
        return;
    }
    for (int i = 0; i < hidden_ * features_; ++i)
        fn(static_cast<std::size_t>(i));
    const int w2_begin = hidden_ * features_ + hidden_;
    for (int i = 0; i < classes_ * hidden_; ++i)
        fn(static_cast<std::size_t>(w2_begin + i));
}

} // namespace parsgd
