#ifndef PARSGD_PROBLEMS_HPP
#define PARSGD_PROBLEMS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "parsgd/gradient_vector.hpp"

namespace parsgd {

enum class ProblemKind { Quadratic, Logistic, TinyMlp };
enum class Split { Train, Test };

struct Sample {
    std::vector<double> x;
    int label = 0;
};

// One worker's slice of the data, already split.
struct Shard {
    std::vector<Sample> train;
    std::vector<Sample> test;
};

struct DatasetSpec {
    enum class Generator { GaussianBlobs, FixedQuadratic };
    Generator generator = Generator::GaussianBlobs;
    int n_workers = 1;
    int samples_per_worker = 0;
    int classes = 2;
    int features = 2;
    double separation = 3.0; // radius of the class-center circle
    double noise = 1.0;      // per-coordinate std around the center
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct EvalResult {
    double loss = 0.0;
    double top1 = 0.0;
    double topk = 0.0;
};

/*
 * Deterministic given the spec: balanced labels, centers on a circle scaled
 * by `separation`, features standardized to zero mean / unit variance over
 * the whole pool, then sharded contiguously and split per shard.
 */
std::vector<Shard> generate_dataset(const DatasetSpec& spec);

// IDX-format loader (big-endian magic 0x00000803 images / 0x00000801 labels)
// for digit-style subsets; features standardized like generated data.
std::vector<Shard> load_idx_dataset(const std::string& images_path,
                                    const std::string& labels_path, int n_workers,
                                    double train_fraction);

/*
 * A training objective Q(w) = (1/n) sum_i Q_i(w) with exact gradients.
 * Quadratic is dataset-free: Q_i(w) = 0.5*||w - w*||^2 for every worker.
 * Logistic and TinyMlp are softmax cross-entropy over per-worker shards,
 * with L2 regularization on the weight matrices (not the biases).
 */
class Problem {
public:
    static Problem quadratic(GradientVector target);
    static Problem logistic(std::vector<Shard> shards, int features, int classes,
                            double l2_lambda);
    static Problem tiny_mlp(std::vector<Shard> shards, int features, int classes,
                            int hidden_units, double l2_lambda);

    ProblemKind kind() const { return kind_; }
    int dimension() const { return dim_; }
    int classes() const { return classes_; }
    int n_workers() const { return static_cast<int>(shards_.size()); }
    const std::vector<Shard>& shards() const { return shards_; }
    const GradientVector& quadratic_target() const { return target_; }

    // zeros for the convex objectives, small keyed gaussian for the MLP
    GradientVector initial_parameters(std::uint64_t seed) const;

    /*
     * Mini-batch gradient of the worker's local objective at w. The batch is
     * drawn without replacement from the worker's train split, keyed by
     * (seed, worker, epoch). batch_size 0 or >= shard size means full batch.
     * Quadratic ignores batching and returns w - w* exactly.
     */
    GradientVector local_gradient(const GradientVector& w, int worker_id, int batch_size,
                                  std::uint64_t seed, int epoch) const;

    // Loss on the exact batch local_gradient(w, ...) differentiates;
    // the finite-difference checks rely on this pairing.
    double local_loss(const GradientVector& w, int worker_id, int batch_size,
                      std::uint64_t seed, int epoch) const;

    // Mean loss and accuracy over the union of all shards' split part.
    // topk uses k = 5 when classes > 5, else classes - 1 (min 1).
    EvalResult evaluate(const GradientVector& w, Split split) const;

    // batch indices for (worker, epoch); exposed so tests can replay a batch
    std::vector<std::size_t> select_batch(int worker_id, int batch_size, std::uint64_t seed,
                                          int epoch) const;

private:
    void forward(const GradientVector& w, const std::vector<double>& x,
                 std::vector<double>& logits, std::vector<double>& hidden) const;
    void backward(const GradientVector& w, const Sample& sample,
                  const std::vector<double>& probs, const std::vector<double>& hidden,
                  std::vector<double>& grad) const;
    double regularization(const GradientVector& w) const;
    void add_regularization_gradient(const GradientVector& w, std::vector<double>& grad) const;
    template <typename Fn> void for_each_weight(std::size_t dim, Fn&& fn) const;

    ProblemKind kind_ = ProblemKind::Quadratic;
    int dim_ = 0;
    int features_ = 0;
    int classes_ = 0;
    int hidden_ = 0;
    double l2_lambda_ = 0.0;
    std::vector<Shard> shards_;
    GradientVector target_; // quadratic w*
};

} // namespace parsgd

#endif
