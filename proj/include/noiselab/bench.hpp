#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "noiselab/domain.hpp"
#include "noiselab/losses.hpp"

namespace noiselab {

struct SoftmaxModel {
    Matrix weights;          // K x d
    Eigen::VectorXd bias;    // K

    SoftmaxModel() = default;
    SoftmaxModel(int num_classes, std::size_t dim);

    int num_classes() const { return static_cast<int>(weights.rows()); }
    Probs predict(VectorRef x) const;
    Matrix predict_all(const Matrix& x) const;
};

// Ties go to the lowest class index.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& v);
double accuracy(const SoftmaxModel& model, const Matrix& x, const std::vector<int>& labels);

struct GeometryConfig {
    int num_classes = 5;
    std::size_t dim = 20;
    double sep = 2.0;
    double sigma = 1.0;
    double delta_scale = 1.0;
    int shift_from = 0;
    int shift_to = 1;
    std::size_t n_source = 20000;
    std::size_t n_target = 20000;

    void validate() const;
};

struct MulticlassDomains {
    NoisyDataset source;
    NoisyDataset target;
    Matrix means;   // K x d
    Vector delta;
};

// Class means sep * e_k; the target shifts every mean by delta_scale along the unit
// direction from mean[shift_from] to mean[shift_to].
MulticlassDomains gen_multiclass_domains(const GeometryConfig& geo, std::uint64_t seed);

struct SourceConfig {
    double lr = 0.5;
    std::size_t epochs = 5;
    std::size_t batch_size = 128;
    double weight_decay = 0.0;
};

struct SourceFit {
    SoftmaxModel model;
    double source_accuracy = 0.0;
    bool diverged = false;
};

SourceFit fit_source_model(const NoisyDataset& source, int num_classes, const SourceConfig& cfg, std::uint64_t seed);

struct PseudoLabels {
    NoisyDataset data;
    double labeling_accuracy = 0.0;
};

PseudoLabels pseudo_label(const SoftmaxModel& model, const NoisyDataset& target);

// Signed (+1/-1) binary data as classes 0/1, +1 -> 0.
NoisyDataset to_multiclass(const NoisyDataset& data);
// Softmax form of the Bayes-optimal source rule: logits +-h_S/2 for classes 0/1.
SoftmaxModel bayes_source_model(const DomainSpec& spec);

struct ElrConfig {
    double beta = 0.9;
    double lambda = 3.0;
};

struct EvalSchedule {
    std::size_t per_batch_until = 90;
    double then_every = 0.3;   // fraction of an epoch
};

struct TrainConfig {
    LossSpec loss;
    std::optional<ElrConfig> elr;
    std::optional<LossSpec> regularizer;       // added with weight regularizer->lambda
    std::optional<double> corrector_threshold;  // epoch-end relabeling of confident samples
    double lr = 0.05;
    std::size_t epochs = 30;
    std::size_t batch_size = 128;
    double weight_decay = 0.0;
    double data_sigma = 1.0;                    // scales the GJS input perturbation
    EvalSchedule schedule;

    void validate() const;
};

struct CurveRecord {
    std::size_t step;
    double epoch;
    double acc_vs_ground_truth;
    double acc_vs_noisy_labels;
    double acc_vs_training_labels;
    double mean_loss;
    double kappa_on_mislabeled;
    double weight_norm;
};

struct TrainResult {
    std::vector<CurveRecord> curve;
    SoftmaxModel model;
    bool diverged = false;
    std::size_t elr_clamps = 0;
};

TrainResult train_on_noisy(const SoftmaxModel& model0, const NoisyDataset& target, const TrainConfig& cfg,
                           std::uint64_t seed);

struct BenchSetup {
    MulticlassDomains domains;
    SourceFit source;
    PseudoLabels labels;
};

// Domains, source model and its pseudo-labels on the target set; the seed drives all three.
BenchSetup prepare_bench(const GeometryConfig& geo, const SourceConfig& src, std::uint64_t seed);

inline constexpr std::size_t kNeverFit = std::numeric_limits<std::size_t>::max();

struct MemorizationSteps {
    std::size_t unbounded;
    std::size_t bounded;
};

// Steps of CE training until accuracy against each dataset's own noisy labels reaches `threshold`.
MemorizationSteps memorization_speed(const SoftmaxModel& model0, const NoisyDataset& unbounded,
                                     const NoisyDataset& bounded, const TrainConfig& cfg, std::uint64_t seed,
                                     double threshold = 0.9);

} // namespace noiselab
