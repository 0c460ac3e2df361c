#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hint/model.hpp"

namespace hint {

struct TrainConfig {
    int height = 2;
    std::size_t hidden = 96;
    Pool pool = Pool::mean;
    double lr = 1e-3;
    double dropout = 0.5;
    std::size_t batch = 4;
    std::uint64_t seed = 0;
    int max_epochs = 200;
    int patience = 10;
    // 0 lets OpenMP decide.
    int workers = 0;

    // Throws ConfigError on out-of-range values.
    void validate() const;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(const TreeModel& model, double lr, AdamConfig cfg = {});
    void step(TreeModel& model, const Gradients& grads);
    long steps() const noexcept { return t_; }

private:
    double lr_;
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<Eigen::MatrixXd> m_, v_;
};

struct Example {
    TreePlan plan;
    FeatureMatrix features;
    ClassId label = 0;
};

enum class Execution { serial, parallel };

struct BatchGradient {
    Gradients grads;     // mean over the batch
    double loss_sum = 0.0;
};

// Mean gradient over the examples at `indices`. Per-document work may run in
// parallel; the reduction always sums documents in index order, so both
// execution modes produce bit-identical results. The serial path is the
// reference implementation.
BatchGradient batch_gradient(const TreeModel& model, std::span<const Example> data,
                             std::span<const std::size_t> indices, const ForwardOptions& base,
                             std::uint64_t dropout_stream, Execution exec, int workers = 0);

struct Evaluation {
    double accuracy = 0.0;
    double mean_loss = 0.0;
    std::vector<ClassId> predictions;
};

Evaluation evaluate(const TreeModel& model, std::span<const Example> data, std::span<const std::size_t> indices,
                    Pool pool, Execution exec = Execution::parallel, int workers = 0);

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double val_loss = 0.0;
};

struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Seeded 9:1 split; the validation part gets max(1, round(n/10)) documents.
DataSplit split_train_validation(std::size_t n, std::uint64_t seed);

struct TrainResult {
    TreeModel model;             // best-validation checkpoint
    std::vector<EpochMetrics> history;
    int best_epoch = 0;
    double best_val_acc = 0.0;
    DataSplit split;
};

// Minibatch Adam with early stopping on validation accuracy (ties go to the
// lower validation loss).
TrainResult train(TreeModel model, std::span<const Example> data, const TrainConfig& config,
                  Execution exec = Execution::parallel);

std::size_t count_classes(std::span<const Example> data);

std::string_view to_string(Pool p) noexcept;
Pool parse_pool(std::string_view s);

struct Checkpoint {
    TreeModel model;
    TrainConfig config;
    std::size_t position_slots = 0;
    std::uint64_t feature_seed = 0;
};

std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(std::string_view text);

std::string serialize_history(const std::vector<EpochMetrics>& history);

} // namespace hint
