#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hint/coding_tree.hpp"
#include "hint/features.hpp"

namespace hint {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Pool { sum, mean };

struct ModelShape {
    std::size_t input_dim = 0;  // d0: word vector + position slots
    std::size_t hidden = 96;
    int height = 2;
    std::size_t classes = 2;

    std::size_t readout_dim() const { return input_dim + static_cast<std::size_t>(height) * hidden; }
    bool operator==(const ModelShape&) const = default;
};

// Per level i in 1..h a two-layer MLP (affine, rectifier, affine), then a
// linear classifier over the concatenated per-level pools.
//
// Tensors are stored flat in a fixed order:
//   level i: fc1.weight (in x H), fc1.bias (1 x H), fc2.weight (H x H), fc2.bias (1 x H)
//   classifier.weight (readout x C), classifier.bias (1 x C)
struct TreeModel {
    ModelShape shape;
    std::vector<Eigen::MatrixXd> tensors;

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor.
    static TreeModel init(const ModelShape& shape, std::uint64_t seed);
    static TreeModel zeros(const ModelShape& shape);

    Eigen::MatrixXd& fc1_weight(int level) { return tensors[level_base(level)]; }
    Eigen::MatrixXd& fc1_bias(int level) { return tensors[level_base(level) + 1]; }
    Eigen::MatrixXd& fc2_weight(int level) { return tensors[level_base(level) + 2]; }
    Eigen::MatrixXd& fc2_bias(int level) { return tensors[level_base(level) + 3]; }
    Eigen::MatrixXd& classifier_weight() { return tensors[tensors.size() - 2]; }
    Eigen::MatrixXd& classifier_bias() { return tensors.back(); }
    const Eigen::MatrixXd& fc1_weight(int level) const { return tensors[level_base(level)]; }
    const Eigen::MatrixXd& fc1_bias(int level) const { return tensors[level_base(level) + 1]; }
    const Eigen::MatrixXd& fc2_weight(int level) const { return tensors[level_base(level) + 2]; }
    const Eigen::MatrixXd& fc2_bias(int level) const { return tensors[level_base(level) + 3]; }
    const Eigen::MatrixXd& classifier_weight() const { return tensors[tensors.size() - 2]; }
    const Eigen::MatrixXd& classifier_bias() const { return tensors.back(); }

    std::vector<std::string> tensor_names() const;

private:
    static std::size_t level_base(int level) { return 4 * static_cast<std::size_t>(level - 1); }
};

using Gradients = std::vector<Eigen::MatrixXd>;
Gradients zero_gradients(const TreeModel& model);

// Closed form: MLP_1 = d0*H + H + H*H + H, MLP_i>=2 = 2(H*H + H),
// classifier = (d0 + h*H)*C + C.
std::size_t count_params(const ModelShape& shape);
inline std::size_t count_params(const TreeModel& model) { return count_params(model.shape); }

// Level structure of an aligned coding tree, indexed by row within a level.
struct TreePlan {
    int height = 0;
    std::vector<std::size_t> level_sizes;                // n_0 .. n_h
    std::vector<std::vector<std::size_t>> parent_row;    // level i row -> row in level i+1, i < h
    std::vector<std::size_t> leaf_token;                 // level-0 row -> feature row

    std::size_t num_nodes() const;
};

// Throws StructureError unless the tree is level-aligned.
TreePlan plan_tree(const CodingTree& tree);

struct ForwardOptions {
    Pool pool = Pool::mean;
    double dropout = 0.0;
    bool train_mode = false;
    std::uint64_t dropout_seed = 0;
};

struct LevelActivations {
    RowMatrix summed;     // children sums fed to the MLP
    RowMatrix pre_relu;
    RowMatrix hidden;     // after the rectifier
    RowMatrix output;     // after dropout
    RowMatrix mask;       // empty when dropout is off
};

struct ForwardResult {
    Eigen::VectorXd probs;
    Eigen::VectorXd logits;
    Eigen::VectorXd readout;
    std::vector<LevelActivations> levels;  // index 1..h; [0] unused
    std::vector<std::size_t> level_sizes;
    Pool pool = Pool::mean;
    std::uint64_t mult_adds = 0;  // counted while running
};

ForwardResult forward(const TreeModel& model, const TreePlan& plan, const FeatureMatrix& x0,
                      const ForwardOptions& options);

// Multiply-adds of one forward pass: affine maps, child aggregation, pooling
// and the classifier.
std::uint64_t count_forward_mult_adds(const ModelShape& shape, const TreePlan& plan);

struct LossValue {
    double value = 0.0;
    bool clamped = false;  // probability of the gold class fell below the floor
};

inline constexpr double kProbabilityFloor = 1e-12;

// -ln y[gold].
LossValue cross_entropy(const Eigen::VectorXd& probs, ClassId gold);

// Adds scale * d(loss)/d(param) into grads.
void backward(const TreeModel& model, const TreePlan& plan, const ForwardResult& fwd, ClassId gold,
              Gradients& grads, double scale = 1.0);

Eigen::Index argmax(const Eigen::VectorXd& v);

} // namespace hint
