#include "hint/model.hpp"

#include <cmath>
#include <numeric>

#include "hint/errors.hpp"
#include "hint/rng.hpp"

namespace hint {

namespace {

std::vector<std::pair<Eigen::Index, Eigen::Index>> tensor_shapes(const ModelShape& s)
{
    const auto d0 = static_cast<Eigen::Index>(s.input_dim);
    const auto hid = static_cast<Eigen::Index>(s.hidden);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
    for (int level = 1; level <= s.height; ++level) {
        shapes.emplace_back(level == 1 ? d0 : hid, hid);
        shapes.emplace_back(1, hid);
        shapes.emplace_back(hid, hid);
        shapes.emplace_back(1, hid);
    }
    shapes.emplace_back(static_cast<Eigen::Index>(s.readout_dim()), static_cast<Eigen::Index>(s.classes));
    shapes.emplace_back(1, static_cast<Eigen::Index>(s.classes));
    return shapes;
}

void check_shape(const ModelShape& s)
{
    if (s.input_dim == 0 || s.hidden == 0 || s.classes == 0 || s.height < 1)
        throw ConfigError("model dimensions must be positive");
}

} // namespace

TreeModel TreeModel::zeros(const ModelShape& shape)
{
    check_shape(shape);
    TreeModel m;
    m.shape = shape;
    for (const auto& [r, c] : tensor_shapes(shape))
        m.tensors.push_back(Eigen::MatrixXd::Zero(r, c));
    return m;
}

TreeModel TreeModel::init(const ModelShape& shape, std::uint64_t seed)
{
    TreeModel m = zeros(shape);
    Rng rng(seed);
    // Tensors alternate weight, bias; a bias shares the fan-in of its weight.
    Eigen::Index fan_in = 1;
    for (std::size_t k = 0; k < m.tensors.size(); ++k) {
        auto& t = m.tensors[k];
        if (k % 2 == 0)
            fan_in = t.rows();
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Eigen::Index j = 0; j < t.cols(); ++j)
            for (Eigen::Index i = 0; i < t.rows(); ++i)
                t(i, j) = rng.uniform(-bound, bound);
    }
    return m;
}

std::vector<std::string> TreeModel::tensor_names() const
{
    std::vector<std::string> names;
    for (int level = 1; level <= shape.height; ++level) {
        const std::string p = "level" + std::to_string(level) + ".";
        names.insert(names.end(), {p + "fc1.weight", p + "fc1.bias", p + "fc2.weight", p + "fc2.bias"});
    }
    names.insert(names.end(), {"classifier.weight", "classifier.bias"});
    return names;
}

Gradients zero_gradients(const TreeModel& model)
{
    Gradients g;
    g.reserve(model.tensors.size());
    for (const auto& t : model.tensors)
        g.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    return g;
}

std::size_t count_params(const ModelShape& s)
{
    const std::size_t d0 = s.input_dim, hid = s.hidden, c = s.classes;
    const auto h = static_cast<std::size_t>(s.height);
    const std::size_t first = d0 * hid + hid + hid * hid + hid;
    const std::size_t rest = (h - 1) * 2 * (hid * hid + hid);
    return first + rest + (d0 + h * hid) * c + c;
}

std::size_t TreePlan::num_nodes() const
{
    return std::accumulate(level_sizes.begin(), level_sizes.end(), std::size_t{0});
}

TreePlan plan_tree(const CodingTree& tree)
{
    check_tree(tree, tree.num_leaves(), true);
    TreePlan plan;
    plan.height = tree.height;
    const auto levels = nodes_by_level(tree);
    std::vector<std::size_t> row_of(tree.size());
    for (const auto& ids : levels)
        for (std::size_t r = 0; r < ids.size(); ++r)
            row_of[static_cast<std::size_t>(ids[r])] = r;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        plan.level_sizes.push_back(levels[i].size());
        if (static_cast<int>(i) < tree.height) {
            std::vector<std::size_t> parents;
            for (NodeId v : levels[i])
                parents.push_back(row_of[static_cast<std::size_t>(tree[v].parent)]);
            plan.parent_row.push_back(std::move(parents));
        }
    }
    for (NodeId v : levels[0])
        plan.leaf_token.push_back(static_cast<std::size_t>(tree[v].leaf_token));
    return plan;
}

std::uint64_t count_forward_mult_adds(const ModelShape& s, const TreePlan& plan)
{
    std::uint64_t ops = 0;
    const std::uint64_t hid = s.hidden;
    for (int i = 1; i <= plan.height; ++i) {
        const std::uint64_t in = i == 1 ? s.input_dim : hid;
        const std::uint64_t below = plan.level_sizes[static_cast<std::size_t>(i - 1)];
        const std::uint64_t here = plan.level_sizes[static_cast<std::size_t>(i)];
        ops += below * in;                   // child sums
        ops += here * (in * hid + hid * hid); // two affine maps
    }
    for (std::size_t i = 0; i < plan.level_sizes.size(); ++i)
        ops += plan.level_sizes[i] * (i == 0 ? s.input_dim : hid);  // pooling
    ops += s.readout_dim() * s.classes;
    return ops;
}

ForwardResult forward(const TreeModel& model, const TreePlan& plan, const FeatureMatrix& x0,
                      const ForwardOptions& options)
{
    const ModelShape& s = model.shape;
    if (plan.height != s.height)
        throw StructureError("tree height " + std::to_string(plan.height) + " does not match model height " +
                             std::to_string(s.height));
    if (static_cast<std::size_t>(x0.rows()) != plan.level_sizes[0])
        throw StructureError("feature rows (" + std::to_string(x0.rows()) + ") differ from leaf count (" +
                             std::to_string(plan.level_sizes[0]) + ")");
    if (static_cast<std::size_t>(x0.cols()) != s.input_dim)
        throw StructureError("feature width " + std::to_string(x0.cols()) + " differs from model input " +
                             std::to_string(s.input_dim));
    if (options.dropout < 0.0 || options.dropout >= 1.0)
        throw ConfigError("dropout must be in [0, 1)");

    ForwardResult out;
    out.pool = options.pool;
    out.level_sizes = plan.level_sizes;
    out.levels.resize(static_cast<std::size_t>(s.height) + 1);
    out.readout.resize(static_cast<Eigen::Index>(s.readout_dim()));
    const bool drop = options.train_mode && options.dropout > 0.0;
    Rng rng(options.dropout_seed);

    auto pool_into = [&](const RowMatrix& x, Eigen::Index offset) {
        Eigen::RowVectorXd p = x.colwise().sum();
        if (options.pool == Pool::mean)
            p /= static_cast<double>(x.rows());
        out.readout.segment(offset, p.size()) = p.transpose();
        out.mult_adds += static_cast<std::uint64_t>(x.rows() * x.cols());
    };

    // Level 0 rows follow the plan's leaf order.
    RowMatrix below(x0.rows(), x0.cols());
    for (std::size_t r = 0; r < plan.leaf_token.size(); ++r)
        below.row(static_cast<Eigen::Index>(r)) = x0.row(static_cast<Eigen::Index>(plan.leaf_token[r]));
    pool_into(below, 0);
    Eigen::Index offset = below.cols();

    for (int level = 1; level <= s.height; ++level) {
        LevelActivations& act = out.levels[static_cast<std::size_t>(level)];
        const auto rows = static_cast<Eigen::Index>(plan.level_sizes[static_cast<std::size_t>(level)]);
        const auto& parents = plan.parent_row[static_cast<std::size_t>(level - 1)];

        act.summed = RowMatrix::Zero(rows, below.cols());
        for (std::size_t r = 0; r < parents.size(); ++r)
            act.summed.row(static_cast<Eigen::Index>(parents[r])) += below.row(static_cast<Eigen::Index>(r));
        act.pre_relu = act.summed * model.fc1_weight(level);
        act.pre_relu.rowwise() += model.fc1_bias(level).row(0);
        act.hidden = act.pre_relu.cwiseMax(0.0);
        act.output = act.hidden * model.fc2_weight(level);
        act.output.rowwise() += model.fc2_bias(level).row(0);
        if (drop) {
            const double keep_scale = 1.0 / (1.0 - options.dropout);
            act.mask.resize(act.output.rows(), act.output.cols());
            for (Eigen::Index i = 0; i < act.mask.rows(); ++i)
                for (Eigen::Index j = 0; j < act.mask.cols(); ++j)
                    act.mask(i, j) = rng.uniform01() < options.dropout ? 0.0 : keep_scale;
            act.output = act.output.cwiseProduct(act.mask);
        }
        out.mult_adds += static_cast<std::uint64_t>(below.rows() * below.cols());
        out.mult_adds += static_cast<std::uint64_t>(rows * (below.cols() * act.pre_relu.cols() +
                                                            act.hidden.cols() * act.output.cols()));
        pool_into(act.output, offset);
        offset += act.output.cols();
        below = act.output;
    }

    out.logits = model.classifier_weight().transpose() * out.readout + model.classifier_bias().row(0).transpose();
    out.mult_adds += static_cast<std::uint64_t>(model.classifier_weight().size());
    const double top = out.logits.maxCoeff();
    out.probs = (out.logits.array() - top).exp();
    out.probs /= out.probs.sum();
    return out;
}

LossValue cross_entropy(const Eigen::VectorXd& probs, ClassId gold)
{
    if (gold < 0 || gold >= probs.size())
        throw ConfigError("gold class " + std::to_string(gold) + " out of range");
    const double p = probs(gold);
    if (p < kProbabilityFloor)
        return {-std::log(kProbabilityFloor), true};
    return {-std::log(p), false};
}

void backward(const TreeModel& model, const TreePlan& plan, const ForwardResult& fwd, ClassId gold,
              Gradients& grads, double scale)
{
    const ModelShape& s = model.shape;
    Eigen::VectorXd dlogits = fwd.probs;
    dlogits(gold) -= 1.0;
    dlogits *= scale;

    grads.back() += dlogits.transpose();
    grads[grads.size() - 2] += fwd.readout * dlogits.transpose();
    const Eigen::VectorXd dreadout = model.classifier_weight() * dlogits;

    // Gradient flowing into level i outputs from the level above.
    RowMatrix from_above;
    Eigen::Index offset = static_cast<Eigen::Index>(s.readout_dim());
    for (int level = s.height; level >= 1; --level) {
        const LevelActivations& act = fwd.levels[static_cast<std::size_t>(level)];
        const Eigen::Index rows = act.output.rows();
        const Eigen::Index width = act.output.cols();
        offset -= width;

        Eigen::RowVectorXd dpool = dreadout.segment(offset, width).transpose();
        if (fwd.pool == Pool::mean)
            dpool /= static_cast<double>(rows);
        RowMatrix dout = dpool.replicate(rows, 1);
        if (from_above.size() > 0)
            dout += from_above;
        if (act.mask.size() > 0)
            dout = dout.cwiseProduct(act.mask);

        const std::size_t base = 4 * static_cast<std::size_t>(level - 1);
        grads[base + 2].noalias() += act.hidden.transpose() * dout;
        grads[base + 3] += dout.colwise().sum();
        RowMatrix dpre = dout * model.fc2_weight(level).transpose();
        dpre = dpre.cwiseProduct((act.pre_relu.array() > 0.0).cast<double>().matrix());
        grads[base].noalias() += act.summed.transpose() * dpre;
        grads[base + 1] += dpre.colwise().sum();

        if (level == 1)
            break;
        const RowMatrix dsummed = dpre * model.fc1_weight(level).transpose();
        const auto& parents = plan.parent_row[static_cast<std::size_t>(level - 1)];
        from_above.resize(static_cast<Eigen::Index>(parents.size()), dsummed.cols());
        for (std::size_t r = 0; r < parents.size(); ++r)
            from_above.row(static_cast<Eigen::Index>(r)) = dsummed.row(static_cast<Eigen::Index>(parents[r]));
    }
}

Eigen::Index argmax(const Eigen::VectorXd& v)
{
    Eigen::Index best = 0;
    v.maxCoeff(&best);
    return best;
}

} // namespace hint
