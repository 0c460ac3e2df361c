#include "hint/train.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <omp.h>

#include <json.hpp>

#include "hint/errors.hpp"
#include "hint/rng.hpp"

namespace hint {

using json = nlohmann::json;

void TrainConfig::validate() const
{
    if (height < 2 || height > 12)
        throw ConfigError("height must be in [2, 12], got " + std::to_string(height));
    if (dropout < 0.0 || dropout >= 1.0)
        throw ConfigError("dropout must be in [0, 1)");
    if (hidden == 0)
        throw ConfigError("hidden size must be positive");
    if (batch == 0)
        throw ConfigError("batch size must be positive");
    if (lr < 0.0)
        throw ConfigError("learning rate must be non-negative");
    if (max_epochs < 1 || patience < 1)
        throw ConfigError("max_epochs and patience must be >= 1");
}

Adam::Adam(const TreeModel& model, double lr, AdamConfig cfg) : lr_(lr), cfg_(cfg)
{
    for (const auto& t : model.tensors) {
        m_.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
        v_.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    }
}

void Adam::step(TreeModel& model, const Gradients& grads)
{
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < model.tensors.size(); ++k) {
        m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grads[k];
        v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grads[k].cwiseAbs2();
        model.tensors[k].array() -=
            lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + cfg_.eps);
    }
}

namespace {

int thread_count(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

// Runs body(k) for k in [0, n); rethrows the first exception on the caller.
template <typename Body>
void for_each_index(std::size_t n, Execution exec, int workers, Body&& body)
{
    if (exec == Execution::serial) {
        for (std::size_t k = 0; k < n; ++k)
            body(k);
        return;
    }
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(workers))
    for (std::size_t k = 0; k < n; ++k) {
        try {
            body(k);
        } catch (...) {
#pragma omp critical(hint_failure)
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace

BatchGradient batch_gradient(const TreeModel& model, std::span<const Example> data,
                             std::span<const std::size_t> indices, const ForwardOptions& base,
                             std::uint64_t dropout_stream, Execution exec, int workers)
{
    const std::size_t b = indices.size();
    std::vector<Gradients> per_doc(b);
    std::vector<double> losses(b, 0.0);
    for_each_index(b, exec, workers, [&](std::size_t k) {
        const Example& ex = data[indices[k]];
        ForwardOptions opts = base;
        opts.dropout_seed = mix_seed(dropout_stream, indices[k]);
        const ForwardResult fwd = forward(model, ex.plan, ex.features, opts);
        losses[k] = cross_entropy(fwd.probs, ex.label).value;
        per_doc[k] = zero_gradients(model);
        backward(model, ex.plan, fwd, ex.label, per_doc[k]);
    });

    BatchGradient out;
    out.grads = zero_gradients(model);
    for (std::size_t k = 0; k < b; ++k) {
        for (std::size_t t = 0; t < out.grads.size(); ++t)
            out.grads[t] += per_doc[k][t];
        out.loss_sum += losses[k];
    }
    if (b > 0)
        for (auto& g : out.grads)
            g /= static_cast<double>(b);
    return out;
}

Evaluation evaluate(const TreeModel& model, std::span<const Example> data, std::span<const std::size_t> indices,
                    Pool pool, Execution exec, int workers)
{
    Evaluation ev;
    ev.predictions.assign(indices.size(), 0);
    std::vector<double> losses(indices.size(), 0.0);
    ForwardOptions opts;
    opts.pool = pool;
    for_each_index(indices.size(), exec, workers, [&](std::size_t k) {
        const Example& ex = data[indices[k]];
        const ForwardResult fwd = forward(model, ex.plan, ex.features, opts);
        ev.predictions[k] = static_cast<ClassId>(argmax(fwd.probs));
        losses[k] = cross_entropy(fwd.probs, ex.label).value;
    });
    if (indices.empty())
        return ev;
    std::size_t correct = 0;
    double loss = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        correct += ev.predictions[k] == data[indices[k]].label;
        loss += losses[k];
    }
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
    ev.mean_loss = loss / static_cast<double>(indices.size());
    return ev;
}

DataSplit split_train_validation(std::size_t n, std::uint64_t seed)
{
    if (n < 2)
        throw ConfigError("need at least 2 training documents for a train/validation split, got " +
                          std::to_string(n));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    Rng rng(mix_seed(seed, 0x5b117));
    rng.shuffle(order);
    const auto val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / 10.0)));
    DataSplit split;
    split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(val), order.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

std::size_t count_classes(std::span<const Example> data)
{
    ClassId top = 0;
    for (const auto& ex : data) {
        if (ex.label < 0)
            throw ConfigError("negative class label");
        top = std::max(top, ex.label);
    }
    return static_cast<std::size_t>(top) + 1;
}

TrainResult train(TreeModel model, std::span<const Example> data, const TrainConfig& config, Execution exec)
{
    config.validate();
    if (data.empty())
        throw ConfigError("training set is empty");

    TrainResult result;
    result.split = split_train_validation(data.size(), config.seed);
    Adam optimizer(model, config.lr);

    ForwardOptions train_opts;
    train_opts.pool = config.pool;
    train_opts.dropout = config.dropout;
    train_opts.train_mode = true;

    result.model = model;
    result.best_val_acc = -1.0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<std::size_t> order = result.split.train;
        Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        const std::uint64_t dropout_stream = mix_seed(config.seed ^ 0xd0d0d0d0ULL, static_cast<std::uint64_t>(epoch));

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            const std::size_t end = std::min(order.size(), start + config.batch);
            const std::span<const std::size_t> batch(order.data() + start, end - start);
            const BatchGradient bg = batch_gradient(model, data, batch, train_opts, dropout_stream, exec, config.workers);
            optimizer.step(model, bg.grads);
            loss_sum += bg.loss_sum;
        }

        const Evaluation val = evaluate(model, data, result.split.validation, config.pool, exec, config.workers);
        result.history.push_back(
            {epoch, loss_sum / static_cast<double>(order.size()), val.accuracy, val.mean_loss});

        if (val.accuracy > result.best_val_acc ||
            (val.accuracy == result.best_val_acc && val.mean_loss < best_val_loss)) {
            result.best_val_acc = val.accuracy;
            best_val_loss = val.mean_loss;
            result.best_epoch = epoch;
            result.model = model;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    return result;
}

std::string_view to_string(Pool p) noexcept { return p == Pool::sum ? "sum" : "mean"; }

Pool parse_pool(std::string_view s)
{
    if (s == "sum")
        return Pool::sum;
    if (s == "mean")
        return Pool::mean;
    throw ConfigError("pool must be 'sum' or 'mean', got '" + std::string(s) + "'");
}

namespace {

json config_json(const TrainConfig& c)
{
    return json{{"height", c.height}, {"hidden", c.hidden}, {"pool", to_string(c.pool)},
                {"lr", c.lr},         {"dropout", c.dropout}, {"batch", c.batch},
                {"seed", c.seed},     {"max_epochs", c.max_epochs}, {"patience", c.patience}};
}

} // namespace

std::string serialize_checkpoint(const Checkpoint& c)
{
    const TreeModel& m = c.model;
    json tensors = json::array();
    const auto names = m.tensor_names();
    for (std::size_t k = 0; k < m.tensors.size(); ++k) {
        const auto& t = m.tensors[k];
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(t.size()));
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j)
                data.push_back(t(i, j));
        tensors.push_back(json{{"name", names[k]}, {"rows", t.rows()}, {"cols", t.cols()}, {"data", std::move(data)}});
    }
    json doc{{"format", "hint-checkpoint-1"},
             {"shape",
              {{"input_dim", m.shape.input_dim},
               {"hidden", m.shape.hidden},
               {"height", m.shape.height},
               {"classes", m.shape.classes}}},
             {"config", config_json(c.config)},
             {"position_slots", c.position_slots},
             {"feature_seed", c.feature_seed},
             {"tensors", std::move(tensors)}};
    return doc.dump();
}

Checkpoint parse_checkpoint(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("byte " + std::to_string(e.byte), e.what());
    }
    Checkpoint c;
    try {
        if (doc.at("format") != "hint-checkpoint-1")
            throw ParseError("format", "unsupported checkpoint format");
        const json& s = doc.at("shape");
        ModelShape shape;
        shape.input_dim = s.at("input_dim").get<std::size_t>();
        shape.hidden = s.at("hidden").get<std::size_t>();
        shape.height = s.at("height").get<int>();
        shape.classes = s.at("classes").get<std::size_t>();
        c.model = TreeModel::zeros(shape);

        const json& cfg = doc.at("config");
        c.config.height = cfg.at("height").get<int>();
        c.config.hidden = cfg.at("hidden").get<std::size_t>();
        c.config.pool = parse_pool(cfg.at("pool").get<std::string>());
        c.config.lr = cfg.at("lr").get<double>();
        c.config.dropout = cfg.at("dropout").get<double>();
        c.config.batch = cfg.at("batch").get<std::size_t>();
        c.config.seed = cfg.at("seed").get<std::uint64_t>();
        c.config.max_epochs = cfg.at("max_epochs").get<int>();
        c.config.patience = cfg.at("patience").get<int>();
        c.position_slots = doc.at("position_slots").get<std::size_t>();
        c.feature_seed = doc.at("feature_seed").get<std::uint64_t>();

        const json& tensors = doc.at("tensors");
        const auto names = c.model.tensor_names();
        if (tensors.size() != c.model.tensors.size())
            throw ParseError("tensors", "expected " + std::to_string(names.size()) + " tensors");
        for (std::size_t k = 0; k < names.size(); ++k) {
            const json& t = tensors[k];
            auto& dst = c.model.tensors[k];
            const std::string path = "tensors[" + std::to_string(k) + "]";
            if (t.at("name") != names[k] || t.at("rows").get<Eigen::Index>() != dst.rows() ||
                t.at("cols").get<Eigen::Index>() != dst.cols())
                throw ParseError(path, "tensor name or shape does not match the model shape");
            const json& data = t.at("data");
            if (data.size() != static_cast<std::size_t>(dst.size()))
                throw ParseError(path + ".data", "wrong element count");
            std::size_t idx = 0;
            for (Eigen::Index i = 0; i < dst.rows(); ++i)
                for (Eigen::Index j = 0; j < dst.cols(); ++j)
                    dst(i, j) = data[idx++].get<double>();
        }
    } catch (const json::exception& e) {
        throw ParseError("checkpoint", e.what());
    } catch (const ConfigError& e) {
        throw ParseError("checkpoint", e.what());
    }
    return c;
}

std::string serialize_history(const std::vector<EpochMetrics>& history)
{
    std::string out;
    for (const auto& m : history) {
        out += json{{"epoch", m.epoch}, {"train_loss", m.train_loss}, {"val_acc", m.val_acc}}.dump();
        out += '\n';
    }
    return out;
}

} // namespace hint
