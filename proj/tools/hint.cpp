#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hint/errors.hpp"
#include "hint/pipeline.hpp"

using namespace hint;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct TrainFlags {
    std::string embeddings;
    std::size_t pos_slots = kDefaultPositionSlots;
    std::uint64_t seed = 0;
    int runs = 1;
    std::size_t hidden = 96;
    std::string pool = "mean";
    double lr = 1e-3;
    double dropout = 0.5;
    std::size_t batch = 4;
    int max_epochs = 200;
    int patience = 10;

    TrainConfig config(int height, int workers) const
    {
        TrainConfig c;
        c.height = height;
        c.hidden = hidden;
        c.pool = parse_pool(pool);
        c.lr = lr;
        c.dropout = dropout;
        c.batch = batch;
        c.seed = seed;
        c.max_epochs = max_epochs;
        c.patience = patience;
        c.workers = workers;
        return c;
    }

    FeatureConfig features() const { return FeatureConfig{pos_slots, seed}; }
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool runs_default_three = false)
{
    if (runs_default_three)
        f.runs = 3;
    cmd->add_option("--embeddings", f.embeddings, "word vector file: lines of 'word v1 ... vd'")->required();
    cmd->add_option("--pos-slots", f.pos_slots, "one-hot position slots")->capture_default_str();
    cmd->add_option("--seed", f.seed, "base seed; run k uses seed + k")->capture_default_str();
    cmd->add_option("--runs", f.runs, "independent training runs")->capture_default_str();
    cmd->add_option("--hidden", f.hidden, "hidden width")->capture_default_str();
    cmd->add_option("--pool", f.pool, "per-level pooling")->check(CLI::IsMember({"sum", "mean"}))->capture_default_str();
    cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--dropout", f.dropout, "dropout on level outputs")->capture_default_str();
    cmd->add_option("--batch", f.batch, "minibatch size")->capture_default_str();
    cmd->add_option("--max-epochs", f.max_epochs)->capture_default_str();
    cmd->add_option("--patience", f.patience, "early-stopping patience in epochs")->capture_default_str();
}

void emit(const json& j, const std::string& format)
{
    if (format == "tsv")
        std::cout << to_tsv(j);
    else
        std::cout << j.dump(2) << "\n";
}

std::vector<FeatureMatrix> load_features(const Corpus& corpus, const TrainFlags& f, int workers)
{
    const EmbeddingTable table = load_embeddings(f.embeddings);
    return featurize_corpus(corpus, table, f.features(), Execution::parallel, workers);
}

bool height_allowed(int h, bool force)
{
    if (h >= kMinHeight && h <= kMaxSweepHeight)
        return true;
    std::cerr << "warning: height " << h << " is outside [" << kMinHeight << ", " << kMaxSweepHeight << "]";
    if (force && h >= kMinHeight) {
        std::cerr << "; proceeding (--allow-any-height)\n";
        return true;
    }
    std::cerr << (h < kMinHeight ? "; heights below 2 are not supported\n" : "; pass --allow-any-height to force\n");
    return false;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coding-tree text classification pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    int workers = 0;
    std::string format = "json";
    app.add_option("--workers", workers, "worker threads (0 = OpenMP default)")->capture_default_str();
    app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "tsv"}))->capture_default_str();

    // build-graphs
    auto* bg = app.add_subcommand("build-graphs", "parsed documents -> graph files");
    std::string manifest, mode = "dependency", graphs_out;
    int window = kDefaultCooccurrenceWindow;
    bg->add_option("--manifest", manifest, "JSON-lines manifest of parsed documents")->required();
    bg->add_option("--mode", mode, "dependency or cooccurrence")->capture_default_str();
    bg->add_option("--window", window, "co-occurrence window")->capture_default_str();
    bg->add_option("--out-dir", graphs_out)->required();

    // build-trees
    auto* bt = app.add_subcommand("build-trees", "graph files -> coding tree files");
    std::string bt_graphs, method = "sema", trees_out;
    int height = 2;
    std::uint64_t tree_seed = 0;
    bool allow_any_height = false;
    bt->add_option("--graphs", bt_graphs, "graph stage directory")->required();
    bt->add_option("--height", height)->capture_default_str();
    bt->add_option("--method", method, "sema or random")->capture_default_str();
    bt->add_option("--seed", tree_seed, "seed for random trees")->capture_default_str();
    bt->add_flag("--allow-any-height", allow_any_height, "accept heights above 12");
    bt->add_option("--out-dir", trees_out)->required();

    // train
    auto* tr = app.add_subcommand("train", "train on tree files and evaluate on the test split");
    std::string tr_graphs, tr_trees, tr_out;
    TrainFlags tr_flags;
    tr->add_option("--graphs", tr_graphs)->required();
    tr->add_option("--trees", tr_trees)->required();
    tr->add_option("--out-dir", tr_out, "checkpoint, history and report")->required();
    add_train_flags(tr, tr_flags);

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ev_ckpt, ev_graphs, ev_trees, ev_emb, ev_split = "test";
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--graphs", ev_graphs)->required();
    ev->add_option("--trees", ev_trees)->required();
    ev->add_option("--embeddings", ev_emb)->required();
    ev->add_option("--split", ev_split)->check(CLI::IsMember({"train", "test", "all"}))->capture_default_str();

    // sweep
    auto* sw = app.add_subcommand("sweep", "train at several tree heights");
    std::string sw_graphs;
    std::vector<int> heights{2, 4, 6, 8, 10, 12};
    TrainFlags sw_flags;
    sw->add_option("--graphs", sw_graphs)->required();
    sw->add_option("--heights", heights, "heights to sweep")->delimiter(',')->capture_default_str();
    add_train_flags(sw, sw_flags);

    // ablate-rt
    auto* ab = app.add_subcommand("ablate-rt", "SEMA trees vs random trees of the same height");
    std::string ab_graphs;
    int ab_height = 2;
    TrainFlags ab_flags;
    ab->add_option("--graphs", ab_graphs)->required();
    ab->add_option("--height", ab_height)->capture_default_str();
    add_train_flags(ab, ab_flags, true);

    // report
    auto* rp = app.add_subcommand("report", "parameter and multiply-add counts of a checkpoint");
    std::string rp_ckpt;
    std::vector<std::size_t> leaves{10, 100, 1000};
    rp->add_option("--checkpoint", rp_ckpt)->required();
    rp->add_option("--leaves", leaves, "document sizes for the multiply-add table")->delimiter(',')->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*bg) {
            const GraphMode gm = parse_graph_mode(mode);
            const auto entries = parse_manifest(read_text_file(manifest));
            const auto result = build_graphs(entries, fs::path(manifest).parent_path(), gm, window, Execution::parallel,
                                             workers);
            write_graph_stage(result.corpus, graphs_out);
            std::cout << "built " << result.corpus.graphs.size() << " " << to_string(gm) << " graphs, "
                      << result.failures.size() << " failed\n";
            for (const auto& f : result.failures)
                std::cerr << "error: " << f.doc_id << ": " << f.message << "\n";
            return result.failures.empty() ? kExitOk : kExitRuntime;
        }

        if (*bt) {
            const TreeMethod tm = parse_tree_method(method);
            if (!height_allowed(height, allow_any_height))
                return kExitUsage;
            const Corpus corpus = load_graph_stage(bt_graphs);
            const auto trees = build_trees(corpus.graphs, height, tm, tree_seed, Execution::parallel, workers);
            TreeStageInfo info{height, tm, tree_seed, mean_entropy(trees), trees.size()};
            write_tree_stage(trees, info, trees_out);
            std::cout << "built " << trees.size() << " " << to_string(tm) << " trees of height " << height
                      << ", mean entropy " << info.mean_entropy << " bits\n";
            return kExitOk;
        }

        if (*tr) {
            const Corpus corpus = load_graph_stage(tr_graphs);
            TreeStageInfo info;
            const auto trees = load_tree_stage(tr_trees, corpus.graphs, &info);
            const TrainConfig config = tr_flags.config(info.height, workers);
            config.validate();
            const auto examples = make_examples(corpus, trees, load_features(corpus, tr_flags, workers));
            const auto out = run_experiment(corpus, examples, config, tr_flags.features(), tr_flags.runs);

            fs::create_directories(tr_out);
            const fs::path dir(tr_out);
            write_text_file_atomic(dir / "checkpoint.json",
                                   serialize_checkpoint(Checkpoint{out.first.model, out.report.config,
                                                                   tr_flags.pos_slots, tr_flags.seed}) +
                                       "\n");
            write_text_file_atomic(dir / "history.jsonl", serialize_history(out.first.history));
            json report = report_json(out.report);
            report["trees"] = {{"method", to_string(info.method)}, {"mean_entropy", info.mean_entropy}};
            write_text_file_atomic(dir / "report.json", report.dump(2) + "\n");
            emit(report, format);
            return kExitOk;
        }

        if (*ev) {
            const Checkpoint ckpt = parse_checkpoint(read_text_file(ev_ckpt));
            const Corpus corpus = load_graph_stage(ev_graphs);
            const auto trees = load_tree_stage(ev_trees, corpus.graphs);
            const EmbeddingTable table = load_embeddings(ev_emb);
            const FeatureConfig fc{ckpt.position_slots, ckpt.feature_seed};
            const auto examples =
                make_examples(corpus, trees, featurize_corpus(corpus, table, fc, Execution::parallel, workers));
            std::vector<std::size_t> idx;
            if (ev_split == "all") {
                for (std::size_t i = 0; i < examples.size(); ++i)
                    idx.push_back(i);
            } else {
                idx = corpus.indices(ev_split == "train" ? Split::train : Split::test);
            }
            if (idx.empty())
                throw Error("no documents in split '" + ev_split + "'");
            const Evaluation e = evaluate(ckpt.model, examples, idx, ckpt.config.pool, Execution::parallel, workers);
            emit(json{{"split", ev_split}, {"documents", idx.size()}, {"accuracy", e.accuracy},
                      {"mean_loss", e.mean_loss}},
                 format);
            return kExitOk;
        }

        if (*sw) {
            const Corpus corpus = load_graph_stage(sw_graphs);
            const auto features = load_features(corpus, sw_flags, workers);
            std::vector<SweepRow> rows;
            for (int h : heights) {
                if (!height_allowed(h, false))
                    return kExitUsage;
                const TrainConfig config = sw_flags.config(h, workers);
                const auto trees = build_trees(corpus.graphs, h, TreeMethod::sema, 0, Execution::parallel, workers);
                const auto out = run_experiment(corpus, make_examples(corpus, trees, features), config,
                                                sw_flags.features(), sw_flags.runs);
                rows.push_back({h, mean_entropy(trees), out.report});
            }
            emit(sweep_json(rows), format);
            return kExitOk;
        }

        if (*ab) {
            if (!height_allowed(ab_height, false))
                return kExitUsage;
            const Corpus corpus = load_graph_stage(ab_graphs);
            const auto features = load_features(corpus, ab_flags, workers);
            const auto a = ablate_random_trees(corpus, features, ab_flags.config(ab_height, workers),
                                               ab_flags.features(), ab_flags.runs);
            emit(ablation_json(a), format);
            return kExitOk;
        }

        if (*rp) {
            const Checkpoint ckpt = parse_checkpoint(read_text_file(rp_ckpt));
            emit(model_report_json(ckpt, leaves), format);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
