#include "hint/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>

#include <omp.h>

#include "hint/errors.hpp"
#include "hint/rng.hpp"

namespace hint {

using json = nlohmann::json;

std::string read_text_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file_atomic(const fs::path& path, std::string_view text)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write '" + tmp.string() + "'");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out)
            throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

GraphMode parse_graph_mode(std::string_view s)
{
    if (s == "dependency")
        return GraphMode::dependency;
    if (s == "cooccurrence")
        return GraphMode::cooccurrence;
    throw ConfigError("unknown graph mode '" + std::string(s) + "' (expected dependency or cooccurrence)");
}

std::string_view to_string(GraphMode m) noexcept
{
    return m == GraphMode::dependency ? "dependency" : "cooccurrence";
}

TreeMethod parse_tree_method(std::string_view s)
{
    if (s == "sema")
        return TreeMethod::sema;
    if (s == "random")
        return TreeMethod::random;
    throw ConfigError("unknown tree method '" + std::string(s) + "' (expected sema or random)");
}

std::string_view to_string(TreeMethod m) noexcept { return m == TreeMethod::sema ? "sema" : "random"; }

DocumentGraph graph_from_parsed(const ParsedDocument& doc, GraphMode mode, int window)
{
    if (mode == GraphMode::cooccurrence)
        return build_cooccurrence_graph(doc.tokens, window, doc.doc_id, doc.label);
    return build_dependency_graph(doc.tokens, doc.dependencies, doc.sentence_roots, doc.doc_id, doc.label);
}

std::vector<std::size_t> Corpus::indices(Split s) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits.size(); ++i)
        if (splits[i] == s)
            out.push_back(i);
    return out;
}

namespace {

int thread_count(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

template <typename Body>
void for_each_doc(std::size_t n, Execution exec, int workers, Body&& body)
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
#pragma omp critical(hint_pipeline_failure)
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

std::string file_stem(const std::string& doc_id)
{
    std::string s = doc_id;
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
            c = '_';
    if (s.empty() || s[0] == '.')
        s.insert(s.begin(), '_');
    return s;
}

std::string hex64(std::uint64_t v)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

} // namespace

GraphBuildResult build_graphs(const std::vector<ManifestEntry>& manifest, const fs::path& base_dir, GraphMode mode,
                              int window, Execution exec, int workers)
{
    if (mode == GraphMode::cooccurrence && window < 2)
        throw ConfigError("co-occurrence window must be >= 2");
    const std::size_t n = manifest.size();
    std::vector<std::optional<DocumentGraph>> built(n);
    std::vector<std::string> errors(n);
    for_each_doc(n, exec, workers, [&](std::size_t k) {
        const ManifestEntry& e = manifest[k];
        try {
            const fs::path path = fs::path(e.path).is_absolute() ? fs::path(e.path) : base_dir / e.path;
            ParsedDocument doc = parse_parsed_document(read_text_file(path));
            if (doc.doc_id != e.doc_id)
                throw Error("file holds doc_id '" + doc.doc_id + "', manifest says '" + e.doc_id + "'");
            DocumentGraph g = graph_from_parsed(doc, mode, window);
            validate_graph(g);
            built[k] = std::move(g);
        } catch (const std::exception& ex) {
            errors[k] = ex.what();
        }
    });

    GraphBuildResult out;
    for (std::size_t k = 0; k < n; ++k) {
        if (built[k]) {
            out.corpus.graphs.push_back(std::move(*built[k]));
            out.corpus.splits.push_back(manifest[k].split);
        } else {
            out.failures.push_back({manifest[k].doc_id, errors[k]});
        }
    }
    return out;
}

void write_graph_stage(const Corpus& corpus, const fs::path& dir)
{
    fs::create_directories(dir);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < corpus.graphs.size(); ++i) {
        const DocumentGraph& g = corpus.graphs[i];
        const std::string name = file_stem(g.doc_id) + ".json";
        write_text_file_atomic(dir / name, serialize_graph(g) + "\n");
        entries.push_back({g.doc_id, corpus.splits[i], name});
    }
    write_text_file_atomic(dir / "manifest.jsonl", serialize_manifest(entries));
}

Corpus load_graph_stage(const fs::path& dir)
{
    const fs::path manifest_path = dir / "manifest.jsonl";
    if (!fs::exists(manifest_path))
        throw Error("no graph stage at '" + dir.string() + "' (missing manifest.jsonl); run build-graphs first");
    const auto entries = parse_manifest(read_text_file(manifest_path));
    Corpus corpus;
    for (const auto& e : entries) {
        const fs::path path = dir / e.path;
        DocumentGraph g;
        try {
            g = parse_graph(read_text_file(path));
        } catch (const ParseError& ex) {
            throw ParseError(path.string() + ":" + ex.location(), ex.what());
        }
        if (g.doc_id != e.doc_id)
            throw Error("graph file '" + path.string() + "' holds doc_id '" + g.doc_id + "'");
        corpus.graphs.push_back(std::move(g));
        corpus.splits.push_back(e.split);
    }
    return corpus;
}

std::vector<TreeFile> build_trees(const std::vector<DocumentGraph>& graphs, int height, TreeMethod method,
                                  std::uint64_t seed, Execution exec, int workers)
{
    std::vector<TreeFile> out(graphs.size());
    for_each_doc(graphs.size(), exec, workers, [&](std::size_t k) {
        const DocumentGraph& g = graphs[k];
        const CodingResult r = method == TreeMethod::sema
                                   ? sema(g, height)
                                   : random_tree(g, height, mix_seed(seed, stable_hash(g.doc_id)));
        out[k] = TreeFile{g.doc_id, r.tree, r.entropy_bits};
    });
    return out;
}

double mean_entropy(const std::vector<TreeFile>& trees)
{
    if (trees.empty())
        return 0.0;
    double s = 0.0;
    for (const auto& t : trees)
        s += t.entropy_bits;
    return s / static_cast<double>(trees.size());
}

void write_tree_stage(const std::vector<TreeFile>& trees, const TreeStageInfo& info, const fs::path& dir)
{
    fs::create_directories(dir);
    json files = json::array();
    for (const auto& t : trees) {
        const std::string name = file_stem(t.doc_id) + ".tree.json";
        write_text_file_atomic(dir / name, serialize_tree(t) + "\n");
        files.push_back(json{{"doc_id", t.doc_id}, {"path", name}});
    }
    json stage{{"height", info.height},
               {"method", to_string(info.method)},
               {"seed", info.seed},
               {"documents", trees.size()},
               {"mean_entropy", info.mean_entropy},
               {"files", std::move(files)}};
    write_text_file_atomic(dir / "stage.json", stage.dump(2) + "\n");
}

std::vector<TreeFile> load_tree_stage(const fs::path& dir, const std::vector<DocumentGraph>& graphs,
                                      TreeStageInfo* info)
{
    const fs::path stage_path = dir / "stage.json";
    if (!fs::exists(stage_path))
        throw Error("no tree stage at '" + dir.string() + "' (missing stage.json); run build-trees first");
    json stage;
    std::map<std::string, std::string> paths;
    try {
        stage = json::parse(read_text_file(stage_path));
        for (const auto& f : stage.at("files"))
            paths.emplace(f.at("doc_id").get<std::string>(), f.at("path").get<std::string>());
        if (info != nullptr) {
            info->height = stage.at("height").get<int>();
            info->method = parse_tree_method(stage.at("method").get<std::string>());
            info->seed = stage.at("seed").get<std::uint64_t>();
            info->documents = stage.at("documents").get<std::size_t>();
            info->mean_entropy = stage.at("mean_entropy").get<double>();
        }
    } catch (const json::exception& e) {
        throw ParseError(stage_path.string(), e.what());
    }

    std::vector<TreeFile> out;
    for (const auto& g : graphs) {
        const auto it = paths.find(g.doc_id);
        if (it == paths.end())
            throw Error("no tree for document '" + g.doc_id + "' in '" + dir.string() +
                        "'; rebuild trees from the same graphs");
        const fs::path path = dir / it->second;
        TreeFile t;
        try {
            t = parse_tree(read_text_file(path));
        } catch (const ParseError& ex) {
            throw ParseError(path.string() + ":" + ex.location(), ex.what());
        }
        if (t.doc_id != g.doc_id)
            throw Error("tree file '" + path.string() + "' holds doc_id '" + t.doc_id + "'");
        check_tree(t.tree, g.num_vertices(), true);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<FeatureMatrix> featurize_corpus(const Corpus& corpus, const EmbeddingTable& table,
                                            const FeatureConfig& fc, Execution exec, int workers)
{
    std::vector<FeatureMatrix> out(corpus.graphs.size());
    for_each_doc(out.size(), exec, workers,
                 [&](std::size_t k) { out[k] = featurize(corpus.graphs[k], table, fc.position_slots, fc.seed); });
    return out;
}

std::uint64_t corpus_feature_digest(const std::vector<FeatureMatrix>& features)
{
    std::uint64_t h = features.size();
    for (const auto& f : features)
        h = mix_seed(h, feature_digest(f));
    return h;
}

std::vector<Example> make_examples(const Corpus& corpus, const std::vector<TreeFile>& trees,
                                   const std::vector<FeatureMatrix>& features)
{
    if (trees.size() != corpus.graphs.size() || features.size() != corpus.graphs.size())
        throw StructureError("corpus, trees and features differ in document count");
    std::vector<Example> out;
    out.reserve(trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i)
        out.push_back(Example{plan_tree(trees[i].tree), features[i], corpus.graphs[i].label});
    return out;
}

Stat summarize(const std::vector<double>& values)
{
    Stat s;
    if (values.empty())
        return s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

namespace {

std::vector<Example> pick(const std::vector<Example>& all, const std::vector<std::size_t>& idx)
{
    std::vector<Example> out;
    out.reserve(idx.size());
    for (std::size_t i : idx)
        out.push_back(all[i]);
    return out;
}

void finalize(RunReport& r)
{
    std::vector<double> tr, va, te;
    for (const auto& run : r.runs) {
        tr.push_back(run.train_acc);
        va.push_back(run.val_acc);
        te.push_back(run.test_acc);
    }
    r.train_acc = summarize(tr);
    r.val_acc = summarize(va);
    r.test_acc = summarize(te);
}

} // namespace

ExperimentOutput run_experiment(const Corpus& corpus, const std::vector<Example>& examples, const TrainConfig& config,
                                const FeatureConfig& fc, int runs, Execution exec)
{
    if (runs < 1)
        throw ConfigError("--runs must be >= 1");
    config.validate();
    if (examples.size() != corpus.graphs.size())
        throw StructureError("examples do not match the corpus");
    const auto start = std::chrono::steady_clock::now();

    const auto train_idx = corpus.indices(Split::train);
    const auto test_idx = corpus.indices(Split::test);
    if (train_idx.empty())
        throw ConfigError("corpus has no training documents");
    const std::vector<Example> train_set = pick(examples, train_idx);
    const std::vector<Example> test_set = pick(examples, test_idx);

    ExperimentOutput out;
    RunReport& r = out.report;
    r.config = config;
    r.features = fc;
    r.classes = count_classes(examples);
    r.train_docs = train_idx.size();
    r.test_docs = test_idx.size();
    const ModelShape shape{static_cast<std::size_t>(examples.front().features.cols()), config.hidden, config.height,
                           r.classes};
    r.params = count_params(shape);
    {
        std::vector<FeatureMatrix> feats;
        for (const auto& e : examples)
            feats.push_back(e.features);
        r.feature_digest = corpus_feature_digest(feats);
    }

    std::vector<std::size_t> all_test(test_set.size());
    std::iota(all_test.begin(), all_test.end(), std::size_t{0});
    for (int k = 0; k < runs; ++k) {
        TrainConfig cfg = config;
        cfg.seed = config.seed + static_cast<std::uint64_t>(k);
        TrainResult tr = train(TreeModel::init(shape, mix_seed(cfg.seed, 0x1417)), train_set, cfg, exec);
        RunResult run;
        run.seed = cfg.seed;
        run.train_acc = evaluate(tr.model, train_set, tr.split.train, cfg.pool, exec, cfg.workers).accuracy;
        run.val_acc = evaluate(tr.model, train_set, tr.split.validation, cfg.pool, exec, cfg.workers).accuracy;
        run.test_acc = evaluate(tr.model, test_set, all_test, cfg.pool, exec, cfg.workers).accuracy;
        run.best_epoch = tr.best_epoch;
        run.epochs = static_cast<int>(tr.history.size());
        r.runs.push_back(run);
        if (k == 0)
            out.first = std::move(tr);
    }
    finalize(r);
    r.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

namespace {

json stat_json(const Stat& s)
{
    json j{{"mean", s.mean}};
    if (s.std)
        j["std"] = *s.std;
    return j;
}

json config_json(const RunReport& r)
{
    const TrainConfig& c = r.config;
    return json{{"height", c.height},
                {"hidden", c.hidden},
                {"pool", to_string(c.pool)},
                {"lr", c.lr},
                {"dropout", c.dropout},
                {"batch", c.batch},
                {"seed", c.seed},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"position_slots", r.features.position_slots},
                {"feature_seed", r.features.seed}};
}

} // namespace

json report_json(const RunReport& r)
{
    json runs = json::array();
    for (const auto& run : r.runs)
        runs.push_back(json{{"seed", run.seed},
                            {"train_acc", run.train_acc},
                            {"val_acc", run.val_acc},
                            {"test_acc", run.test_acc},
                            {"best_epoch", run.best_epoch},
                            {"epochs", run.epochs}});
    return json{{"config", config_json(r)},
                {"classes", r.classes},
                {"documents", {{"train", r.train_docs}, {"test", r.test_docs}}},
                {"params", r.params},
                {"feature_digest", hex64(r.feature_digest)},
                {"runs", std::move(runs)},
                {"accuracy",
                 {{"train", stat_json(r.train_acc)}, {"val", stat_json(r.val_acc)}, {"test", stat_json(r.test_acc)}}},
                {"wall_clock_seconds", r.wall_clock_seconds}};
}

json sweep_json(const std::vector<SweepRow>& rows)
{
    json table = json::array();
    double wall = 0.0;
    for (const auto& row : rows) {
        json j = report_json(row.report);
        j.erase("wall_clock_seconds");
        j["height"] = row.height;
        j["mean_entropy"] = row.mean_entropy;
        table.push_back(std::move(j));
        wall += row.report.wall_clock_seconds;
    }
    return json{{"sweep", std::move(table)}, {"wall_clock_seconds", wall}};
}

AblationReport ablate_random_trees(const Corpus& corpus, const std::vector<FeatureMatrix>& features,
                                   const TrainConfig& config, const FeatureConfig& fc, int runs, Execution exec)
{
    if (runs < 1)
        throw ConfigError("--runs must be >= 1");
    AblationReport a;
    const auto sema_trees = build_trees(corpus.graphs, config.height, TreeMethod::sema, 0, exec, config.workers);
    const auto sema_examples = make_examples(corpus, sema_trees, features);
    a.sema_mean_entropy = mean_entropy(sema_trees);

    double random_entropy = 0.0;
    const std::uint64_t digest = corpus_feature_digest(features);
    a.features_identical = true;
    for (int k = 0; k < runs; ++k) {
        TrainConfig cfg = config;
        cfg.seed = config.seed + static_cast<std::uint64_t>(k);
        RunReport s = run_experiment(corpus, sema_examples, cfg, fc, 1, exec).report;

        const auto rt = build_trees(corpus.graphs, cfg.height, TreeMethod::random, cfg.seed, exec, cfg.workers);
        random_entropy += mean_entropy(rt);
        RunReport r = run_experiment(corpus, make_examples(corpus, rt, features), cfg, fc, 1, exec).report;

        if (k == 0) {
            a.sema = s;
            a.random = r;
            a.sema.runs.clear();
            a.random.runs.clear();
            a.sema.config = a.random.config = config;
            a.sema.wall_clock_seconds = a.random.wall_clock_seconds = 0.0;
        }
        a.features_identical = a.features_identical && s.feature_digest == digest && r.feature_digest == digest;
        a.sema.runs.push_back(s.runs.front());
        a.random.runs.push_back(r.runs.front());
        a.sema.wall_clock_seconds += s.wall_clock_seconds;
        a.random.wall_clock_seconds += r.wall_clock_seconds;
    }
    finalize(a.sema);
    finalize(a.random);
    a.random_mean_entropy = random_entropy / static_cast<double>(runs);
    return a;
}

json ablation_json(const AblationReport& a)
{
    json s = report_json(a.sema);
    json r = report_json(a.random);
    const double wall = a.sema.wall_clock_seconds + a.random.wall_clock_seconds;
    s.erase("wall_clock_seconds");
    r.erase("wall_clock_seconds");
    s["mean_entropy"] = a.sema_mean_entropy;
    r["mean_entropy"] = a.random_mean_entropy;
    return json{{"sema", std::move(s)},
                {"random", std::move(r)},
                {"features_identical", a.features_identical},
                {"sema_minus_random_test_acc", a.sema.test_acc.mean - a.random.test_acc.mean},
                {"wall_clock_seconds", wall}};
}

CodingTree balanced_tree(std::size_t num_leaves, int height)
{
    if (num_leaves == 0)
        throw ConfigError("tree needs at least one leaf");
    if (height < 1)
        throw ConfigError("tree height must be >= 1");
    CodingTree t;
    std::vector<NodeId> current;
    for (std::size_t i = 0; i < num_leaves; ++i) {
        TreeNode leaf;
        leaf.level = 0;
        leaf.leaf_token = static_cast<TokenId>(i);
        t.nodes.push_back(leaf);
        current.push_back(static_cast<NodeId>(i));
    }
    for (int level = 1; level <= height; ++level) {
        std::vector<NodeId> next;
        const std::size_t group = level == height ? current.size() : 2;
        for (std::size_t i = 0; i < current.size(); i += group) {
            TreeNode parent;
            parent.level = level;
            const auto id = static_cast<NodeId>(t.nodes.size());
            for (std::size_t j = i; j < std::min(current.size(), i + group); ++j) {
                parent.children.push_back(current[j]);
                t.nodes[static_cast<std::size_t>(current[j])].parent = id;
            }
            t.nodes.push_back(parent);
            next.push_back(id);
        }
        current = std::move(next);
    }
    t.root = current.front();
    t.height = height;
    return t;
}

json model_report_json(const Checkpoint& c, const std::vector<std::size_t>& leaf_counts)
{
    const ModelShape& s = c.model.shape;
    json sizes = json::array();
    for (std::size_t n : leaf_counts) {
        const TreePlan plan = plan_tree(balanced_tree(n, s.height));
        sizes.push_back(json{{"leaves", n},
                             {"tree_nodes", plan.num_nodes()},
                             {"mult_adds", count_forward_mult_adds(s, plan)}});
    }
    json groups = json::object();
    const auto names = c.model.tensor_names();
    for (std::size_t k = 0; k < names.size(); ++k)
        groups[names[k]] = c.model.tensors[k].size();
    return json{{"shape",
                 {{"input_dim", s.input_dim},
                  {"hidden", s.hidden},
                  {"height", s.height},
                  {"classes", s.classes},
                  {"readout_dim", s.readout_dim()}}},
                {"params", count_params(c.model)},
                {"param_groups", std::move(groups)},
                {"per_document", std::move(sizes)}};
}

namespace {

void flatten(const json& j, const std::string& prefix, std::string& out)
{
    if (j.is_object()) {
        for (const auto& [k, v] : j.items())
            flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten(j[i], prefix + "." + std::to_string(i), out);
    } else {
        out += prefix;
        out += '\t';
        out += j.is_string() ? j.get<std::string>() : j.dump();
        out += '\n';
    }
}

} // namespace

std::string to_tsv(const json& j)
{
    std::string out;
    flatten(j, "", out);
    return out;
}

} // namespace hint
