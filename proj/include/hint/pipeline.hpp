#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hint/coding_tree.hpp"
#include "hint/entropy.hpp"
#include "hint/features.hpp"
#include "hint/graph.hpp"
#include "hint/train.hpp"

namespace hint {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path);
// Writes to a temporary sibling and renames it into place.
void write_text_file_atomic(const fs::path& path, std::string_view text);

enum class GraphMode { dependency, cooccurrence };
GraphMode parse_graph_mode(std::string_view s);
std::string_view to_string(GraphMode m) noexcept;

enum class TreeMethod { sema, random };
TreeMethod parse_tree_method(std::string_view s);
std::string_view to_string(TreeMethod m) noexcept;

DocumentGraph graph_from_parsed(const ParsedDocument& doc, GraphMode mode,
                                int window = kDefaultCooccurrenceWindow);

struct StageFailure {
    std::string doc_id;
    std::string message;
};

struct Corpus {
    std::vector<DocumentGraph> graphs;
    std::vector<Split> splits;

    std::vector<std::size_t> indices(Split s) const;
};

struct GraphBuildResult {
    Corpus corpus;  // successful documents, manifest order
    std::vector<StageFailure> failures;
};

// Manifest paths are resolved against base_dir.
GraphBuildResult build_graphs(const std::vector<ManifestEntry>& manifest, const fs::path& base_dir, GraphMode mode,
                              int window, Execution exec, int workers = 0);

// Writes one graph file per document plus manifest.jsonl into dir.
void write_graph_stage(const Corpus& corpus, const fs::path& dir);
// Throws Error naming the missing stage when dir has no manifest.
Corpus load_graph_stage(const fs::path& dir);

// Per-document random seed is derived from (seed, doc_id).
std::vector<TreeFile> build_trees(const std::vector<DocumentGraph>& graphs, int height, TreeMethod method,
                                  std::uint64_t seed, Execution exec, int workers = 0);

struct TreeStageInfo {
    int height = 0;
    TreeMethod method = TreeMethod::sema;
    std::uint64_t seed = 0;
    double mean_entropy = 0.0;
    std::size_t documents = 0;
};

double mean_entropy(const std::vector<TreeFile>& trees);

void write_tree_stage(const std::vector<TreeFile>& trees, const TreeStageInfo& info, const fs::path& dir);
// Returns trees in the order of `graphs`; throws Error if any is missing or
// does not match its graph.
std::vector<TreeFile> load_tree_stage(const fs::path& dir, const std::vector<DocumentGraph>& graphs,
                                      TreeStageInfo* info = nullptr);

struct FeatureConfig {
    std::size_t position_slots = kDefaultPositionSlots;
    std::uint64_t seed = 0;
};

std::vector<FeatureMatrix> featurize_corpus(const Corpus& corpus, const EmbeddingTable& table,
                                            const FeatureConfig& fc, Execution exec, int workers = 0);
std::uint64_t corpus_feature_digest(const std::vector<FeatureMatrix>& features);

std::vector<Example> make_examples(const Corpus& corpus, const std::vector<TreeFile>& trees,
                                   const std::vector<FeatureMatrix>& features);

struct Stat {
    double mean = 0.0;
    std::optional<double> std;  // sample deviation, only when runs >= 2
};

Stat summarize(const std::vector<double>& values);

struct RunResult {
    std::uint64_t seed = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    int best_epoch = 0;
    int epochs = 0;
};

struct RunReport {
    TrainConfig config;
    FeatureConfig features;
    std::size_t classes = 0;
    std::size_t train_docs = 0;
    std::size_t test_docs = 0;
    std::size_t params = 0;
    std::uint64_t feature_digest = 0;
    std::vector<RunResult> runs;
    Stat train_acc, val_acc, test_acc;
    double wall_clock_seconds = 0.0;
};

struct ExperimentOutput {
    RunReport report;
    TrainResult first;  // run 0, for checkpointing
};

// runs training runs with seeds config.seed, config.seed + 1, ...
ExperimentOutput run_experiment(const Corpus& corpus, const std::vector<Example>& examples, const TrainConfig& config,
                                const FeatureConfig& fc, int runs, Execution exec = Execution::parallel);

nlohmann::json report_json(const RunReport& r);

struct SweepRow {
    int height = 0;
    double mean_entropy = 0.0;
    RunReport report;
};

nlohmann::json sweep_json(const std::vector<SweepRow>& rows);

struct AblationReport {
    RunReport sema;
    RunReport random;
    double sema_mean_entropy = 0.0;
    double random_mean_entropy = 0.0;
    bool features_identical = false;
};

// Same features, same configs; only the coding trees differ. Random trees use
// the run seed.
AblationReport ablate_random_trees(const Corpus& corpus, const std::vector<FeatureMatrix>& features,
                                   const TrainConfig& config, const FeatureConfig& fc, int runs,
                                   Execution exec = Execution::parallel);

nlohmann::json ablation_json(const AblationReport& a);

// Parameter and per-document multiply-add report for a checkpoint. Each entry
// of `leaf_counts` gets a balanced aligned tree with that many leaves.
nlohmann::json model_report_json(const Checkpoint& c, const std::vector<std::size_t>& leaf_counts);

// Balanced binary-ish aligned tree over n leaves with the given height.
CodingTree balanced_tree(std::size_t num_leaves, int height);

// Flattens a JSON object into "key<TAB>value" lines with dotted paths.
std::string to_tsv(const nlohmann::json& j);

} // namespace hint
