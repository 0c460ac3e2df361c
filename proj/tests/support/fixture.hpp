#pragma once

#include <string>

#include "hint/pipeline.hpp"

namespace hint::testing {

inline const fs::path& fixture_dir()
{
    static const fs::path dir = HINT_FIXTURE_DIR;
    return dir;
}

// The bundled 40-document corpus with SEMA trees and default features.
struct FixtureCorpus {
    Corpus corpus;
    std::vector<FeatureMatrix> features;
    std::vector<TreeFile> trees;
    std::vector<Example> examples;
};

inline FixtureCorpus load_fixture(int height = 2, std::size_t position_slots = kDefaultPositionSlots,
                                  std::uint64_t feature_seed = 0)
{
    const fs::path dir = fixture_dir() / "corpus";
    FixtureCorpus f;
    const auto manifest = parse_manifest(read_text_file(dir / "manifest.jsonl"));
    auto built = build_graphs(manifest, dir, GraphMode::dependency, kDefaultCooccurrenceWindow, Execution::serial);
    if (!built.failures.empty())
        throw Error("fixture corpus failed to build: " + built.failures.front().message);
    f.corpus = std::move(built.corpus);
    const EmbeddingTable table = load_embeddings((dir / "embeddings.txt").string());
    f.features = featurize_corpus(f.corpus, table, FeatureConfig{position_slots, feature_seed}, Execution::serial);
    f.trees = build_trees(f.corpus.graphs, height, TreeMethod::sema, 0, Execution::serial);
    f.examples = make_examples(f.corpus, f.trees, f.features);
    return f;
}

} // namespace hint::testing
