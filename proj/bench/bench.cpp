#include <benchmark/benchmark.h>

#include "hint/pipeline.hpp"
#include "hint/rng.hpp"

using namespace hint;

namespace {

// Sentence-like graphs: random trees with a few extra edges.
std::vector<DocumentGraph> synthetic_graphs(std::size_t docs, std::size_t tokens)
{
    std::vector<DocumentGraph> out;
    for (std::size_t d = 0; d < docs; ++d) {
        Rng rng(d);
        std::vector<Token> toks;
        for (std::size_t i = 0; i < tokens; ++i)
            toks.push_back(Token{static_cast<TokenId>(i), "w" + std::to_string(rng.below(500)), 0});
        std::vector<DependencyRecord> deps;
        for (std::size_t i = 1; i < tokens; ++i)
            deps.push_back({static_cast<TokenId>(rng.below(i)), static_cast<TokenId>(i), "dep"});
        out.push_back(build_dependency_graph(toks, deps, {0}, "d" + std::to_string(d), static_cast<ClassId>(d % 2)));
    }
    return out;
}

void BM_BuildTrees(benchmark::State& state)
{
    const auto graphs = synthetic_graphs(64, static_cast<std::size_t>(state.range(1)));
    const auto exec = state.range(0) == 0 ? Execution::serial : Execution::parallel;
    for (auto _ : state)
        benchmark::DoNotOptimize(build_trees(graphs, 3, TreeMethod::sema, 0, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(graphs.size()));
    state.SetLabel(exec == Execution::serial ? "serial" : "parallel");
}

void BM_BatchGradient(benchmark::State& state)
{
    const auto graphs = synthetic_graphs(32, 40);
    Corpus corpus{graphs, std::vector<Split>(graphs.size(), Split::train)};
    EmbeddingTable table;
    table.dim = 50;
    const auto features = featurize_corpus(corpus, table, FeatureConfig{64, 0}, Execution::serial);
    const auto trees = build_trees(graphs, 2, TreeMethod::sema, 0, Execution::serial);
    const auto examples = make_examples(corpus, trees, features);
    const auto model = TreeModel::init(ModelShape{114, 96, 2, 2}, 1);
    std::vector<std::size_t> batch(examples.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        batch[i] = i;
    ForwardOptions opts;
    opts.train_mode = true;
    opts.dropout = 0.5;
    const auto exec = state.range(0) == 0 ? Execution::serial : Execution::parallel;
    for (auto _ : state)
        benchmark::DoNotOptimize(batch_gradient(model, examples, batch, opts, 7, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(batch.size()));
    state.SetLabel(exec == Execution::serial ? "serial" : "parallel");
}

} // namespace

BENCHMARK(BM_BuildTrees)->ArgsProduct({{0, 1}, {30, 200}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
