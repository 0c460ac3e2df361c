#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hint/coding_tree.hpp"
#include "hint/graph.hpp"
#include "hint/rng.hpp"

namespace hint::testing {

// Single-sentence document "t0 t1 ..." with the given undirected edges.
inline DocumentGraph make_graph(std::size_t n, std::vector<Edge> edges, std::string doc_id = "g")
{
    DocumentGraph g;
    g.doc_id = std::move(doc_id);
    for (std::size_t i = 0; i < n; ++i)
        g.tokens.push_back(Token{static_cast<TokenId>(i), "t" + std::to_string(i), 0});
    std::set<Edge> unique;
    for (auto [u, v] : edges)
        unique.insert(u < v ? Edge{u, v} : Edge{v, u});
    g.edges.assign(unique.begin(), unique.end());
    return g;
}

inline DocumentGraph path_graph(std::size_t n)
{
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i)
        e.emplace_back(static_cast<TokenId>(i), static_cast<TokenId>(i + 1));
    return make_graph(n, e);
}

inline DocumentGraph cycle_graph(std::size_t n)
{
    auto g = path_graph(n);
    std::vector<Edge> e = g.edges;
    e.emplace_back(0, static_cast<TokenId>(n - 1));
    return make_graph(n, e);
}

// Random spanning tree plus each remaining pair with probability p.
inline DocumentGraph random_connected_graph(std::size_t n, double p, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<Edge> e;
    for (std::size_t v = 1; v < n; ++v)
        e.emplace_back(static_cast<TokenId>(rng.below(v)), static_cast<TokenId>(v));
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (rng.uniform01() < p)
                e.emplace_back(static_cast<TokenId>(u), static_cast<TokenId>(v));
    return make_graph(n, e, "rand" + std::to_string(seed));
}

// Independent term-by-term structural entropy: explicit leaf sets per node,
// cut and volume counted straight from the edge list.
inline double reference_entropy(const DocumentGraph& g, const CodingTree& t)
{
    const std::size_t n = g.num_vertices();
    std::vector<std::vector<char>> member(t.size(), std::vector<char>(n, 0));
    for (NodeId v = 0; v < static_cast<NodeId>(t.size()); ++v) {
        if (!t[v].is_leaf())
            continue;
        for (NodeId a = v; a != kNoNode; a = t[a].parent)
            member[static_cast<std::size_t>(a)][static_cast<std::size_t>(t[v].leaf_token)] = 1;
    }
    const double two_m = 2.0 * static_cast<double>(g.num_edges());
    if (two_m == 0.0)
        return 0.0;
    auto volume = [&](NodeId a) {
        double s = 0;
        for (auto [u, v] : g.edges)
            s += member[static_cast<std::size_t>(a)][static_cast<std::size_t>(u)] +
                 member[static_cast<std::size_t>(a)][static_cast<std::size_t>(v)];
        return s;
    };
    double h = 0.0;
    for (NodeId a = 0; a < static_cast<NodeId>(t.size()); ++a) {
        if (a == t.root)
            continue;
        double cut = 0;
        for (auto [u, v] : g.edges)
            cut += member[static_cast<std::size_t>(a)][static_cast<std::size_t>(u)] !=
                   member[static_cast<std::size_t>(a)][static_cast<std::size_t>(v)];
        if (cut == 0)
            continue;
        h -= cut / two_m * std::log2(volume(a) / volume(t[a].parent));
    }
    return h;
}

} // namespace hint::testing
