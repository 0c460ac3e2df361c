#include "hint/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hint/errors.hpp"
#include "hint/rng.hpp"

namespace hint {

EntropyContext EntropyContext::build(const DocumentGraph& g, const CodingTree& t)
{
    const std::size_t n = g.num_vertices();
    if (t.num_leaves() != n)
        throw StructureError("tree has " + std::to_string(t.num_leaves()) + " leaves but graph has " +
                             std::to_string(n) + " vertices");
    check_tree(t, n, false);

    std::vector<NodeId> leaf_node(n);
    std::vector<int> depth(t.size(), 0);
    // Depth of every node and the node holding each vertex.
    std::vector<NodeId> stack{t.root};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        if (t[v].is_leaf())
            leaf_node[static_cast<std::size_t>(t[v].leaf_token)] = v;
        for (NodeId c : t[v].children) {
            depth[static_cast<std::size_t>(c)] = depth[static_cast<std::size_t>(v)] + 1;
            stack.push_back(c);
        }
    }

    const std::vector<std::size_t> deg = g.degrees();
    std::vector<double> inner_at(t.size(), 0.0);
    for (const auto& [u, v] : g.edges) {
        NodeId a = leaf_node[static_cast<std::size_t>(u)];
        NodeId b = leaf_node[static_cast<std::size_t>(v)];
        while (a != b) {
            if (depth[static_cast<std::size_t>(a)] >= depth[static_cast<std::size_t>(b)])
                a = t[a].parent;
            else
                b = t[b].parent;
        }
        inner_at[static_cast<std::size_t>(a)] += 1.0;
    }

    EntropyContext ctx;
    ctx.num_edges = g.num_edges();
    ctx.volume.assign(t.size(), 0.0);
    ctx.cut.assign(t.size(), 0.0);
    std::vector<double> inner(t.size(), 0.0);

    // Deepest nodes first so children are finished before their parent.
    std::vector<NodeId> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return depth[static_cast<std::size_t>(a)] > depth[static_cast<std::size_t>(b)];
    });
    for (NodeId v : order) {
        const auto i = static_cast<std::size_t>(v);
        if (t[v].is_leaf())
            ctx.volume[i] = static_cast<double>(deg[static_cast<std::size_t>(t[v].leaf_token)]);
        inner[i] += inner_at[i];
        for (NodeId c : t[v].children) {
            ctx.volume[i] += ctx.volume[static_cast<std::size_t>(c)];
            inner[i] += inner[static_cast<std::size_t>(c)];
        }
        ctx.cut[i] = ctx.volume[i] - 2.0 * inner[i];
    }
    if (ctx.volume[static_cast<std::size_t>(t.root)] != 2.0 * static_cast<double>(ctx.num_edges))
        throw StructureError("root volume differs from 2m");
    return ctx;
}

EntropyResult evaluate_entropy(const DocumentGraph& g, const CodingTree& t)
{
    const EntropyContext ctx = EntropyContext::build(g, t);
    if (ctx.num_edges == 0)
        return {0.0, true};
    const double two_m = 2.0 * static_cast<double>(ctx.num_edges);
    double h = 0.0;
    for (NodeId v = 0; v < static_cast<NodeId>(t.size()); ++v) {
        if (v == t.root)
            continue;
        const double cut = ctx.cut[static_cast<std::size_t>(v)];
        if (cut <= 0.0)
            continue;
        const double vol = ctx.volume[static_cast<std::size_t>(v)];
        const double parent_vol = ctx.volume[static_cast<std::size_t>(t[v].parent)];
        h -= cut / two_m * std::log2(vol / parent_vol);
    }
    return {h, false};
}

double merge_delta(double volume_a, double volume_b, double edges_between, double two_m)
{
    if (edges_between <= 0.0)
        return 0.0;
    return (2.0 * edges_between / two_m) * std::log2((volume_a + volume_b) / two_m);
}

double compress_delta(double parent_volume, double child_volume, double child_cut,
                      double grandchildren_cut_sum, double two_m)
{
    const double weight = grandchildren_cut_sum - child_cut;
    if (weight <= 0.0)
        return 0.0;
    return weight / two_m * std::log2(parent_volume / child_volume);
}

// ---------------------------------------------------------------------------

namespace {

void require_vertices(const DocumentGraph& g)
{
    if (g.num_vertices() == 0)
        throw ValidationError(g.doc_id, -1, "empty graph");
}

void require_height(int h)
{
    if (h < kMinHeight)
        throw ConfigError("coding tree height must be >= " + std::to_string(kMinHeight) + ", got " +
                          std::to_string(h));
}

// Entropy of a two-level tree given block membership, evaluated straight from
// degrees and block cuts without building a tree.
double partition_entropy(const std::vector<std::size_t>& deg, const std::vector<Edge>& edges,
                         const std::vector<int>& block, int num_blocks, double two_m)
{
    std::vector<double> vol(static_cast<std::size_t>(num_blocks), 0.0);
    std::vector<double> cut(static_cast<std::size_t>(num_blocks), 0.0);
    for (std::size_t v = 0; v < deg.size(); ++v)
        vol[static_cast<std::size_t>(block[v])] += static_cast<double>(deg[v]);
    for (const auto& [u, v] : edges) {
        const int bu = block[static_cast<std::size_t>(u)];
        const int bv = block[static_cast<std::size_t>(v)];
        if (bu != bv) {
            cut[static_cast<std::size_t>(bu)] += 1.0;
            cut[static_cast<std::size_t>(bv)] += 1.0;
        }
    }
    double h = 0.0;
    for (int b = 0; b < num_blocks; ++b)
        if (cut[static_cast<std::size_t>(b)] > 0.0)
            h -= cut[static_cast<std::size_t>(b)] / two_m * std::log2(vol[static_cast<std::size_t>(b)] / two_m);
    for (std::size_t v = 0; v < deg.size(); ++v)
        if (deg[v] > 0)
            h -= static_cast<double>(deg[v]) / two_m *
                 std::log2(static_cast<double>(deg[v]) / vol[static_cast<std::size_t>(block[v])]);
    return h;
}

CodingTree two_level_tree(const std::vector<int>& block, int num_blocks)
{
    const std::size_t n = block.size();
    CodingTree t;
    t.nodes.resize(n + static_cast<std::size_t>(num_blocks) + 1);
    const auto root = static_cast<NodeId>(t.size() - 1);
    for (std::size_t v = 0; v < n; ++v) {
        const auto b = static_cast<NodeId>(n) + block[v];
        t.nodes[v].leaf_token = static_cast<TokenId>(v);
        t.nodes[v].parent = b;
        t[b].children.push_back(static_cast<NodeId>(v));
    }
    for (int b = 0; b < num_blocks; ++b) {
        const auto id = static_cast<NodeId>(n) + b;
        t[id].level = 1;
        t[id].parent = root;
        t[root].children.push_back(id);
    }
    t[root].level = 2;
    t.root = root;
    t.height = 2;
    return canonicalize(t);
}

} // namespace

CodingResult oracle_min_entropy(const DocumentGraph& g, int h)
{
    require_vertices(g);
    if (h != 2)
        throw ConfigError("oracle_min_entropy supports height 2 only");
    const std::size_t n = g.num_vertices();
    if (n > kOracleMaxVertices)
        throw SizeError("oracle_min_entropy: " + std::to_string(n) + " vertices exceeds limit of " +
                        std::to_string(kOracleMaxVertices));

    const std::vector<std::size_t> deg = g.degrees();
    const double two_m = 2.0 * static_cast<double>(g.num_edges());

    // Restricted growth strings: block[0] = 0, block[i] <= 1 + max(block[0..i)).
    std::vector<int> block(n, 0);
    std::vector<int> prefix_max(n, 0);
    std::vector<int> best_block = block;
    int best_blocks = 1;
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        const int blocks = prefix_max[n - 1] + 1;
        const double e = two_m > 0.0 ? partition_entropy(deg, g.edges, block, blocks, two_m) : 0.0;
        if (e < best) {
            best = e;
            best_block = block;
            best_blocks = blocks;
        }
        std::size_t i = n - 1;
        while (i > 0 && block[i] > prefix_max[i - 1])
            --i;
        if (i == 0)
            break;
        ++block[i];
        prefix_max[i] = std::max(prefix_max[i - 1], block[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            block[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
    return {two_level_tree(best_block, best_blocks), best};
}

CodingResult random_tree(const DocumentGraph& g, int h, std::uint64_t seed)
{
    require_vertices(g);
    require_height(h);
    Rng rng(seed);

    CodingTree t;
    const std::size_t n = g.num_vertices();
    t.nodes.resize(n);
    std::vector<NodeId> layer(n);
    for (std::size_t v = 0; v < n; ++v) {
        t.nodes[v].leaf_token = static_cast<TokenId>(v);
        layer[v] = static_cast<NodeId>(v);
    }
    auto add_parent = [&](std::vector<NodeId> children, int level) {
        const auto id = static_cast<NodeId>(t.size());
        for (NodeId c : children)
            t[c].parent = id;
        TreeNode node;
        node.level = level;
        node.children = std::move(children);
        t.nodes.push_back(std::move(node));
        return id;
    };

    for (int level = 1; level < h; ++level) {
        rng.shuffle(layer);
        std::vector<NodeId> next;
        for (std::size_t i = 0; i < layer.size(); i += 2) {
            std::vector<NodeId> pair{layer[i]};
            if (i + 1 < layer.size())
                pair.push_back(layer[i + 1]);
            next.push_back(add_parent(std::move(pair), level));
        }
        layer = std::move(next);
    }
    t.root = add_parent(layer, h);
    t.height = h;
    t = canonicalize(t);
    return {t, structural_entropy(g, t)};
}

} // namespace hint
