#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <tuple>

#include "hint/entropy.hpp"
#include "hint/errors.hpp"

namespace hint {

namespace {

struct WorkNode {
    NodeId parent = kNoNode;
    std::vector<NodeId> children;
    double volume = 0.0;
    double cut = 0.0;
    TokenId leaf = -1;
    bool alive = true;
    std::uint64_t version = 0;
};

// Heap entries are ordered by (delta rounded to 1e-12, smaller id, larger id).
struct Candidate {
    std::int64_t key = 0;
    NodeId lo = kNoNode;
    NodeId hi = kNoNode;
    double delta = 0.0;
    std::uint64_t version = 0;
};

struct Later {
    bool operator()(const Candidate& x, const Candidate& y) const
    {
        return std::tie(x.key, x.lo, x.hi) > std::tie(y.key, y.lo, y.hi);
    }
};

using Heap = std::priority_queue<Candidate, std::vector<Candidate>, Later>;

std::int64_t delta_key(double delta) { return std::llround(delta * 1e12); }

Candidate make_candidate(double delta, NodeId a, NodeId b, std::uint64_t version = 0)
{
    return {delta_key(delta), std::min(a, b), std::max(a, b), delta, version};
}

class Forest {
public:
    explicit Forest(const DocumentGraph& g)
    {
        const std::vector<std::size_t> deg = g.degrees();
        nodes_.resize(deg.size());
        for (std::size_t v = 0; v < deg.size(); ++v) {
            nodes_[v].volume = nodes_[v].cut = static_cast<double>(deg[v]);
            nodes_[v].leaf = static_cast<TokenId>(v);
        }
    }

    WorkNode& operator[](NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
    const WorkNode& operator[](NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }

    NodeId join(std::vector<NodeId> children, double cut)
    {
        const auto id = static_cast<NodeId>(nodes_.size());
        WorkNode node;
        node.cut = cut;
        for (NodeId c : children) {
            nodes_[static_cast<std::size_t>(c)].parent = id;
            node.volume += nodes_[static_cast<std::size_t>(c)].volume;
        }
        node.children = std::move(children);
        nodes_.push_back(std::move(node));
        return id;
    }

    // Delete `child` and hang its children under `parent`. Returns the moved nodes.
    std::vector<NodeId> compress(NodeId parent, NodeId child)
    {
        WorkNode& c = (*this)[child];
        auto& siblings = (*this)[parent].children;
        siblings.erase(std::find(siblings.begin(), siblings.end(), child));
        for (NodeId gc : c.children) {
            (*this)[gc].parent = parent;
            siblings.push_back(gc);
        }
        std::vector<NodeId> moved = std::move(c.children);
        c.children.clear();
        c.alive = false;
        c.parent = kNoNode;
        ++(*this)[parent].version;
        return moved;
    }

    double children_cut(NodeId v) const
    {
        double s = 0.0;
        for (NodeId c : (*this)[v].children)
            s += (*this)[c].cut;
        return s;
    }

    int height(NodeId root) const
    {
        int best = 0;
        std::vector<std::pair<NodeId, int>> stack{{root, 0}};
        while (!stack.empty()) {
            const auto [v, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            for (NodeId c : (*this)[v].children)
                stack.emplace_back(c, d + 1);
        }
        return best;
    }

    std::vector<NodeId> top_level() const
    {
        std::vector<NodeId> tops;
        for (std::size_t v = 0; v < nodes_.size(); ++v)
            if (nodes_[v].alive && nodes_[v].parent == kNoNode)
                tops.push_back(static_cast<NodeId>(v));
        return tops;
    }

    // Current structure as a CodingTree (levels = node heights). Several
    // top-level subtrees are hung under a virtual root.
    CodingTree snapshot() const
    {
        const std::vector<NodeId> tops = top_level();
        CodingTree t;
        std::vector<NodeId> remap(nodes_.size(), kNoNode);
        std::vector<NodeId> stack(tops.begin(), tops.end());
        std::vector<NodeId> order;
        while (!stack.empty()) {
            const NodeId v = stack.back();
            stack.pop_back();
            remap[static_cast<std::size_t>(v)] = static_cast<NodeId>(order.size());
            order.push_back(v);
            for (NodeId c : (*this)[v].children)
                stack.push_back(c);
        }
        t.nodes.resize(order.size());
        for (NodeId v : order) {
            const WorkNode& src = (*this)[v];
            TreeNode& dst = t[remap[static_cast<std::size_t>(v)]];
            dst.leaf_token = src.leaf;
            dst.parent = src.parent == kNoNode ? kNoNode : remap[static_cast<std::size_t>(src.parent)];
            for (NodeId c : src.children)
                dst.children.push_back(remap[static_cast<std::size_t>(c)]);
        }
        if (tops.size() == 1) {
            t.root = remap[static_cast<std::size_t>(tops.front())];
        } else {
            t.root = static_cast<NodeId>(t.size());
            TreeNode root;
            for (NodeId top : tops) {
                const NodeId id = remap[static_cast<std::size_t>(top)];
                t[id].parent = t.root;
                root.children.push_back(id);
            }
            t.nodes.push_back(std::move(root));
        }
        assign_heights(t);
        return t;
    }

private:
    static void assign_heights(CodingTree& t)
    {
        std::vector<NodeId> order{t.root};
        for (std::size_t i = 0; i < order.size(); ++i)
            for (NodeId c : t[order[i]].children)
                order.push_back(c);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            TreeNode& node = t[*it];
            node.level = 0;
            for (NodeId c : node.children)
                node.level = std::max(node.level, t[c].level + 1);
        }
        t.height = t[t.root].level;
    }

    std::vector<WorkNode> nodes_;
};

void notify(const SemaOptions& options, const Forest& forest, SemaPhase phase, double delta, NodeId a,
            NodeId b)
{
    if (!options.observer)
        return;
    const CodingTree snap = forest.snapshot();
    options.observer(SemaStep{phase, delta, a, b, &snap});
}

} // namespace

CodingResult sema(const DocumentGraph& g, int h, const SemaOptions& options)
{
    if (h < kMinHeight)
        throw ConfigError("coding tree height must be >= " + std::to_string(kMinHeight) + ", got " +
                          std::to_string(h));
    const std::size_t n = g.num_vertices();
    if (n == 0)
        throw ValidationError(g.doc_id, -1, "empty graph");

    const double two_m = 2.0 * static_cast<double>(g.num_edges());
    Forest forest(g);
    if (options.on_start)
        options.on_start(forest.snapshot());

    // Phase 1: merge edge-connected top-level subtrees, best entropy drop first.
    std::vector<std::map<NodeId, double>> links(n);
    for (const auto& [u, v] : g.edges) {
        links[static_cast<std::size_t>(u)][v] += 1.0;
        links[static_cast<std::size_t>(v)][u] += 1.0;
    }
    Heap heap;
    for (const auto& [u, v] : g.edges)
        heap.push(make_candidate(merge_delta(forest[u].volume, forest[v].volume, 1.0, two_m), u, v));

    std::vector<NodeId> isolated;
    std::size_t unmerged = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (links[v].empty())
            isolated.push_back(static_cast<NodeId>(v));
        else
            ++unmerged;
    }

    std::vector<char> merged(n, 0);
    while (unmerged > 1 && !heap.empty()) {
        const Candidate top = heap.top();
        heap.pop();
        if (merged[static_cast<std::size_t>(top.lo)] || merged[static_cast<std::size_t>(top.hi)])
            continue;
        const auto a = static_cast<std::size_t>(top.lo);
        const auto b = static_cast<std::size_t>(top.hi);
        const double between = links[a].at(top.hi);
        const NodeId id = forest.join({top.lo, top.hi}, forest[top.lo].cut + forest[top.hi].cut - 2.0 * between);

        std::map<NodeId, double> joined;
        for (const auto* side : {&links[a], &links[b]})
            for (const auto& [k, w] : *side)
                if (k != top.lo && k != top.hi)
                    joined[k] += w;
        links[a].clear();
        links[b].clear();
        merged[a] = merged[b] = 1;
        merged.push_back(0);
        for (const auto& [k, w] : joined) {
            auto& theirs = links[static_cast<std::size_t>(k)];
            theirs.erase(top.lo);
            theirs.erase(top.hi);
            theirs[id] = w;
            heap.push(make_candidate(merge_delta(forest[id].volume, forest[k].volume, w, two_m), id, k));
        }
        links.push_back(std::move(joined));
        --unmerged;
        notify(options, forest, SemaPhase::merge, top.delta, top.lo, top.hi);
    }

    // Disconnected leftovers: merge by ascending combined volume.
    std::vector<NodeId> tops;
    for (NodeId v : forest.top_level())
        if (!links[static_cast<std::size_t>(v)].empty() || !forest[v].children.empty())
            tops.push_back(v);
    while (tops.size() > 1) {
        std::sort(tops.begin(), tops.end(), [&](NodeId x, NodeId y) {
            return std::tie(forest[x].volume, x) < std::tie(forest[y].volume, y);
        });
        const NodeId x = tops[0];
        const NodeId y = tops[1];
        const NodeId id = forest.join({x, y}, forest[x].cut + forest[y].cut);
        tops.erase(tops.begin(), tops.begin() + 2);
        tops.push_back(id);
        notify(options, forest, SemaPhase::merge_disconnected, 0.0, x, y);
    }

    NodeId root;
    if (tops.empty()) {
        root = forest.join(std::move(isolated), 0.0);
    } else {
        root = tops.front();
        for (NodeId v : isolated) {
            forest[v].parent = root;
            forest[root].children.push_back(v);
        }
    }

    // Phase 2: compress (parent, internal child) pairs until height <= h.
    if (forest.height(root) > h) {
        Heap pending;
        auto push_pair = [&](NodeId parent, NodeId child) {
            if (forest[child].children.empty())
                return;
            const double d = compress_delta(forest[parent].volume, forest[child].volume, forest[child].cut,
                                            forest.children_cut(child), two_m);
            pending.push(make_candidate(d, parent, child, forest[child].version));
        };
        std::vector<NodeId> stack{root};
        while (!stack.empty()) {
            const NodeId v = stack.back();
            stack.pop_back();
            for (NodeId c : forest[v].children) {
                push_pair(v, c);
                stack.push_back(c);
            }
        }
        while (forest.height(root) > h) {
            if (pending.empty())
                throw StructureError("compression ran out of candidates");
            const Candidate top = pending.top();
            pending.pop();
            // The parent is always the larger id: nodes are created after their children.
            const NodeId parent = top.hi;
            const NodeId child = top.lo;
            if (!forest[child].alive || !forest[parent].alive || forest[child].parent != parent ||
                forest[child].version != top.version)
                continue;
            const std::vector<NodeId> moved = forest.compress(parent, child);
            if (forest[parent].parent != kNoNode)
                push_pair(forest[parent].parent, parent);
            for (NodeId c : moved)
                push_pair(parent, c);
            notify(options, forest, SemaPhase::compress, top.delta, parent, child);
        }
    }

    CodingTree tree = forest.snapshot();
    tree = level_align(canonicalize(tree), h);
    const double bits = structural_entropy(g, tree);
    return {std::move(tree), bits};
}

} // namespace hint
