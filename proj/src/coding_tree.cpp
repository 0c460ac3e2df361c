#include "hint/coding_tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "hint/errors.hpp"

namespace hint {

using json = nlohmann::json;

std::size_t CodingTree::num_leaves() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

CodingTree flat_tree(std::size_t num_leaves)
{
    CodingTree t;
    t.nodes.resize(num_leaves + 1);
    const auto root = static_cast<NodeId>(num_leaves);
    for (std::size_t i = 0; i < num_leaves; ++i) {
        t.nodes[i].parent = root;
        t.nodes[i].leaf_token = static_cast<TokenId>(i);
        t.nodes[num_leaves].children.push_back(static_cast<NodeId>(i));
    }
    t.nodes[num_leaves].level = 1;
    t.root = root;
    t.height = 1;
    return t;
}

namespace {

// Post-order (children before parents) from the root.
std::vector<NodeId> post_order(const CodingTree& t)
{
    std::vector<NodeId> order;
    order.reserve(t.size());
    std::vector<std::pair<NodeId, std::size_t>> stack{{t.root, 0}};
    while (!stack.empty()) {
        auto& [v, next] = stack.back();
        const auto& ch = t[v].children;
        if (next < ch.size()) {
            const NodeId c = ch[next++];
            stack.emplace_back(c, 0);
        } else {
            order.push_back(v);
            stack.pop_back();
        }
    }
    return order;
}

std::vector<int> node_heights(const CodingTree& t)
{
    std::vector<int> height(t.size(), 0);
    for (NodeId v : post_order(t))
        for (NodeId c : t[v].children)
            height[static_cast<std::size_t>(v)] =
                std::max(height[static_cast<std::size_t>(v)], height[static_cast<std::size_t>(c)] + 1);
    return height;
}

[[noreturn]] void broken(const std::string& what) { throw StructureError("coding tree: " + what); }

} // namespace

int tree_height(const CodingTree& t)
{
    if (t.root == kNoNode)
        return 0;
    return node_heights(t)[static_cast<std::size_t>(t.root)];
}

void check_tree(const CodingTree& t, std::size_t num_leaves, bool require_aligned)
{
    const auto n = static_cast<NodeId>(t.size());
    if (t.root < 0 || t.root >= n)
        broken("root id out of range");
    if (t[t.root].parent != kNoNode)
        broken("root has a parent");

    std::vector<int> seen_leaf(num_leaves, 0);
    std::vector<int> child_refs(t.size(), 0);
    for (NodeId v = 0; v < n; ++v) {
        const TreeNode& node = t[v];
        if (v != t.root && (node.parent < 0 || node.parent >= n))
            broken("node " + std::to_string(v) + " has no valid parent");
        if (node.is_leaf()) {
            if (!node.children.empty())
                broken("leaf " + std::to_string(v) + " has children");
            if (node.level != 0)
                broken("leaf " + std::to_string(v) + " not at level 0");
            if (static_cast<std::size_t>(node.leaf_token) >= num_leaves)
                broken("leaf token " + std::to_string(node.leaf_token) + " is not a graph vertex");
            ++seen_leaf[static_cast<std::size_t>(node.leaf_token)];
        } else if (node.children.empty()) {
            broken("internal node " + std::to_string(v) + " has no children");
        }
        for (NodeId c : node.children) {
            if (c < 0 || c >= n)
                broken("child id out of range under " + std::to_string(v));
            if (t[c].parent != v)
                broken("child " + std::to_string(c) + " does not point back to parent " + std::to_string(v));
            ++child_refs[static_cast<std::size_t>(c)];
            if (t[c].level >= node.level)
                broken("child " + std::to_string(c) + " is not below its parent");
            if (require_aligned && t[c].level != node.level - 1)
                broken("child " + std::to_string(c) + " skips a level");
        }
    }
    for (NodeId v = 0; v < n; ++v)
        if (child_refs[static_cast<std::size_t>(v)] != (v == t.root ? 0 : 1))
            broken("node " + std::to_string(v) + " is referenced by " +
                   std::to_string(child_refs[static_cast<std::size_t>(v)]) + " parents");
    for (std::size_t i = 0; i < num_leaves; ++i)
        if (seen_leaf[i] != 1)
            broken("vertex " + std::to_string(i) + " appears as " + std::to_string(seen_leaf[i]) + " leaves");
    if (post_order(t).size() != t.size())
        broken("nodes unreachable from root");
    if (t[t.root].level != t.height)
        broken("root level " + std::to_string(t[t.root].level) + " differs from height " +
               std::to_string(t.height));
    if (tree_height(t) > t.height)
        broken("a root-to-leaf path is longer than the height");
}

bool is_level_aligned(const CodingTree& t)
{
    try {
        check_tree(t, t.num_leaves(), true);
        return true;
    } catch (const StructureError&) {
        return false;
    }
}

std::vector<std::vector<TokenId>> descendant_leaves(const CodingTree& t)
{
    std::vector<std::vector<TokenId>> leaves(t.size());
    for (NodeId v : post_order(t)) {
        auto& mine = leaves[static_cast<std::size_t>(v)];
        if (t[v].is_leaf())
            mine.push_back(t[v].leaf_token);
        for (NodeId c : t[v].children) {
            const auto& theirs = leaves[static_cast<std::size_t>(c)];
            mine.insert(mine.end(), theirs.begin(), theirs.end());
        }
        std::sort(mine.begin(), mine.end());
    }
    return leaves;
}

CodingTree canonicalize(const CodingTree& t)
{
    const std::vector<NodeId> order = post_order(t);
    std::vector<TokenId> min_leaf(t.size(), std::numeric_limits<TokenId>::max());
    for (NodeId v : order) {
        auto& m = min_leaf[static_cast<std::size_t>(v)];
        if (t[v].is_leaf())
            m = t[v].leaf_token;
        for (NodeId c : t[v].children)
            m = std::min(m, min_leaf[static_cast<std::size_t>(c)]);
    }

    std::vector<NodeId> leaves, internal;
    for (NodeId v : order)
        (t[v].is_leaf() ? leaves : internal).push_back(v);
    std::sort(leaves.begin(), leaves.end(), [&](NodeId a, NodeId b) { return t[a].leaf_token < t[b].leaf_token; });
    std::sort(internal.begin(), internal.end(), [&](NodeId a, NodeId b) {
        if (t[a].level != t[b].level)
            return t[a].level < t[b].level;
        return min_leaf[static_cast<std::size_t>(a)] < min_leaf[static_cast<std::size_t>(b)];
    });

    std::vector<NodeId> remap(t.size(), kNoNode);
    NodeId next = 0;
    for (NodeId v : leaves)
        remap[static_cast<std::size_t>(v)] = next++;
    for (NodeId v : internal)
        remap[static_cast<std::size_t>(v)] = next++;

    CodingTree out;
    out.nodes.resize(static_cast<std::size_t>(next));
    for (NodeId v : order) {
        TreeNode& dst = out[remap[static_cast<std::size_t>(v)]];
        const TreeNode& src = t[v];
        dst.parent = src.parent == kNoNode ? kNoNode : remap[static_cast<std::size_t>(src.parent)];
        dst.level = src.level;
        dst.leaf_token = src.leaf_token;
        for (NodeId c : src.children)
            dst.children.push_back(remap[static_cast<std::size_t>(c)]);
        std::sort(dst.children.begin(), dst.children.end());
    }
    out.root = remap[static_cast<std::size_t>(t.root)];
    out.height = t.height;
    return out;
}

CodingTree level_align(const CodingTree& t, int h)
{
    const std::vector<int> height = node_heights(t);
    if (height[static_cast<std::size_t>(t.root)] > h)
        throw StructureError("level_align: tree height " +
                             std::to_string(height[static_cast<std::size_t>(t.root)]) +
                             " exceeds target " + std::to_string(h) + "; compress first");

    CodingTree out;
    out.nodes = t.nodes;
    out.root = t.root;
    out.height = h;
    for (std::size_t v = 0; v < out.size(); ++v)
        out.nodes[v].level = height[v];
    out[out.root].level = h;

    const std::size_t original = out.size();
    for (std::size_t v = 0; v < original; ++v) {
        const auto parent = static_cast<NodeId>(v);
        const int parent_level = out.nodes[v].level;
        for (std::size_t k = 0; k < out.nodes[v].children.size(); ++k) {
            NodeId below = out.nodes[v].children[k];
            // Chain nodes go just above the child, so the child keeps its height.
            for (int lvl = out[below].level + 1; lvl < parent_level; ++lvl) {
                TreeNode pass;
                pass.level = lvl;
                pass.children = {below};
                const auto id = static_cast<NodeId>(out.size());
                out[below].parent = id;
                out.nodes.push_back(std::move(pass));
                below = id;
            }
            out[below].parent = parent;
            out.nodes[v].children[k] = below;
        }
    }
    return canonicalize(out);
}

std::vector<std::vector<NodeId>> nodes_by_level(const CodingTree& t)
{
    std::vector<std::vector<NodeId>> levels(static_cast<std::size_t>(t.height) + 1);
    for (NodeId v = 0; v < static_cast<NodeId>(t.size()); ++v)
        levels.at(static_cast<std::size_t>(t[v].level)).push_back(v);
    return levels;
}

std::string serialize_tree(const TreeFile& f)
{
    json nodes = json::array();
    for (NodeId v = 0; v < static_cast<NodeId>(f.tree.size()); ++v) {
        const TreeNode& n = f.tree[v];
        nodes.push_back(json{{"id", v},
                             {"parent", n.parent == kNoNode ? json(nullptr) : json(n.parent)},
                             {"level", n.level},
                             {"leaf_token", n.is_leaf() ? json(n.leaf_token) : json(nullptr)}});
    }
    return json{{"doc_id", f.doc_id}, {"height", f.tree.height}, {"nodes", std::move(nodes)},
                {"entropy_bits", f.entropy_bits}}
        .dump();
}

TreeFile parse_tree(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("byte " + std::to_string(e.byte), e.what());
    }
    auto need = [](const json& obj, const std::string& path, const char* key) -> const json& {
        if (!obj.is_object() || !obj.contains(key))
            throw ParseError(path + key, "missing field");
        return obj.at(key);
    };

    TreeFile f;
    try {
        f.doc_id = need(doc, "", "doc_id").get<std::string>();
        f.tree.height = need(doc, "", "height").get<int>();
        f.entropy_bits = need(doc, "", "entropy_bits").get<double>();
        const json& nodes = need(doc, "", "nodes");
        if (!nodes.is_array())
            throw ParseError("nodes", "expected an array");
        f.tree.nodes.resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const std::string path = "nodes[" + std::to_string(i) + "].";
            const json& n = nodes[i];
            if (need(n, path, "id").get<std::size_t>() != i)
                throw ParseError(path + "id", "node ids must be 0..n-1 in order");
            const json& parent = need(n, path, "parent");
            const json& leaf = need(n, path, "leaf_token");
            TreeNode& node = f.tree.nodes[i];
            node.level = need(n, path, "level").get<int>();
            node.parent = parent.is_null() ? kNoNode : parent.get<NodeId>();
            node.leaf_token = leaf.is_null() ? -1 : leaf.get<TokenId>();
            if (parent.is_null()) {
                if (f.tree.root != kNoNode)
                    throw ParseError(path + "parent", "more than one root");
                f.tree.root = static_cast<NodeId>(i);
            }
        }
    } catch (const json::type_error& e) {
        throw ParseError("tree", e.what());
    }
    if (f.tree.root == kNoNode)
        throw ParseError("nodes", "no root");
    for (std::size_t i = 0; i < f.tree.size(); ++i) {
        const NodeId p = f.tree.nodes[i].parent;
        if (p == kNoNode)
            continue;
        if (p < 0 || static_cast<std::size_t>(p) >= f.tree.size())
            throw ParseError("nodes[" + std::to_string(i) + "].parent", "parent id out of range");
        f.tree[p].children.push_back(static_cast<NodeId>(i));
    }
    check_tree(f.tree, f.tree.num_leaves(), false);
    return f;
}

} // namespace hint
