#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hint/graph.hpp"

namespace hint {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct TreeNode {
    NodeId parent = kNoNode;
    std::vector<NodeId> children;
    int level = 0;
    TokenId leaf_token = -1;  // >= 0 only for leaves

    bool is_leaf() const noexcept { return leaf_token >= 0; }
    bool operator==(const TreeNode&) const = default;
};

// Rooted tree whose leaves are the graph's vertices. In canonical form leaf
// ids equal token ids, internal nodes follow ordered by (level, smallest
// descendant leaf), and children lists are sorted.
//
// A tree is level-aligned when every leaf is at level 0, every child sits one
// level below its parent and the root is at level `height`.
struct CodingTree {
    std::vector<TreeNode> nodes;
    NodeId root = kNoNode;
    int height = 0;

    std::size_t size() const noexcept { return nodes.size(); }
    std::size_t num_leaves() const noexcept;
    const TreeNode& operator[](NodeId id) const { return nodes[static_cast<std::size_t>(id)]; }
    TreeNode& operator[](NodeId id) { return nodes[static_cast<std::size_t>(id)]; }

    bool operator==(const CodingTree&) const = default;
};

// Root directly over n leaves (height 1).
CodingTree flat_tree(std::size_t num_leaves);

// Longest root-to-leaf path.
int tree_height(const CodingTree& t);

// Throws StructureError naming the first violated invariant. With
// require_aligned the level-alignment conditions are checked as well.
void check_tree(const CodingTree& t, std::size_t num_leaves, bool require_aligned);

bool is_level_aligned(const CodingTree& t);

// Renumber into canonical form; levels are left untouched.
CodingTree canonicalize(const CodingTree& t);

// Sets levels to node heights (root at h) and inserts unary pass-through nodes
// wherever a parent sits more than one level above its child. Entropy-neutral.
CodingTree level_align(const CodingTree& t, int h);

// Node ids at each level 0..height of an aligned tree, ascending.
std::vector<std::vector<NodeId>> nodes_by_level(const CodingTree& t);

// Leaf tokens under each node, ascending.
std::vector<std::vector<TokenId>> descendant_leaves(const CodingTree& t);

struct TreeFile {
    std::string doc_id;
    CodingTree tree;
    double entropy_bits = 0.0;
};

std::string serialize_tree(const TreeFile& f);
TreeFile parse_tree(std::string_view text);

} // namespace hint
