#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hint/coding_tree.hpp"
#include "hint/graph.hpp"

namespace hint {

// Degrees, volumes and cuts needed to evaluate structural entropy of one
// graph under one tree. volume[root] == 2m; volume of an internal node is the
// sum over its children; cut[leaf] is the vertex degree.
struct EntropyContext {
    std::vector<double> volume;
    std::vector<double> cut;
    std::size_t num_edges = 0;

    static EntropyContext build(const DocumentGraph& g, const CodingTree& t);
};

struct EntropyResult {
    double bits = 0.0;
    // Set when the graph has no edges; bits is then defined as 0.
    bool edgeless = false;
};

// -sum over non-root nodes of (cut/2m) * log2(volume / parent volume).
EntropyResult evaluate_entropy(const DocumentGraph& g, const CodingTree& t);

inline double structural_entropy(const DocumentGraph& g, const CodingTree& t)
{
    return evaluate_entropy(g, t).bits;
}

struct CodingResult {
    CodingTree tree;
    double entropy_bits = 0.0;
};

enum class SemaPhase { merge, merge_disconnected, compress };

// One applied step of the greedy construction. `snapshot` holds the working
// forest right after the step, with any still-unmerged top-level subtrees
// hung under a virtual root so its entropy is comparable across steps.
struct SemaStep {
    SemaPhase phase = SemaPhase::merge;
    double delta = 0.0;
    NodeId first = kNoNode;
    NodeId second = kNoNode;
    const CodingTree* snapshot = nullptr;
};

struct SemaOptions {
    // Called after every applied merge or compression. Snapshots are only
    // materialized when this is set.
    std::function<void(const SemaStep&)> observer;
    // Called once with the forest before the first merge.
    std::function<void(const CodingTree&)> on_start;
};

inline constexpr int kMinHeight = 2;
inline constexpr int kMaxSweepHeight = 12;

// Greedy structural-entropy minimization: bottom-up merging of edge-connected
// top-level subtrees by minimum entropy change, then compression of
// (parent, child) pairs until the height is at most h, then level alignment.
// The returned tree is canonical, aligned and has height exactly h.
CodingResult sema(const DocumentGraph& g, int h, const SemaOptions& options = {});

// Exhaustive minimum over all two-level trees (set partitions of V).
inline constexpr std::size_t kOracleMaxVertices = 8;
CodingResult oracle_min_entropy(const DocumentGraph& g, int h = 2);

// Layer-by-layer random pairing under a new parent, with all nodes of level
// h-1 attached to the root. Deterministic per seed.
CodingResult random_tree(const DocumentGraph& g, int h, std::uint64_t seed);

// Entropy change of merging two sibling top-level subtrees under a new node.
double merge_delta(double volume_a, double volume_b, double edges_between, double two_m);

// Entropy change of deleting internal node `child` and hoisting its children
// to `parent`.
double compress_delta(double parent_volume, double child_volume, double child_cut,
                      double grandchildren_cut_sum, double two_m);

} // namespace hint
