#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hint/entropy.hpp"
#include "hint/errors.hpp"
#include "support/graphs.hpp"

using namespace hint;
using namespace hint::testing;

namespace {

// P3 frozen values from hand evaluation: flat = 3 * 0.5, grouped = 1.5 + 0.5*log2(3/4).
constexpr double kP3Grouped = 1.292481250360578;
constexpr double kP3FirstMergeDelta = -0.2075187496394219;

// root -> {alpha -> {0, 1}, 2}
CodingTree p3_grouped()
{
    CodingTree t;
    t.nodes.resize(5);
    for (int i = 0; i < 3; ++i)
        t.nodes[static_cast<std::size_t>(i)].leaf_token = i;
    t.nodes[0].parent = t.nodes[1].parent = 3;
    t.nodes[2].parent = 4;
    t.nodes[3] = TreeNode{4, {0, 1}, 1, -1};
    t.nodes[4] = TreeNode{kNoNode, {2, 3}, 2, -1};
    t.root = 4;
    t.height = 2;
    return t;
}

std::vector<std::vector<TokenId>> level1_blocks(const CodingTree& t)
{
    const auto leaves = descendant_leaves(t);
    std::vector<std::vector<TokenId>> blocks;
    const auto levels = nodes_by_level(t);
    for (NodeId v : levels[1])
        blocks.push_back(leaves[static_cast<std::size_t>(v)]);
    std::sort(blocks.begin(), blocks.end());
    return blocks;
}

} // namespace

TEST_CASE("structural entropy hand values")
{
    CHECK(structural_entropy(path_graph(2), flat_tree(2)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(structural_entropy(path_graph(3), flat_tree(3)) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(structural_entropy(path_graph(3), p3_grouped()) == doctest::Approx(kP3Grouped).epsilon(1e-12));
    CHECK(reference_entropy(path_graph(3), p3_grouped()) == doctest::Approx(kP3Grouped).epsilon(1e-12));
}

TEST_CASE("entropy context volumes and cuts")
{
    const auto g = path_graph(3);
    const auto ctx = EntropyContext::build(g, p3_grouped());
    CHECK(ctx.volume[4] == 4.0);
    CHECK(ctx.volume[3] == 3.0);
    CHECK(ctx.cut[3] == 1.0);
    CHECK(ctx.cut[1] == 2.0);
}

TEST_CASE("edgeless graph has zero entropy with a flag")
{
    const auto g = make_graph(3, {});
    const auto r = evaluate_entropy(g, flat_tree(3));
    CHECK(r.bits == 0.0);
    CHECK(r.edgeless);
    CHECK_FALSE(evaluate_entropy(path_graph(3), flat_tree(3)).edgeless);
}

TEST_CASE("leaf/vertex mismatch is a structural error")
{
    CHECK_THROWS_AS(structural_entropy(path_graph(4), flat_tree(3)), StructureError);
}

TEST_CASE("entropy matches the reference and is invariant to relabeling")
{
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto g = random_connected_graph(3 + seed % 10, 0.3, seed);
        const auto tree = random_tree(g, 2 + static_cast<int>(seed % 4), seed).tree;
        const double e = structural_entropy(g, tree);
        CHECK(e == doctest::Approx(reference_entropy(g, tree)).epsilon(1e-12));

        // Relabel vertices with a permutation and carry the tree along.
        Rng rng(seed * 31);
        std::vector<TokenId> perm(g.num_vertices());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<Edge> edges;
        for (auto [u, v] : g.edges)
            edges.emplace_back(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
        std::reverse(edges.begin(), edges.end());
        const auto g2 = make_graph(g.num_vertices(), edges);
        CodingTree t2 = tree;
        for (auto& node : t2.nodes)
            if (node.is_leaf())
                node.leaf_token = perm[static_cast<std::size_t>(node.leaf_token)];
        CHECK(structural_entropy(g2, t2) == doctest::Approx(e).epsilon(1e-12));
    }
}

TEST_CASE("delta formulas agree with full recomputation")
{
    const auto g = path_graph(3);
    CHECK(merge_delta(1, 2, 1, 4) == doctest::Approx(kP3FirstMergeDelta).epsilon(1e-12));
    CHECK(structural_entropy(g, p3_grouped()) - structural_entropy(g, flat_tree(3)) ==
          doctest::Approx(kP3FirstMergeDelta).epsilon(1e-12));
    // Compressing alpha back into the root restores the flat tree.
    CHECK(compress_delta(4, 3, 1, 3, 4) == doctest::Approx(-kP3FirstMergeDelta).epsilon(1e-12));
}

TEST_CASE("oracle minimum")
{
    SUBCASE("K2")
    {
        CHECK(oracle_min_entropy(path_graph(2)).entropy_bits == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("P3")
    {
        const auto r = oracle_min_entropy(path_graph(3));
        CHECK(r.entropy_bits == doctest::Approx(kP3Grouped).epsilon(1e-12));
        const auto blocks = level1_blocks(r.tree);
        const bool ab = blocks == std::vector<std::vector<TokenId>>{{0, 1}, {2}};
        const bool bc = blocks == std::vector<std::vector<TokenId>>{{0}, {1, 2}};
        CHECK((ab || bc));
        CHECK(structural_entropy(path_graph(3), r.tree) == doctest::Approx(r.entropy_bits).epsilon(1e-12));
    }
    SUBCASE("C4 picks opposite pairs")
    {
        const auto r = oracle_min_entropy(cycle_graph(4));
        CHECK(r.entropy_bits == doctest::Approx(1.5).epsilon(1e-12));
        const auto blocks = level1_blocks(r.tree);
        REQUIRE(blocks.size() == 2);
        CHECK(blocks[0].size() == 2);
        const auto g = cycle_graph(4);
        for (const auto& b : blocks)
            CHECK(std::binary_search(g.edges.begin(), g.edges.end(), Edge{b[0], b[1]}));
    }
    SUBCASE("size guard")
    {
        CHECK_THROWS_AS(oracle_min_entropy(path_graph(9)), SizeError);
        CHECK_NOTHROW(oracle_min_entropy(path_graph(8)));
    }
}

TEST_CASE("sema basic examples")
{
    SUBCASE("K2")
    {
        const auto r = sema(path_graph(2), 2);
        CHECK(r.entropy_bits == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.tree.height == 2);
        CHECK(is_level_aligned(r.tree));
    }
    SUBCASE("P3 first merge and result")
    {
        std::vector<SemaStep> steps;
        const auto r = sema(path_graph(3), 2, {[&](const SemaStep& s) { steps.push_back(s); }, {}});
        REQUIRE(!steps.empty());
        CHECK(steps[0].phase == SemaPhase::merge);
        CHECK(steps[0].delta == doctest::Approx(kP3FirstMergeDelta).epsilon(1e-12));
        CHECK(r.entropy_bits == doctest::Approx(kP3Grouped).epsilon(1e-12));
        CHECK(r.entropy_bits <= 1.5);
    }
    SUBCASE("single vertex gives a unary chain")
    {
        const auto r = sema(make_graph(1, {}), 4);
        CHECK(r.tree.size() == 5);
        CHECK(r.entropy_bits == 0.0);
        check_tree(r.tree, 1, true);
    }
    SUBCASE("bad inputs")
    {
        CHECK_THROWS_AS(sema(path_graph(3), 1), ConfigError);
        CHECK_THROWS_AS(sema(make_graph(0, {}), 2), ValidationError);
    }
}

TEST_CASE("sema on disconnected graphs and isolated vertices")
{
    // Two triangles plus two isolated vertices.
    const auto g = make_graph(8, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
    for (int h = 2; h <= 6; ++h) {
        const auto r = sema(g, h);
        check_tree(r.tree, 8, true);
        CHECK(r.tree.height == h);
        CHECK(r.entropy_bits == doctest::Approx(reference_entropy(g, r.tree)).epsilon(1e-12));
    }
    // Isolated vertices hang directly below the root (through pass-through nodes).
    const auto r = sema(g, 3);
    const auto leaves = descendant_leaves(r.tree);
    for (NodeId c : r.tree[r.tree.root].children) {
        const auto& ls = leaves[static_cast<std::size_t>(c)];
        if (std::find(ls.begin(), ls.end(), 6) != ls.end())
            CHECK(ls.size() == 1);
    }
    const auto edgeless = sema(make_graph(4, {}), 2);
    CHECK(edgeless.entropy_bits == 0.0);
    check_tree(edgeless.tree, 4, true);
}

TEST_CASE("sema is deterministic and never beats the oracle")
{
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        const auto g = random_connected_graph(2 + seed % 5, 0.4, seed);
        const auto a = sema(g, 2);
        const auto b = sema(g, 2);
        CHECK(a.tree == b.tree);
        CHECK(a.entropy_bits == b.entropy_bits);
        CHECK(a.entropy_bits >= oracle_min_entropy(g).entropy_bits - 1e-9);
        CHECK(a.entropy_bits <= structural_entropy(g, flat_tree(g.num_vertices())) * (1 + 1e-12));
    }
}

TEST_CASE("compress phase removes one internal node per step and ends within height")
{
    const auto g = random_connected_graph(40, 0.08, 5);
    std::size_t last_size = 0;
    int compressions = 0;
    SemaOptions opts;
    opts.observer = [&](const SemaStep& s) {
        if (s.phase != SemaPhase::compress) {
            last_size = s.snapshot->size();
            return;
        }
        ++compressions;
        CHECK(s.snapshot->size() == last_size - 1);
        CHECK(s.delta >= 0.0);
        last_size = s.snapshot->size();
    };
    const auto r = sema(g, 3, opts);
    CHECK(compressions > 0);
    CHECK(r.tree.height == 3);
    check_tree(r.tree, 40, true);
}

TEST_CASE("random tree")
{
    const auto g = random_connected_graph(15, 0.2, 3);
    SUBCASE("same seed, same tree")
    {
        CHECK(random_tree(g, 4, 9).tree == random_tree(g, 4, 9).tree);
        CHECK_FALSE(random_tree(g, 4, 9).tree == random_tree(g, 4, 10).tree);
    }
    SUBCASE("single vertex chain")
    {
        const auto r = random_tree(make_graph(1, {}), 2, 1);
        CHECK(r.tree.size() == 3);
        check_tree(r.tree, 1, true);
    }
    SUBCASE("valid at every height")
    {
        for (int h = 2; h <= 12; ++h)
            check_tree(random_tree(g, h, static_cast<std::uint64_t>(h)).tree, 15, true);
    }
    SUBCASE("pairs at most two children below the root")
    {
        const auto t = random_tree(g, 4, 1).tree;
        for (NodeId v = 0; v < static_cast<NodeId>(t.size()); ++v)
            if (v != t.root)
                CHECK(t[v].children.size() <= 2);
    }
}

TEST_CASE("level alignment")
{
    SUBCASE("aligned tree is unchanged")
    {
        const auto t = level_align(p3_grouped(), 2);
        CHECK(t.size() == 6);
        CHECK(level_align(t, 2) == t);
        const auto s = sema(random_connected_graph(20, 0.1, 4), 5).tree;
        CHECK(level_align(s, 5) == s);
    }
    SUBCASE("flat tree gains two pass-through nodes per leaf")
    {
        const auto t = level_align(flat_tree(4), 3);
        CHECK(t.size() == 4 + 8 + 1);
        check_tree(t, 4, true);
    }
    SUBCASE("too tall is an error")
    {
        CHECK_THROWS_AS(level_align(p3_grouped(), 1), StructureError);
    }
    SUBCASE("entropy neutral")
    {
        const auto g = path_graph(3);
        for (int h = 2; h <= 6; ++h)
            CHECK(std::abs(structural_entropy(g, level_align(p3_grouped(), h)) - kP3Grouped) <= 1e-12);
    }
}

TEST_CASE("check_tree catches broken trees")
{
    auto t = p3_grouped();
    SUBCASE("inconsistent parent pointer")
    {
        t.nodes[0].parent = 4;
        CHECK_THROWS_AS(check_tree(t, 3, false), StructureError);
    }
    SUBCASE("duplicate leaf")
    {
        t.nodes[2].leaf_token = 0;
        CHECK_THROWS_AS(check_tree(t, 3, false), StructureError);
    }
    SUBCASE("skipped level")
    {
        t.nodes[4].level = 3;
        t.height = 3;
        CHECK_NOTHROW(check_tree(t, 3, false));
        CHECK_THROWS_AS(check_tree(t, 3, true), StructureError);
    }
    SUBCASE("empty internal node")
    {
        t.nodes.push_back(TreeNode{4, {}, 1, -1});
        t.nodes[4].children.push_back(5);
        CHECK_THROWS_AS(check_tree(t, 3, false), StructureError);
    }
}

TEST_CASE("tree file round trip")
{
    const auto g = random_connected_graph(12, 0.2, 77);
    const auto r = sema(g, 4);
    const TreeFile f{"doc-7", r.tree, r.entropy_bits};
    const auto back = parse_tree(serialize_tree(f));
    CHECK(back.doc_id == "doc-7");
    CHECK(back.tree == r.tree);
    CHECK(back.entropy_bits == r.entropy_bits);
    CHECK(structural_entropy(g, back.tree) == doctest::Approx(back.entropy_bits).epsilon(1e-12));
    CHECK_THROWS_AS(parse_tree(R"({"doc_id":"x","height":2,"nodes":[]})"), ParseError);
}
