#include <doctest.h>

#include <algorithm>

#include "hint/errors.hpp"
#include "hint/graph.hpp"
#include "hint/rng.hpp"

using namespace hint;

namespace {

std::vector<Token> tokens_for(std::vector<std::pair<std::string, int>> words)
{
    std::vector<Token> out;
    for (std::size_t i = 0; i < words.size(); ++i)
        out.push_back(Token{static_cast<TokenId>(i), words[i].first, words[i].second});
    return out;
}

DocumentGraph two_sentences()
{
    // "Tom chases Jerry . Jerry runs ."
    auto toks = tokens_for({{"Tom", 0}, {"chases", 0}, {"Jerry", 0}, {".", 0}, {"Jerry", 1}, {"runs", 1}, {".", 1}});
    std::vector<DependencyRecord> deps{{1, 0, "nsubj"}, {1, 2, "obj"}, {1, 3, "punct"},
                                       {5, 4, "nsubj"}, {5, 6, "punct"}};
    return build_dependency_graph(toks, deps, {1, 5}, "doc", 1);
}

} // namespace

TEST_CASE("single sentence dependency graph has no chain edge")
{
    auto toks = tokens_for({{"Tom", 0}, {"chases", 0}, {"Jerry", 0}});
    const auto g = build_dependency_graph(toks, {{1, 0, "nsubj"}, {1, 2, "obj"}}, {1}, "tj", 0);
    CHECK(g.num_vertices() == 3);
    CHECK(g.edges == std::vector<Edge>{{0, 1}, {1, 2}});
    CHECK_NOTHROW(validate_graph(g));
}

TEST_CASE("adjacent sentence roots are chained")
{
    const auto g = two_sentences();
    CHECK(std::binary_search(g.edges.begin(), g.edges.end(), Edge{1, 5}));
    CHECK(g.num_edges() == 6);
    CHECK(count_components(g) == 1);
    // Repeated words stay separate nodes.
    CHECK(g.num_vertices() == 7);
}

TEST_CASE("duplicate and reversed dependencies collapse to one edge")
{
    auto toks = tokens_for({{"a", 0}, {"b", 0}});
    const auto g = build_dependency_graph(toks, {{0, 1, "x"}, {1, 0, "y"}, {0, 1, "x"}}, {0}, "d", 0);
    CHECK(g.edges == std::vector<Edge>{{0, 1}});
}

TEST_CASE("dependency graph validation errors")
{
    auto toks = tokens_for({{"a", 0}, {"b", 0}, {"c", 1}});
    SUBCASE("invalid token reference names the doc and id")
    {
        try {
            build_dependency_graph(toks, {{0, 9, "x"}}, {0, 2}, "bad-doc", 0);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(e.doc_id() == "bad-doc");
            CHECK(e.offending_id() == 9);
        }
    }
    SUBCASE("cross-sentence dependency is rejected")
    {
        CHECK_THROWS_AS(build_dependency_graph(toks, {{1, 2, "x"}}, {0, 2}, "d", 0), ValidationError);
    }
    SUBCASE("root count must match sentences")
    {
        CHECK_THROWS_AS(build_dependency_graph(toks, {}, {0}, "d", 0), ValidationError);
        CHECK_THROWS_AS(build_dependency_graph(toks, {}, {0, 1, 2}, "d", 0), ValidationError);
    }
    SUBCASE("root must lie in its sentence")
    {
        CHECK_THROWS_AS(build_dependency_graph(toks, {}, {2, 0}, "d", 0), ValidationError);
    }
    SUBCASE("empty document")
    {
        CHECK_THROWS_AS(build_dependency_graph({}, {}, {}, "d", 0), ValidationError);
    }
    SUBCASE("non-consecutive token ids")
    {
        toks[1].id = 5;
        CHECK_THROWS_AS(build_dependency_graph(toks, {}, {0, 2}, "d", 0), ValidationError);
    }
}

TEST_CASE("co-occurrence graph")
{
    SUBCASE("window 2 gives a path")
    {
        const auto g = build_cooccurrence_graph(tokens_for({{"a", 0}, {"b", 0}, {"c", 0}}), 2, "d", 0);
        CHECK(g.edges == std::vector<Edge>{{0, 1}, {1, 2}});
        CHECK(g.sentence_roots.empty());
    }
    SUBCASE("window 3 on four tokens")
    {
        const auto g = build_cooccurrence_graph(tokens_for({{"a", 0}, {"b", 0}, {"c", 0}, {"d", 0}}), 3, "d", 0);
        CHECK(g.edges == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});
    }
    SUBCASE("single token")
    {
        const auto g = build_cooccurrence_graph(tokens_for({{"a", 0}}), 5, "d", 0);
        CHECK(g.num_vertices() == 1);
        CHECK(g.num_edges() == 0);
        CHECK_NOTHROW(validate_graph(g));
    }
    SUBCASE("window below 2 is a config error")
    {
        CHECK_THROWS_AS(build_cooccurrence_graph(tokens_for({{"a", 0}}), 1, "d", 0), ConfigError);
    }
}

TEST_CASE("serialized graph is byte-stable and sorted")
{
    const auto g = two_sentences();
    const std::string text = serialize_graph(g);
    CHECK(text.find("\"edges\":[[0,1],[1,2],[1,3],[1,5],[4,5],[5,6]]") != std::string::npos);
    CHECK(serialize_graph(parse_graph(text)) == text);
}

TEST_CASE("round trip is the identity on random documents")
{
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(30);
        std::vector<Token> toks;
        int sentence = 0;
        std::vector<TokenId> roots{0};
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0 && rng.below(4) == 0) {
                ++sentence;
                roots.push_back(static_cast<TokenId>(i));
            }
            toks.push_back(Token{static_cast<TokenId>(i), "w\"" + std::to_string(rng.below(5)), sentence});
        }
        std::vector<DependencyRecord> deps;
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = roots[static_cast<std::size_t>(toks[i].sentence)];
            if (static_cast<TokenId>(i) != r)
                deps.push_back({r, static_cast<TokenId>(i), "dep"});
        }
        const auto g = build_dependency_graph(toks, deps, roots, "doc" + std::to_string(trial),
                                              static_cast<ClassId>(rng.below(3)));
        CHECK_NOTHROW(validate_graph(g));
        CHECK(count_components(g) == 1);
        CHECK(parse_graph(serialize_graph(g)) == g);
    }
}

TEST_CASE("graph parse errors")
{
    SUBCASE("missing edges field names the field")
    {
        try {
            parse_graph(R"({"doc_id":"d","label":0,"tokens":[],"sentence_roots":[]})");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.location() == "edges");
        }
    }
    SUBCASE("out-of-range edge endpoint")
    {
        const char* text = R"({"doc_id":"d","label":0,"tokens":[{"id":0,"text":"a","sentence":0},)"
                           R"({"id":1,"text":"b","sentence":0},{"id":2,"text":"c","sentence":0}],)"
                           R"("edges":[[0,99]],"sentence_roots":[]})";
        try {
            parse_graph(text);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(e.offending_id() == 99);
        }
    }
    SUBCASE("malformed JSON reports a byte offset")
    {
        try {
            parse_graph(R"({"doc_id": )");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.location().rfind("byte ", 0) == 0);
        }
    }
    SUBCASE("wrong type reports the field path")
    {
        try {
            parse_graph(R"({"doc_id":"d","label":0,"tokens":[{"id":"x","text":"a","sentence":0}],"edges":[],"sentence_roots":[]})");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.location() == "tokens[0].id");
        }
    }
    SUBCASE("unsorted edges are rejected")
    {
        const char* text = R"({"doc_id":"d","label":0,"tokens":[{"id":0,"text":"a","sentence":0},)"
                           R"({"id":1,"text":"b","sentence":0},{"id":2,"text":"c","sentence":0}],)"
                           R"("edges":[[1,2],[0,1]],"sentence_roots":[]})";
        CHECK_THROWS_AS(parse_graph(text), ValidationError);
    }
}

TEST_CASE("manifest parsing")
{
    const auto entries = parse_manifest(
        "{\"doc_id\":\"a\",\"split\":\"train\",\"path\":\"a.json\"}\n\n{\"doc_id\":\"b\",\"split\":\"test\",\"path\":\"b.json\"}\n");
    REQUIRE(entries.size() == 2);
    CHECK(entries[1].split == Split::test);
    CHECK(parse_manifest(serialize_manifest(entries)).size() == 2);
    try {
        parse_manifest("{\"doc_id\":\"a\",\"split\":\"dev\",\"path\":\"a\"}\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.location().rfind("line 1", 0) == 0);
    }
}

TEST_CASE("parsed document round trip")
{
    ParsedDocument d;
    d.doc_id = "p";
    d.label = 2;
    d.tokens = tokens_for({{"a", 0}, {"b", 0}});
    d.dependencies = {{0, 1, "amod"}};
    d.sentence_roots = {0};
    const auto back = parse_parsed_document(serialize_parsed_document(d));
    CHECK(back.tokens == d.tokens);
    CHECK(back.dependencies.size() == 1);
    CHECK(back.dependencies[0].relation == "amod");
    // Raw token files omit dependencies and roots.
    const auto raw = parse_parsed_document(R"({"doc_id":"r","label":0,"tokens":[{"id":0,"text":"a","sentence":0}]})");
    CHECK(raw.dependencies.empty());
}
