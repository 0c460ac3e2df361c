#include <doctest.h>

#include <sstream>

#include "hint/errors.hpp"
#include "hint/features.hpp"
#include "support/graphs.hpp"

using namespace hint;
using namespace hint::testing;

namespace {

EmbeddingTable two_words()
{
    std::istringstream in("t0 0.5 -1.0 2.0\nt1 1 2 3\n");
    return read_embeddings(in);
}

} // namespace

TEST_CASE("read_embeddings infers the dimension")
{
    const auto table = two_words();
    CHECK(table.dim == 3);
    CHECK(table.vectors.size() == 2);
    REQUIRE(table.find("t0") != nullptr);
    CHECK((*table.find("t0"))[1] == -1.0);
    CHECK(table.find("t9") == nullptr);
}

TEST_CASE("read_embeddings keeps the first duplicate and skips blank lines")
{
    std::istringstream in("a 1 2\n\nb 3 4\na 9 9\n");
    const auto table = read_embeddings(in);
    CHECK(table.vectors.size() == 2);
    CHECK((*table.find("a"))[0] == 1.0);
}

TEST_CASE("read_embeddings reports ragged lines")
{
    std::istringstream in("a 1 2 3\nb 1 2\n");
    try {
        read_embeddings(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.location() == "line 2");
    }
    std::istringstream bad("a 1 x\n");
    CHECK_THROWS_AS(read_embeddings(bad), ParseError);
}

TEST_CASE("read_embeddings rejects an empty file")
{
    std::istringstream in("");
    CHECK_THROWS_AS(read_embeddings(in), ParseError);
    CHECK_THROWS_AS(load_embeddings("/nonexistent/vectors.txt"), Error);
}

TEST_CASE("featurize concatenates word vector and position")
{
    const auto table = two_words();
    const auto g = path_graph(2);
    const auto f = featurize(g, table, 4, 7);
    REQUIRE(f.rows() == 2);
    REQUIRE(f.cols() == 7);
    CHECK(f(0, 0) == 0.5);
    CHECK(f(0, 2) == 2.0);
    CHECK(f(0, 3) == 1.0);
    CHECK(f(0, 4) == 0.0);
    CHECK(f(1, 4) == 1.0);
}

TEST_CASE("OOV words share one vector per word")
{
    const auto table = two_words();
    auto g = path_graph(40);
    for (auto& tok : g.tokens)
        tok.text = tok.id % 2 == 0 ? "zebra" : "okapi";
    const auto f = featurize(g, table, 8, 3);
    CHECK(f.row(0).head(3) == f.row(2).head(3));
    CHECK(f.row(0).head(3) != f.row(1).head(3));
    CHECK(f(0, 3) == 1.0);
    CHECK(f(2, 5) == 1.0);
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
        CHECK(f.row(r).tail(8).sum() == 1.0);
        for (Eigen::Index c = 0; c < 3; ++c) {
            CHECK(f(r, c) >= -kOovRange);
            CHECK(f(r, c) <= kOovRange);
        }
    }
    // Positions past the last slot share it.
    CHECK(f(39, 3 + 7) == 1.0);
    CHECK(f(7, 3 + 7) == 1.0);
}

TEST_CASE("featurize is deterministic and position width leaves word block alone")
{
    const auto table = two_words();
    auto g = path_graph(6);
    g.tokens[3].text = "unknown";
    const auto a = featurize(g, table, 5, 11);
    const auto b = featurize(g, table, 5, 11);
    CHECK(feature_digest(a) == feature_digest(b));
    const auto wide = featurize(g, table, 50, 11);
    CHECK(wide.leftCols(3) == a.leftCols(3));
    const auto other = featurize(g, table, 5, 12);
    CHECK(feature_digest(other) != feature_digest(a));
    CHECK_THROWS_AS(featurize(g, table, 0, 1), ConfigError);
}
