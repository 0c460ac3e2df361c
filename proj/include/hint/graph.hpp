#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hint {

using TokenId = std::int32_t;
using ClassId = std::int32_t;

struct Token {
    TokenId id = 0;
    std::string text;
    std::int32_t sentence = 0;

    bool operator==(const Token&) const = default;
};

struct DependencyRecord {
    TokenId head = 0;
    TokenId dependent = 0;
    std::string relation;
};

// Undirected edge stored with the smaller endpoint first.
using Edge = std::pair<TokenId, TokenId>;

// One node per token occurrence. Edges are kept sorted and unique.
struct DocumentGraph {
    std::string doc_id;
    ClassId label = 0;
    std::vector<Token> tokens;
    std::vector<Edge> edges;
    std::vector<TokenId> sentence_roots;

    std::size_t num_vertices() const noexcept { return tokens.size(); }
    std::size_t num_edges() const noexcept { return edges.size(); }
    std::size_t num_sentences() const noexcept
    {
        return tokens.empty() ? 0 : static_cast<std::size_t>(tokens.back().sentence) + 1;
    }

    std::vector<std::size_t> degrees() const;
    std::vector<std::vector<TokenId>> adjacency() const;

    bool operator==(const DocumentGraph&) const = default;
};

// Word-level edges from the parse plus a chain through consecutive sentence roots.
DocumentGraph build_dependency_graph(std::vector<Token> tokens,
                                     const std::vector<DependencyRecord>& deps,
                                     std::vector<TokenId> roots,
                                     std::string doc_id, ClassId label);

// Edge {i,j} iff 0 < |i-j| < window.
DocumentGraph build_cooccurrence_graph(std::vector<Token> tokens, int window,
                                       std::string doc_id, ClassId label);

inline constexpr int kDefaultCooccurrenceWindow = 3;

// Throws ValidationError on the first broken invariant.
void validate_graph(const DocumentGraph& g);

// Number of connected components (isolated vertices count as components).
std::size_t count_components(const DocumentGraph& g);

// Graph interchange JSON, one line, byte-stable.
std::string serialize_graph(const DocumentGraph& g);
DocumentGraph parse_graph(std::string_view text);

// Pre-parsed document as emitted by the preprocessor: the graph inputs before
// edges are built. `dependencies` may be absent for raw token files.
struct ParsedDocument {
    std::string doc_id;
    ClassId label = 0;
    std::vector<Token> tokens;
    std::vector<DependencyRecord> dependencies;
    std::vector<TokenId> sentence_roots;
};

ParsedDocument parse_parsed_document(std::string_view text);
std::string serialize_parsed_document(const ParsedDocument& doc);

enum class Split { train, test };

struct ManifestEntry {
    std::string doc_id;
    Split split = Split::train;
    std::string path;
};

std::vector<ManifestEntry> parse_manifest(std::string_view jsonl);
std::string serialize_manifest(const std::vector<ManifestEntry>& entries);

std::string_view to_string(Split s) noexcept;

} // namespace hint
