#include "hint/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>

#include "hint/errors.hpp"

namespace hint {

using json = nlohmann::json;

std::vector<std::size_t> DocumentGraph::degrees() const
{
    std::vector<std::size_t> deg(tokens.size(), 0);
    for (const auto& [u, v] : edges) {
        ++deg[static_cast<std::size_t>(u)];
        ++deg[static_cast<std::size_t>(v)];
    }
    return deg;
}

std::vector<std::vector<TokenId>> DocumentGraph::adjacency() const
{
    std::vector<std::vector<TokenId>> adj(tokens.size());
    for (const auto& [u, v] : edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    return adj;
}

namespace {

void validate_tokens(const std::string& doc_id, const std::vector<Token>& tokens)
{
    if (tokens.empty())
        throw ValidationError(doc_id, -1, "empty document");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (t.id != static_cast<TokenId>(i))
            throw ValidationError(doc_id, t.id,
                                  "token ids must be consecutive from 0; expected " + std::to_string(i) +
                                      ", found " + std::to_string(t.id));
        const std::int32_t prev = i == 0 ? 0 : tokens[i - 1].sentence;
        if (t.sentence < prev || t.sentence > prev + 1 || (i == 0 && t.sentence != 0))
            throw ValidationError(doc_id, t.id,
                                  "sentence index " + std::to_string(t.sentence) +
                                      " breaks the 0,1,2,... non-decreasing order");
    }
}

void check_id(const std::string& doc_id, TokenId id, std::size_t n, const char* what)
{
    if (id < 0 || static_cast<std::size_t>(id) >= n)
        throw ValidationError(doc_id, id,
                              std::string(what) + " references token " + std::to_string(id) + " of a " +
                                  std::to_string(n) + "-token document");
}

void validate_roots(const std::string& doc_id, const std::vector<Token>& tokens,
                    const std::vector<TokenId>& roots)
{
    const std::size_t sentences = static_cast<std::size_t>(tokens.back().sentence) + 1;
    if (roots.size() != sentences)
        throw ValidationError(doc_id, -1,
                              "expected one root per sentence (" + std::to_string(sentences) + "), got " +
                                  std::to_string(roots.size()));
    for (std::size_t k = 0; k < roots.size(); ++k) {
        check_id(doc_id, roots[k], tokens.size(), "sentence root");
        if (tokens[static_cast<std::size_t>(roots[k])].sentence != static_cast<std::int32_t>(k))
            throw ValidationError(doc_id, roots[k],
                                  "root of sentence " + std::to_string(k) + " lies in another sentence");
    }
}

Edge make_edge(TokenId a, TokenId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

} // namespace

DocumentGraph build_dependency_graph(std::vector<Token> tokens,
                                     const std::vector<DependencyRecord>& deps,
                                     std::vector<TokenId> roots,
                                     std::string doc_id, ClassId label)
{
    validate_tokens(doc_id, tokens);
    validate_roots(doc_id, tokens, roots);

    const std::size_t n = tokens.size();
    std::set<Edge> edges;
    for (const auto& d : deps) {
        check_id(doc_id, d.head, n, "dependency head");
        check_id(doc_id, d.dependent, n, "dependency dependent");
        if (d.head == d.dependent)
            continue;
        if (tokens[static_cast<std::size_t>(d.head)].sentence !=
            tokens[static_cast<std::size_t>(d.dependent)].sentence)
            throw ValidationError(doc_id, d.dependent,
                                  "cross-sentence dependency " + std::to_string(d.head) + " -> " +
                                      std::to_string(d.dependent));
        edges.insert(make_edge(d.head, d.dependent));
    }
    for (std::size_t k = 0; k + 1 < roots.size(); ++k)
        edges.insert(make_edge(roots[k], roots[k + 1]));

    DocumentGraph g;
    g.doc_id = std::move(doc_id);
    g.label = label;
    g.tokens = std::move(tokens);
    g.edges.assign(edges.begin(), edges.end());
    g.sentence_roots = std::move(roots);
    return g;
}

DocumentGraph build_cooccurrence_graph(std::vector<Token> tokens, int window,
                                       std::string doc_id, ClassId label)
{
    if (window < 2)
        throw ConfigError("co-occurrence window must be >= 2, got " + std::to_string(window));
    validate_tokens(doc_id, tokens);

    DocumentGraph g;
    const auto n = static_cast<TokenId>(tokens.size());
    for (TokenId i = 0; i < n; ++i)
        for (TokenId j = i + 1; j < n && j - i < window; ++j)
            g.edges.emplace_back(i, j);
    g.doc_id = std::move(doc_id);
    g.label = label;
    g.tokens = std::move(tokens);
    return g;
}

void validate_graph(const DocumentGraph& g)
{
    validate_tokens(g.doc_id, g.tokens);
    const std::size_t n = g.tokens.size();
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto [u, v] = g.edges[e];
        check_id(g.doc_id, u, n, "edge");
        check_id(g.doc_id, v, n, "edge");
        if (u == v)
            throw ValidationError(g.doc_id, u, "self-loop edge");
        if (u > v)
            throw ValidationError(g.doc_id, u, "edge pair not stored smaller id first");
        if (e > 0 && !(g.edges[e - 1] < g.edges[e]))
            throw ValidationError(g.doc_id, u, "edges not sorted or contain a duplicate");
    }
    if (g.sentence_roots.empty())
        return;
    validate_roots(g.doc_id, g.tokens, g.sentence_roots);
    for (std::size_t k = 0; k + 1 < g.sentence_roots.size(); ++k) {
        const Edge chain = make_edge(g.sentence_roots[k], g.sentence_roots[k + 1]);
        if (!std::binary_search(g.edges.begin(), g.edges.end(), chain))
            throw ValidationError(g.doc_id, g.sentence_roots[k + 1],
                                  "missing root chain edge between sentences " + std::to_string(k) +
                                      " and " + std::to_string(k + 1));
    }
}

std::size_t count_components(const DocumentGraph& g)
{
    std::vector<std::size_t> parent(g.num_vertices());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t components = g.num_vertices();
    for (const auto& [u, v] : g.edges) {
        const auto a = find(static_cast<std::size_t>(u));
        const auto b = find(static_cast<std::size_t>(v));
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json parse_json(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("byte " + std::to_string(e.byte), e.what());
    }
}

const json& field(const json& obj, const std::string& path, const char* key)
{
    if (!obj.is_object())
        throw ParseError(path.empty() ? "<root>" : path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ParseError(path.empty() ? key : path + "." + key, "missing field");
    return *it;
}

std::string join(const std::string& path, const char* key)
{
    return path.empty() ? key : path + "." + key;
}

std::int64_t get_int(const json& obj, const std::string& path, const char* key)
{
    const json& v = field(obj, path, key);
    if (!v.is_number_integer())
        throw ParseError(join(path, key), "expected an integer");
    return v.get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& path, const char* key)
{
    const json& v = field(obj, path, key);
    if (!v.is_string())
        throw ParseError(join(path, key), "expected a string");
    return v.get<std::string>();
}

const json& get_array(const json& obj, const std::string& path, const char* key)
{
    const json& v = field(obj, path, key);
    if (!v.is_array())
        throw ParseError(join(path, key), "expected an array");
    return v;
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known)
{
    for (const auto& [k, _] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* s) { return k == s; }))
            throw ParseError(path.empty() ? k : path + "." + k, "unknown field");
    }
}

std::vector<Token> parse_tokens(const json& doc)
{
    const json& arr = get_array(doc, "", "tokens");
    std::vector<Token> tokens;
    tokens.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "tokens[" + std::to_string(i) + "]";
        reject_unknown(arr[i], path, {"id", "text", "sentence"});
        tokens.push_back(Token{static_cast<TokenId>(get_int(arr[i], path, "id")),
                               get_string(arr[i], path, "text"),
                               static_cast<std::int32_t>(get_int(arr[i], path, "sentence"))});
    }
    return tokens;
}

std::vector<TokenId> parse_roots(const json& doc)
{
    const json& arr = get_array(doc, "", "sentence_roots");
    std::vector<TokenId> roots;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number_integer())
            throw ParseError("sentence_roots[" + std::to_string(i) + "]", "expected an integer");
        roots.push_back(arr[i].get<TokenId>());
    }
    return roots;
}

json tokens_json(const std::vector<Token>& tokens)
{
    json arr = json::array();
    for (const auto& t : tokens)
        arr.push_back(json{{"id", t.id}, {"text", t.text}, {"sentence", t.sentence}});
    return arr;
}

} // namespace

std::string serialize_graph(const DocumentGraph& g)
{
    json edges = json::array();
    for (const auto& [u, v] : g.edges)
        edges.push_back(json::array({std::min(u, v), std::max(u, v)}));
    // nlohmann::json orders object keys, so output is byte-stable.
    json doc{{"doc_id", g.doc_id},
             {"label", g.label},
             {"tokens", tokens_json(g.tokens)},
             {"edges", std::move(edges)},
             {"sentence_roots", g.sentence_roots}};
    return doc.dump();
}

DocumentGraph parse_graph(std::string_view text)
{
    const json doc = parse_json(text);
    reject_unknown(doc, "", {"doc_id", "label", "tokens", "edges", "sentence_roots"});

    DocumentGraph g;
    g.doc_id = get_string(doc, "", "doc_id");
    g.label = static_cast<ClassId>(get_int(doc, "", "label"));
    g.tokens = parse_tokens(doc);
    const json& edges = get_array(doc, "", "edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const json& e = edges[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw ParseError("edges[" + std::to_string(i) + "]", "expected a pair of integers");
        g.edges.emplace_back(e[0].get<TokenId>(), e[1].get<TokenId>());
    }
    g.sentence_roots = parse_roots(doc);
    validate_graph(g);
    return g;
}

ParsedDocument parse_parsed_document(std::string_view text)
{
    const json doc = parse_json(text);
    reject_unknown(doc, "", {"doc_id", "label", "tokens", "dependencies", "sentence_roots"});

    ParsedDocument d;
    d.doc_id = get_string(doc, "", "doc_id");
    d.label = static_cast<ClassId>(get_int(doc, "", "label"));
    d.tokens = parse_tokens(doc);
    if (doc.contains("dependencies")) {
        const json& deps = get_array(doc, "", "dependencies");
        for (std::size_t i = 0; i < deps.size(); ++i) {
            const std::string path = "dependencies[" + std::to_string(i) + "]";
            reject_unknown(deps[i], path, {"head", "dependent", "relation"});
            d.dependencies.push_back(
                DependencyRecord{static_cast<TokenId>(get_int(deps[i], path, "head")),
                                 static_cast<TokenId>(get_int(deps[i], path, "dependent")),
                                 deps[i].contains("relation") ? get_string(deps[i], path, "relation")
                                                              : std::string{}});
        }
    }
    if (doc.contains("sentence_roots"))
        d.sentence_roots = parse_roots(doc);
    return d;
}

std::string serialize_parsed_document(const ParsedDocument& d)
{
    json deps = json::array();
    for (const auto& r : d.dependencies)
        deps.push_back(json{{"head", r.head}, {"dependent", r.dependent}, {"relation", r.relation}});
    json doc{{"doc_id", d.doc_id},
             {"label", d.label},
             {"tokens", tokens_json(d.tokens)},
             {"dependencies", std::move(deps)},
             {"sentence_roots", d.sentence_roots}};
    return doc.dump();
}

std::string_view to_string(Split s) noexcept { return s == Split::train ? "train" : "test"; }

std::vector<ManifestEntry> parse_manifest(std::string_view jsonl)
{
    std::vector<ManifestEntry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        const std::size_t end = std::min(jsonl.find('\n', pos), jsonl.size());
        const std::string_view line = jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos)
            continue;
        const std::string where = "line " + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where, e.what());
        }
        try {
            ManifestEntry m;
            m.doc_id = get_string(obj, "", "doc_id");
            const std::string split = get_string(obj, "", "split");
            if (split == "train")
                m.split = Split::train;
            else if (split == "test")
                m.split = Split::test;
            else
                throw ParseError("split", "expected \"train\" or \"test\", got \"" + split + "\"");
            m.path = get_string(obj, "", "path");
            entries.push_back(std::move(m));
        } catch (const ParseError& e) {
            throw ParseError(where + ": " + e.location(), e.what());
        }
    }
    return entries;
}

std::string serialize_manifest(const std::vector<ManifestEntry>& entries)
{
    std::string out;
    for (const auto& m : entries) {
        out += json{{"doc_id", m.doc_id}, {"split", to_string(m.split)}, {"path", m.path}}.dump();
        out += '\n';
    }
    return out;
}

} // namespace hint
