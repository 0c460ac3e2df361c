#include "hint/features.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "hint/errors.hpp"
#include "hint/rng.hpp"

namespace hint {

EmbeddingTable read_embeddings(std::istream& in)
{
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word))
            continue;
        std::vector<double> values;
        std::string tok;
        while (fields >> tok) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(tok, &used));
                if (used != tok.size())
                    throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no), "not a number: '" + tok + "'");
            }
        }
        if (table.dim == 0) {
            if (values.empty())
                throw ParseError("line " + std::to_string(line_no), "no vector values");
            table.dim = values.size();
        } else if (values.size() != table.dim) {
            throw ParseError("line " + std::to_string(line_no),
                             "expected " + std::to_string(table.dim) + " values, found " +
                                 std::to_string(values.size()));
        }
        table.vectors.try_emplace(std::move(word), std::move(values));
    }
    if (table.dim == 0)
        throw ParseError("line 0", "embedding file is empty");
    return table;
}

EmbeddingTable load_embeddings(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open embeddings file '" + path + "'");
    try {
        return read_embeddings(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ":" + e.location(), e.what());
    }
}

std::vector<double> oov_vector(const std::string& word, std::size_t dim, std::uint64_t seed)
{
    Rng rng(mix_seed(seed, stable_hash(word)));
    std::vector<double> v(dim);
    for (auto& x : v)
        x = rng.uniform(-kOovRange, kOovRange);
    return v;
}

FeatureMatrix featurize(const DocumentGraph& g, const EmbeddingTable& table, std::size_t position_slots,
                        std::uint64_t seed)
{
    if (position_slots == 0)
        throw ConfigError("position slot count must be >= 1");
    const std::size_t dw = table.dim;
    FeatureMatrix f = FeatureMatrix::Zero(static_cast<Eigen::Index>(g.num_vertices()),
                                          static_cast<Eigen::Index>(dw + position_slots));
    std::unordered_map<std::string, std::vector<double>> oov;
    for (std::size_t i = 0; i < g.num_vertices(); ++i) {
        const std::string& word = g.tokens[i].text;
        const std::vector<double>* vec = table.find(word);
        if (vec == nullptr) {
            auto it = oov.find(word);
            if (it == oov.end())
                it = oov.emplace(word, oov_vector(word, dw, seed)).first;
            vec = &it->second;
        }
        const auto row = static_cast<Eigen::Index>(i);
        for (std::size_t k = 0; k < dw; ++k)
            f(row, static_cast<Eigen::Index>(k)) = (*vec)[k];
        f(row, static_cast<Eigen::Index>(dw + std::min(i, position_slots - 1))) = 1.0;
    }
    return f;
}

std::uint64_t feature_digest(const FeatureMatrix& f)
{
    std::uint64_t h = mix_seed(static_cast<std::uint64_t>(f.rows()), static_cast<std::uint64_t>(f.cols()));
    for (Eigen::Index r = 0; r < f.rows(); ++r)
        for (Eigen::Index c = 0; c < f.cols(); ++c) {
            std::uint64_t bits;
            const double x = f(r, c);
            std::memcpy(&bits, &x, sizeof bits);
            h = mix_seed(h, bits);
        }
    return h;
}

} // namespace hint
