#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "hint/graph.hpp"

namespace hint {

struct EmbeddingTable {
    std::size_t dim = 0;
    std::unordered_map<std::string, std::vector<double>> vectors;

    const std::vector<double>* find(const std::string& word) const
    {
        const auto it = vectors.find(word);
        return it == vectors.end() ? nullptr : &it->second;
    }
};

// Lines of "word v1 ... vd". Dimension comes from the first line; duplicate
// words keep their first vector.
EmbeddingTable load_embeddings(const std::string& path);
EmbeddingTable read_embeddings(std::istream& in);

inline constexpr std::size_t kDefaultPositionSlots = 350;
inline constexpr double kOovRange = 0.01;

// Row i = word vector of token i, then a one-hot position block of width
// `position_slots` with the bit at min(i, position_slots - 1).
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Words missing from the table get a uniform [-0.01, 0.01] vector that depends
// only on (seed, word), so every occurrence in every document shares it.
FeatureMatrix featurize(const DocumentGraph& g, const EmbeddingTable& table, std::size_t position_slots,
                        std::uint64_t seed);

std::vector<double> oov_vector(const std::string& word, std::size_t dim, std::uint64_t seed);

// Stable digest of a feature matrix, for comparing experiment arms.
std::uint64_t feature_digest(const FeatureMatrix& f);

} // namespace hint
