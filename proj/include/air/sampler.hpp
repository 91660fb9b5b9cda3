#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "air/corpus.hpp"
#include "air/llm.hpp"

namespace air {

struct EmbeddedDoc {
    std::string doc_id;
    std::vector<double> vector;  // unit-normalized

    std::size_t dim() const { return vector.size(); }
};

// Throws std::invalid_argument on a zero vector.
std::vector<double> unit_normalize(std::vector<double> vector);

// dot(a,b) / (|a||b|). Throws std::invalid_argument on dim mismatch or a
// zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

enum class SampleStrategy {
    chain,       // each pick is least similar to the previous pick
    min_to_set,  // each pick minimizes its max similarity to all picks so far
};

struct SampleSelection {
    std::vector<std::string> selected_ids;  // selection order
    uint64_t seed = 0;
    std::size_t n = 0;       // requested count
    bool truncated = false;  // n exceeded the pool size
};

// First element uniform under `seed` (mt19937_64, index = engine() % size),
// then n-1 greedy picks. Ties break toward the lexicographically smallest
// doc_id. Throws std::invalid_argument for n < 1 or an empty pool.
SampleSelection density_sample(const std::vector<EmbeddedDoc>& pool, std::size_t n,
                               uint64_t seed, SampleStrategy strategy = SampleStrategy::chain);

struct EmbedOptions {
    std::filesystem::path cache_path;  // empty = no cache
    RetryPolicy retry;
    int workers = 1;
};

// One unit-normalized EmbeddedDoc per input, input order. Results are cached
// by (provider id, doc id, text sha256). Throws if any embedding cannot be
// produced after retries (sampling needs the full pool) or if docs is empty.
std::vector<EmbeddedDoc> embed_all(const std::vector<Document>& docs,
                                   EmbeddingProvider& provider,
                                   const EmbedOptions& options = {});

}  // namespace air
