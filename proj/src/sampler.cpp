#include "air/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>

#include "air/errors.hpp"
#include "air/hash.hpp"
#include "air/parallel.hpp"
#include "air/store.hpp"

namespace air {

std::vector<double> unit_normalize(std::vector<double> vector) {
    double sq = 0.0;
    for (double v : vector) sq += v * v;
    if (sq == 0.0) throw std::invalid_argument("cannot normalize a zero vector");
    double norm = std::sqrt(sq);
    for (double& v : vector) v /= norm;
    return vector;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    if (a.empty()) throw std::invalid_argument("cosine: empty vectors");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

SampleSelection density_sample(const std::vector<EmbeddedDoc>& pool, std::size_t n,
                               uint64_t seed, SampleStrategy strategy) {
    if (pool.empty()) throw std::invalid_argument("density_sample: empty pool");
    if (n < 1) throw std::invalid_argument("density_sample: n must be >= 1");

    SampleSelection selection;
    selection.seed = seed;
    selection.n = n;
    if (n > pool.size()) {
        selection.truncated = true;
        n = pool.size();
    }

    std::vector<std::size_t> remaining(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) remaining[i] = i;

    std::mt19937_64 engine(seed);
    std::size_t first = static_cast<std::size_t>(engine() % pool.size());

    std::vector<std::size_t> selected;
    selected.reserve(n);
    selected.push_back(remaining[first]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(first));

    while (selected.size() < n) {
        std::size_t best = remaining.front();
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t candidate : remaining) {
            double score;
            if (strategy == SampleStrategy::chain) {
                score = cosine_similarity(pool[selected.back()].vector, pool[candidate].vector);
            } else {
                // classic farthest-point: minimize the max similarity to the
                // already-selected set
                score = -std::numeric_limits<double>::infinity();
                for (std::size_t s : selected) {
                    score = std::max(score,
                                     cosine_similarity(pool[s].vector, pool[candidate].vector));
                }
            }
            if (score < best_score ||
                (score == best_score && pool[candidate].doc_id < pool[best].doc_id)) {
                best_score = score;
                best = candidate;
            }
        }
        selected.push_back(best);
        remaining.erase(std::find(remaining.begin(), remaining.end(), best));
    }

    selection.selected_ids.reserve(selected.size());
    for (std::size_t idx : selected) selection.selected_ids.push_back(pool[idx].doc_id);
    return selection;
}

namespace {

struct CacheKey {
    std::string provider;
    std::string doc_id;
    std::string text_sha256;

    bool operator<(const CacheKey& other) const {
        return std::tie(provider, doc_id, text_sha256) <
               std::tie(other.provider, other.doc_id, other.text_sha256);
    }
};

std::map<CacheKey, std::vector<double>> load_cache(const std::filesystem::path& path) {
    std::map<CacheKey, std::vector<double>> cache;
    if (path.empty() || !std::filesystem::exists(path)) return cache;
    JsonlReadResult lines = read_jsonl_lenient(path);
    for (const Json& record : lines.records) {
        try {
            CacheKey key{record.at("provider").get<std::string>(),
                         record.at("doc_id").get<std::string>(),
                         record.at("text_sha256").get<std::string>()};
            cache[key] = record.at("vector").get<std::vector<double>>();
        } catch (const Json::exception&) {
            // stale or hand-edited entry; recompute
        }
    }
    return cache;
}

void save_cache(const std::filesystem::path& path,
                const std::map<CacheKey, std::vector<double>>& cache) {
    std::vector<Json> records;
    records.reserve(cache.size());
    for (const auto& [key, vector] : cache) {
        records.push_back(Json{{"doc_id", key.doc_id},
                               {"text_sha256", key.text_sha256},
                               {"provider", key.provider},
                               {"vector", vector}});
    }
    atomic_write_text(path, dump_jsonl(records));
}

}  // namespace

std::vector<EmbeddedDoc> embed_all(const std::vector<Document>& docs,
                                   EmbeddingProvider& provider, const EmbedOptions& options) {
    if (docs.empty()) throw std::invalid_argument("embed_all: empty document list");

    auto cache = load_cache(options.cache_path);
    const std::string provider_id = provider.id();
    bool cache_dirty = false;
    std::mutex cache_mutex;

    auto embed_one = [&](const Document& doc) -> EmbeddedDoc {
        CacheKey key{provider_id, doc.id, sha256_hex(doc.text)};
        {
            std::lock_guard lock(cache_mutex);
            auto it = cache.find(key);
            if (it != cache.end()) return EmbeddedDoc{doc.id, it->second};
        }
        std::vector<double> raw;
        int attempt = 0;
        for (;;) {
            ++attempt;
            try {
                raw = provider.embed(doc.text);
                break;
            } catch (const TransportError& err) {
                if (!err.retryable || attempt >= options.retry.max_attempts) {
                    throw TransportError("embedding failed for doc '" + doc.id +
                                             "': " + err.what(),
                                         err.status, false);
                }
                auto delay = static_cast<long>(options.retry.base_delay_ms *
                                               std::pow(options.retry.multiplier, attempt - 1));
                if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }
        }
        std::vector<double> normalized = unit_normalize(std::move(raw));
        {
            std::lock_guard lock(cache_mutex);
            cache[key] = normalized;
            cache_dirty = true;
        }
        return EmbeddedDoc{doc.id, std::move(normalized)};
    };

    std::vector<EmbeddedDoc> out =
        parallel_map<Document, EmbeddedDoc>(docs, options.workers, embed_one);

    if (!options.cache_path.empty() && cache_dirty) save_cache(options.cache_path, cache);

    const std::size_t dim = out.front().dim();
    for (const EmbeddedDoc& doc : out) {
        if (doc.dim() != dim) {
            throw TransportError("provider returned inconsistent embedding dims", 0, false);
        }
    }
    return out;
}

}  // namespace air
