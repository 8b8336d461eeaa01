#pragma once

// Exact cosine-similarity vector index over the ATT&CK corpus.

#include "tmf/model.hpp"
#include "tmf/net.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tmf {

struct Embedding {
    std::vector<float> values;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const Embedding&) const = default;
};

/// Throws DimensionMismatch or ZeroVector. Result is clamped to [-1, 1].
double cosine_similarity(const Embedding& a, const Embedding& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
    /// Identifies the embedding space; indices refuse probes from another tag.
    virtual std::string tag() const = 0;
};

/// Seeded bag-of-token-hashes projection; deterministic and offline.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256, std::uint64_t seed = 0x7f4a7c15ULL);

    std::vector<Embedding> embed(std::span<const std::string> texts) override;
    std::string tag() const override;

    Embedding embed_one(std::string_view text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// OpenAI-compatible `/embeddings` endpoint.
class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(net::Endpoint endpoint, std::string model);

    std::vector<Embedding> embed(std::span<const std::string> texts) override;
    std::string tag() const override { return "remote:" + model_; }

private:
    net::Endpoint endpoint_;
    std::string model_;
};

struct RetrievalConfig {
    std::size_t top_k = 3;
    double cutoff = 0.6;
    std::size_t batch_size = 64;

    void validate() const; // InvalidArgument
};

struct IndexEntry {
    TechniqueId id;
    Embedding embedding;
    std::string text;

    bool operator==(const IndexEntry&) const = default;
};

class VectorIndex {
public:
    VectorIndex() = default;
    VectorIndex(std::size_t dim, std::string embedder_tag);

    std::size_t dim() const noexcept { return dim_; }
    const std::string& embedder_tag() const noexcept { return embedder_tag_; }
    const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(const TechniqueId& id) const { return positions_.contains(id); }
    const IndexEntry* find(const TechniqueId& id) const;

    /// Rejects duplicate ids, wrong dimension, non-finite or all-zero vectors.
    void insert(IndexEntry entry);

    bool operator==(const VectorIndex& other) const
    {
        return dim_ == other.dim_ && embedder_tag_ == other.embedder_tag_ && entries_ == other.entries_;
    }

private:
    std::size_t dim_ = 0;
    std::string embedder_tag_;
    std::vector<IndexEntry> entries_;
    std::map<TechniqueId, std::size_t> positions_;
};

struct BuildStats {
    std::size_t embedder_calls = 0;
    std::size_t inserted = 0;
    std::size_t skipped = 0; // ids already present
};

using Corpus = std::vector<std::pair<TechniqueId, std::string>>;

/// Embeds the corpus in batches of cfg.batch_size. Throws EmbedderError
/// naming the failing batch.
VectorIndex build_index(const Corpus& corpus, Embedder& embedder, const RetrievalConfig& cfg,
                        BuildStats* stats = nullptr);

/// Incremental insert: embeds only ids missing from `index`; existing
/// entries are left untouched.
void extend_index(VectorIndex& index, const Corpus& corpus, Embedder& embedder, const RetrievalConfig& cfg,
                  BuildStats* stats = nullptr);

/// Throws EmbedderTagMismatch.
void ensure_compatible(const VectorIndex& index, const Embedder& embedder);

/// Sorted by descending similarity, ties by ascending id; every hit is
/// >= cfg.cutoff and at most cfg.top_k hits are returned.
std::vector<Candidate> query(const VectorIndex& index, const Embedding& probe, const RetrievalConfig& cfg);

inline constexpr int kIndexFormatVersion = 1;

void save_index(const VectorIndex& index, const std::filesystem::path& path);
/// Throws IoError, SchemaError or FormatVersionMismatch.
VectorIndex load_index(const std::filesystem::path& path);

std::string index_to_json(const VectorIndex& index);
VectorIndex index_from_json(std::string_view json_text);

} // namespace tmf
