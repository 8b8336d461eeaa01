#include "tmf/retrieval.hpp"

#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>

namespace tmf {

using nlohmann::json;

namespace {

double squared_norm(const Embedding& e)
{
    double sum = 0.0;
    for (float v : e.values) {
        sum += static_cast<double>(v) * v;
    }
    return sum;
}

void check_finite(const Embedding& e, const std::string& what)
{
    for (float v : e.values) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::EmbedderError, what + " has a non-finite component");
        }
    }
}

} // namespace

double cosine_similarity(const Embedding& a, const Embedding& b)
{
    if (a.dim() != b.dim()) {
        fail(ErrorCode::DimensionMismatch,
             "cannot compare dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += static_cast<double>(a.values[i]) * b.values[i];
    }
    const double na = squared_norm(a);
    const double nb = squared_norm(b);
    if (na == 0.0 || nb == 0.0) {
        fail(ErrorCode::ZeroVector, "cosine similarity of an all-zero vector");
    }
    // One square root of the product keeps identical vectors at exactly 1.
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed)
{
    if (dim_ == 0) {
        fail(ErrorCode::InvalidArgument, "embedding dimension must be positive");
    }
}

std::string HashEmbedder::tag() const
{
    return "hash-v1:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

Embedding HashEmbedder::embed_one(std::string_view text) const
{
    Embedding e;
    e.values.assign(dim_, 0.0f);
    std::string token;
    auto flush = [&] {
        if (token.empty()) {
            return;
        }
        const std::uint64_t h = text::fnv1a64(token, seed_ ^ 0xcbf29ce484222325ULL);
        const std::size_t slot = static_cast<std::size_t>(h % dim_);
        e.values[slot] += (h >> 63) ? -1.0f : 1.0f;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return e;
}

std::vector<Embedding> HashEmbedder::embed(std::span<const std::string> texts)
{
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(embed_one(t));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(net::Endpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model))
{
}

std::vector<Embedding> RemoteEmbedder::embed(std::span<const std::string> texts)
{
    json body;
    body["model"] = model_;
    body["input"] = std::vector<std::string>(texts.begin(), texts.end());
    const auto response = net::post_json(endpoint_, "/embeddings", body.dump());
    if (response.status == 429) {
        fail(ErrorCode::RateLimited, "embedding endpoint returned 429");
    }
    if (response.status < 200 || response.status >= 300) {
        fail(ErrorCode::HttpError, "embedding endpoint returned HTTP " + std::to_string(response.status));
    }
    try {
        const json doc = json::parse(response.body);
        std::vector<Embedding> out(texts.size());
        std::vector<bool> seen(texts.size(), false);
        for (const auto& item : doc.at("data")) {
            const std::size_t i = item.value("index", std::size_t{0});
            if (i >= out.size()) {
                fail(ErrorCode::EmbedderError, "embedding index out of range");
            }
            out[i].values = item.at("embedding").get<std::vector<float>>();
            seen[i] = true;
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
            fail(ErrorCode::EmbedderError, "embedding response is missing inputs");
        }
        return out;
    } catch (const json::exception& e) {
        fail(ErrorCode::EmbedderError, std::string("malformed embedding response: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

void RetrievalConfig::validate() const
{
    if (top_k < 1) {
        fail(ErrorCode::InvalidArgument, "top_k must be at least 1");
    }
    if (!(cutoff >= -1.0 && cutoff <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "cutoff must lie in [-1, 1]");
    }
    if (batch_size < 1) {
        fail(ErrorCode::InvalidArgument, "batch_size must be at least 1");
    }
}

VectorIndex::VectorIndex(std::size_t dim, std::string embedder_tag) : dim_(dim), embedder_tag_(std::move(embedder_tag))
{
}

const IndexEntry* VectorIndex::find(const TechniqueId& id) const
{
    auto it = positions_.find(id);
    return it == positions_.end() ? nullptr : &entries_[it->second];
}

void VectorIndex::insert(IndexEntry entry)
{
    if (entry.embedding.dim() != dim_) {
        fail(ErrorCode::DimensionMismatch, entry.id.str() + " has dimension " + std::to_string(entry.embedding.dim()) +
                                               ", index has " + std::to_string(dim_));
    }
    check_finite(entry.embedding, entry.id.str());
    if (squared_norm(entry.embedding) == 0.0) {
        fail(ErrorCode::ZeroVector, entry.id.str() + " embeds to the zero vector");
    }
    if (positions_.contains(entry.id)) {
        fail(ErrorCode::DuplicateId, entry.id.str() + " is already indexed");
    }
    positions_.emplace(entry.id, entries_.size());
    entries_.push_back(std::move(entry));
}

void ensure_compatible(const VectorIndex& index, const Embedder& embedder)
{
    if (index.embedder_tag() != embedder.tag()) {
        fail(ErrorCode::EmbedderTagMismatch,
             "index was built with '" + index.embedder_tag() + "', embedder is '" + embedder.tag() + "'");
    }
}

void extend_index(VectorIndex& index, const Corpus& corpus, Embedder& embedder, const RetrievalConfig& cfg,
                  BuildStats* stats)
{
    cfg.validate();
    BuildStats local;
    BuildStats& s = stats ? *stats : local;

    std::vector<const std::pair<TechniqueId, std::string>*> pending;
    for (const auto& item : corpus) {
        const bool queued = std::any_of(pending.begin(), pending.end(), [&](auto* p) { return p->first == item.first; });
        if (index.contains(item.first) || queued) {
            ++s.skipped;
        } else {
            pending.push_back(&item);
        }
    }

    for (std::size_t start = 0, batch = 0; start < pending.size(); start += cfg.batch_size, ++batch) {
        const std::size_t end = std::min(pending.size(), start + cfg.batch_size);
        std::vector<std::string> texts;
        for (std::size_t i = start; i < end; ++i) {
            texts.push_back(pending[i]->second);
        }
        std::vector<Embedding> vectors;
        const std::string where = "batch " + std::to_string(batch) + " (entries " + std::to_string(start) + ".." +
                                  std::to_string(end - 1) + ")";
        ++s.embedder_calls;
        try {
            vectors = embedder.embed(texts);
        } catch (const Error& e) {
            fail(ErrorCode::EmbedderError, where + ": " + e.what());
        }
        if (vectors.size() != texts.size()) {
            fail(ErrorCode::EmbedderError, where + ": embedder returned " + std::to_string(vectors.size()) +
                                               " vectors for " + std::to_string(texts.size()) + " texts");
        }
        for (std::size_t i = start; i < end; ++i) {
            IndexEntry entry{pending[i]->first, std::move(vectors[i - start]), pending[i]->second};
            if (index.size() == 0 && index.dim() == 0) {
                index = VectorIndex(entry.embedding.dim(), index.embedder_tag());
            }
            try {
                index.insert(std::move(entry));
            } catch (const Error& e) {
                fail(ErrorCode::EmbedderError, where + ": " + e.what());
            }
            ++s.inserted;
        }
    }
}

VectorIndex build_index(const Corpus& corpus, Embedder& embedder, const RetrievalConfig& cfg, BuildStats* stats)
{
    if (corpus.empty()) {
        fail(ErrorCode::InvalidArgument, "cannot build an index over an empty corpus");
    }
    VectorIndex index(0, embedder.tag());
    extend_index(index, corpus, embedder, cfg, stats);
    return index;
}

std::vector<Candidate> query(const VectorIndex& index, const Embedding& probe, const RetrievalConfig& cfg)
{
    cfg.validate();
    if (probe.dim() != index.dim()) {
        fail(ErrorCode::DimensionMismatch, "probe dimension " + std::to_string(probe.dim()) +
                                               " does not match index dimension " + std::to_string(index.dim()));
    }
    if (squared_norm(probe) == 0.0) {
        fail(ErrorCode::ZeroVector, "probe is the zero vector");
    }
    std::vector<Candidate> hits;
    for (const auto& e : index.entries()) {
        const double sim = cosine_similarity(probe, e.embedding);
        if (sim >= cfg.cutoff) {
            hits.push_back({e.id, sim});
        }
    }
    const auto by_rank = [](const Candidate& a, const Candidate& b) {
        if (a.similarity != b.similarity) {
            return a.similarity > b.similarity;
        }
        return a.id < b.id;
    };
    if (hits.size() > cfg.top_k) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(cfg.top_k), hits.end(), by_rank);
        hits.erase(hits.begin() + static_cast<std::ptrdiff_t>(cfg.top_k), hits.end());
    } else {
        std::sort(hits.begin(), hits.end(), by_rank);
    }
    return hits;
}

// ---------------------------------------------------------------------------
// Persistence: versioned JSON, vectors as base64 little-endian float32.
// ---------------------------------------------------------------------------

namespace {

std::string encode_vector(const Embedding& e)
{
    std::vector<std::uint8_t> bytes;
    bytes.reserve(4 * e.dim());
    for (float v : e.values) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int shift = 0; shift < 32; shift += 8) {
            bytes.push_back(static_cast<std::uint8_t>((bits >> shift) & 0xFF));
        }
    }
    return text::base64_encode(bytes);
}

Embedding decode_vector(std::string_view encoded, std::size_t dim)
{
    const auto bytes = text::base64_decode(encoded);
    if (bytes.size() != 4 * dim) {
        fail(ErrorCode::SchemaError, "vector payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                                         std::to_string(4 * dim));
    }
    Embedding e;
    e.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            bits |= static_cast<std::uint32_t>(bytes[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
        }
        e.values[i] = std::bit_cast<float>(bits);
    }
    return e;
}

} // namespace

std::string index_to_json(const VectorIndex& index)
{
    nlohmann::ordered_json root;
    root["format"] = "tmf-vector-index";
    root["format_version"] = kIndexFormatVersion;
    root["dim"] = index.dim();
    root["embedder_tag"] = index.embedder_tag();
    auto& list = root["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : index.entries()) {
        list.push_back({{"id", e.id.str()}, {"text", e.text}, {"vector", encode_vector(e.embedding)}});
    }
    return root.dump(1) + "\n";
}

VectorIndex index_from_json(std::string_view json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::SchemaError, std::string("index: invalid JSON: ") + e.what());
    }
    try {
        if (root.at("format").get<std::string>() != "tmf-vector-index") {
            fail(ErrorCode::SchemaError, "index: not a vector index file");
        }
        const int version = root.at("format_version").get<int>();
        if (version != kIndexFormatVersion) {
            fail(ErrorCode::FormatVersionMismatch, "index format version " + std::to_string(version) +
                                                       " is not supported (expected " +
                                                       std::to_string(kIndexFormatVersion) + ")");
        }
        const auto dim = root.at("dim").get<std::size_t>();
        VectorIndex index(dim, root.at("embedder_tag").get<std::string>());
        for (const auto& e : root.at("entries")) {
            index.insert({TechniqueId::parse(e.at("id").get<std::string>()),
                          decode_vector(e.at("vector").get<std::string>(), dim), e.value("text", std::string())});
        }
        return index;
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("index: ") + e.what());
    }
}

void save_index(const VectorIndex& index, const std::filesystem::path& path)
{
    text::write_file(path, index_to_json(index));
}

VectorIndex load_index(const std::filesystem::path& path)
{
    return index_from_json(text::read_file(path));
}

} // namespace tmf
