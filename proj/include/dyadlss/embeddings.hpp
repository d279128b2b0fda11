#pragma once

#include "dyadlss/corpus.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dyadlss::embeddings {

struct TurnKey {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    std::uint32_t turn = 0;

    auto operator<=>(const TurnKey&) const = default;
};

std::string describe(const TurnKey& key);

enum class Provenance : std::uint8_t { imported_file, test_provider, external, synthetic };

std::string_view to_string(Provenance p);

/// Per-turn vectors of one fixed dimension. Built once, then only read; a
/// const EmbeddingSet is safe to share between worker threads.
class EmbeddingSet {
public:
    EmbeddingSet(std::size_t dim, Provenance provenance, std::string source = {});

    /// Throws DataError on dimension mismatch, non-finite entry or duplicate key.
    void insert(TurnKey key, std::vector<float> values);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    Provenance provenance() const { return provenance_; }
    const std::string& source() const { return source_; }

    bool contains(const TurnKey& key) const { return vectors_.contains(key); }
    /// Throws DataError naming the key when absent.
    std::span<const float> at(const TurnKey& key) const;

    const std::map<TurnKey, std::vector<float>>& entries() const { return vectors_; }

private:
    std::size_t dim_;
    Provenance provenance_;
    std::string source_;
    std::map<TurnKey, std::vector<float>> vectors_;
};

std::vector<TurnKey> corpus_keys(const corpus::Corpus& corpus);

/// Vectors of one conversation in turn order. Throws DataError listing every
/// missing turn.
std::vector<std::span<const float>> conversation_vectors(const corpus::Conversation& conv, const EmbeddingSet& set);

enum class FileFormat { jsonl, binary };

/// Reads either format; the binary container is detected by its magic.
EmbeddingSet read_embeddings(const std::filesystem::path& path);

/// Reads a file and checks it covers exactly `expected`. Missing and orphan
/// keys are reported together in one DataError.
EmbeddingSet import_embeddings(const std::filesystem::path& path, std::span<const TurnKey> expected);

/// Throws DataError listing every missing and orphan key.
void check_coverage(const EmbeddingSet& set, std::span<const TurnKey> expected);

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set, FileFormat format);
std::string serialize_jsonl(const EmbeddingSet& set);
std::string serialize_binary(const EmbeddingSet& set);
EmbeddingSet parse_jsonl(std::string_view data, Provenance provenance = Provenance::imported_file,
                         std::string source = {});
EmbeddingSet parse_binary(std::string_view data, Provenance provenance = Provenance::imported_file,
                          std::string source = {});

/// Unit L2 vector; throws NumericError for a zero vector.
std::vector<double> normalize(std::span<const double> v);

/// Deterministic stand-in for a sentence encoder: signed feature hashing of
/// the token multiset into `dim` buckets, L2-normalized. Texts sharing more
/// tokens get higher cosine; hash-disjoint texts are orthogonal. Only integer
/// arithmetic happens before the final normalization.
std::vector<float> test_provider_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

EmbeddingSet embed_with_test_provider(const corpus::Corpus& corpus, std::size_t dim, std::uint64_t seed);

}  // namespace dyadlss::embeddings
