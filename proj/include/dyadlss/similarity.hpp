#pragma once

#include "dyadlss/corpus.hpp"
#include "dyadlss/embeddings.hpp"

#include <span>
#include <string>
#include <vector>

namespace dyadlss::similarity {

/// Cosine of two vectors, accumulated in double. Throws DataError on
/// dimension mismatch and NumericError on a zero-norm argument.
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

/// Plain left-to-right sum up to 1024 terms, pairwise (tree) summation above.
double pairwise_sum(std::span<const double> values);

/// Mean of an adjacent-pair cosine series. Throws DataError when empty.
double overall_lss(std::span<const double> series);

/// Element i is cosine(e_i, e_{i+1}); needs at least two turns.
std::vector<double> pairwise_series(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb);

struct SimilarityProfile {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    std::vector<double> pairwise;
    double overall = 0.0;
    std::size_t pair_count = 0;
    embeddings::Provenance provenance = embeddings::Provenance::imported_file;
    std::string source;
    bool low_confidence = false;  // a single turn pair
};

SimilarityProfile profile(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb);

/// Profiles for every conversation with at least two turns, in corpus order.
/// OpenMP over conversations; `jobs` <= 0 leaves the thread count to the
/// runtime. Output does not depend on the thread count.
std::vector<SimilarityProfile> compute_profiles(const corpus::Corpus& corpus, const embeddings::EmbeddingSet& emb,
                                                int jobs = 0);

/// Single-threaded reference for compute_profiles.
std::vector<SimilarityProfile> compute_profiles_serial(const corpus::Corpus& corpus,
                                                       const embeddings::EmbeddingSet& emb);

struct SimilaritySummary {
    std::size_t conversations = 0;
    std::size_t pairs = 0;
    double min_pairwise = 0.0;
    double max_pairwise = 0.0;
    double mean_overall = 0.0;
    std::size_t out_of_range = 0;  // |s| > 1 + 1e-6
    std::size_t low_confidence = 0;
};

/// Corpus-level description. s-bar is only comparable within one embedding
/// model, so profiles from different provenances or sources are refused.
SimilaritySummary summarize(std::span<const SimilarityProfile> profiles);

/// Dense matrix of pairwise turn cosines for one conversation, G(i, j) =
/// cosine(e_i, e_j). Entries come from the same cosine() as the profile, so
/// s-bar recomputed from G matches the profile bit for bit.
class TurnGram {
public:
    TurnGram(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb);
    explicit TurnGram(std::span<const std::span<const float>> vectors);

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return g_[i * n_ + j]; }

    /// s-bar of the turns taken in `order`.
    double overall(std::span<const std::size_t> order) const;

private:
    std::size_t n_ = 0;
    std::vector<double> g_;
};

}  // namespace dyadlss::similarity
