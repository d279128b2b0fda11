#pragma once

#include "dyadlss/corpus.hpp"
#include "dyadlss/embeddings.hpp"
#include "dyadlss/similarity.hpp"
#include "dyadlss/stats.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dyadlss::validation {

// ---------------------------------------------------------------------------
// Temporal decay
// ---------------------------------------------------------------------------

struct DecayCurve {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    std::vector<double> values;  // values[i - 1] = cosine(e_1, e_{1+i}), i = 1..min(K, N-1)
};

DecayCurve decay_curve(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb,
                       std::size_t horizon = 10);

// ---------------------------------------------------------------------------
// Within-couple turn-order permutation
// ---------------------------------------------------------------------------

enum class PermuteMode {
    pooled,          // uniform permutation of the whole turn sequence
    within_speaker,  // each speaker's turns shuffled among that speaker's slots
};

std::string_view to_string(PermuteMode mode);
std::optional<PermuteMode> parse_permute_mode(std::string_view s);

struct PermutationOptions {
    std::size_t replicates = 1000;
    std::uint64_t seed = 0;
    PermuteMode mode = PermuteMode::pooled;
    bool smoothed = false;  // (1 + #{null >= obs}) / (1 + R)
};

enum class TestStatus { ok, untestable };

struct PermutationResult {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    TestStatus status = TestStatus::ok;
    std::size_t pair_count = 0;
    double observed = 0.0;
    std::size_t replicates = 0;
    std::vector<double> null_values;
    std::size_t count_ge = 0;
    /// #{null >= observed} / R by default. A value of 0 means p < 1/R.
    std::optional<double> p_value;
};

/// Ties within 1e-12 (relative) of the observed value count as ">=", so
/// reorderings that reproduce the observed sum up to rounding are not
/// mistaken for smaller values.
bool at_least(double null_value, double observed);

double permutation_p(std::size_t count_ge, std::size_t replicates, bool smoothed);

/// Null distribution of s-bar for one conversation. Replicate r draws its
/// permutation from stream_key({stream, r}) so the output is independent of
/// thread count and scheduling. `speakers` is only read in within_speaker
/// mode.
std::vector<double> permutation_null(const similarity::TurnGram& gram, std::span<const Speaker> speakers,
                                     const PermutationOptions& options, std::uint64_t stream, int jobs = 0);

/// Serial reference; identical output to permutation_null.
std::vector<double> permutation_null_serial(const similarity::TurnGram& gram, std::span<const Speaker> speakers,
                                            const PermutationOptions& options, std::uint64_t stream);

/// Stream of one conversation: (seed, couple_id, kind).
std::uint64_t conversation_stream(std::uint64_t seed, const std::string& couple_id, Kind kind);

/// Conversations with fewer than three turns come back untestable (every
/// shuffle is the identity or a swap). Throws DataError when replicates < 1.
PermutationResult permute_turn_order(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb,
                                     const PermutationOptions& options, int jobs = 0);

// ---------------------------------------------------------------------------
// Cross-couple pseudo dyads
// ---------------------------------------------------------------------------

struct PseudoDyadOptions {
    Speaker held = Speaker::A;
    /// Leading partner turns skipped before interleaving.
    std::size_t partner_offset = 0;
};

/// Mean-vs-single-value comparison of the pseudo distribution.
struct PredictionTest {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

struct PseudoDyadResult {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    Speaker held = Speaker::A;
    TestStatus status = TestStatus::ok;
    double observed = 0.0;
    std::vector<double> pseudo_values;
    std::vector<std::string> partners;  // couple of each pseudo partner, aligned with pseudo_values
    /// One-sample t-test of the pseudo values against the observed s-bar
    /// (t < 0 when the real dyad is more similar than its pseudo partners).
    stats::TTestResult one_sample;
    /// Same contrast scaled for a single new draw, sd * sqrt(1 + 1/n).
    PredictionTest prediction;
};

/// s-bar of `held` interleaved with `partner` starting at the held stream:
/// h0, p0, h1, p1, ... truncated to the shorter stream. nullopt when fewer
/// than two turns result.
std::optional<double> interleaved_overall(std::span<const std::span<const float>> held,
                                          std::span<const std::span<const float>> partner);

/// For each couple with a usable conversation of `kind`, pairs the held
/// speaker's turns with the opposite-role turns of every other couple.
/// Throws DataError with fewer than three usable couples or when every
/// pseudo pairing is degenerate.
std::vector<PseudoDyadResult> pseudo_dyads(const corpus::Corpus& corpus, Kind kind,
                                           const embeddings::EmbeddingSet& emb, const PseudoDyadOptions& options,
                                           int jobs = 0);

std::vector<PseudoDyadResult> pseudo_dyads_serial(const corpus::Corpus& corpus, Kind kind,
                                                  const embeddings::EmbeddingSet& emb,
                                                  const PseudoDyadOptions& options);

}  // namespace dyadlss::validation
