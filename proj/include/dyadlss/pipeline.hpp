#pragma once

#include "dyadlss/analysis.hpp"
#include "dyadlss/corpus.hpp"
#include "dyadlss/embeddings.hpp"
#include "dyadlss/lexicon.hpp"
#include "dyadlss/lmm.hpp"
#include "dyadlss/similarity.hpp"
#include "dyadlss/synthgen.hpp"
#include "dyadlss/validation.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dyadlss::pipeline {

struct AnalysisConfig {
    std::uint64_t seed = 0;
    std::size_t replicates = 1000;
    std::size_t horizon = 10;
    validation::PermuteMode permute_mode = validation::PermuteMode::pooled;
    bool smoothed = false;
    Speaker held = Speaker::A;
    std::size_t partner_offset = 0;
    lexicon::MatchInput match_input = lexicon::MatchInput::percent;
    lmm::FitMethod method = lmm::FitMethod::reml;
    lmm::DofMethod dof = lmm::DofMethod::satterthwaite;
    analysis::Grouping grouping = analysis::Grouping::couple;
    double alpha = 0.05;
    std::vector<std::string> model_sets{"base", "a", "b", "c", "d", "e", "all"};
    /// Worker bound. Not part of the digest: results never depend on it.
    int jobs = 0;
};

/// key=value lines of every setting except jobs.
std::string canonical_config(const AnalysisConfig& config);

/// 16 hex digits of FNV-1a over canonical_config.
std::string config_digest(const AnalysisConfig& config);

/// File name -> contents. Every CSV opens with a "# dyadlss config=... seed=..."
/// line and every JSON document carries the same pair under "meta".
using Bundle = std::map<std::string, std::string>;

struct Inputs {
    const corpus::Corpus* corpus = nullptr;
    const embeddings::EmbeddingSet* embeddings = nullptr;
    const std::vector<corpus::ParticipantRating>* ratings = nullptr;  // null: similarity-only
    std::span<const lexicon::CategoryLexicon> lexicons;
};

/// similarity.csv, pairwise.csv
Bundle similarity_stage(const Inputs& in, const AnalysisConfig& config,
                        std::vector<similarity::SimilarityProfile>* profiles = nullptr);

/// validation.json, decay.csv, permutation.csv, permutation_null.csv,
/// pseudo_dyads.csv, pseudo_tests.csv
Bundle validation_stage(const Inputs& in, const AnalysisConfig& config);

/// counts.csv, synchrony.csv
Bundle matching_stage(const Inputs& in, const AnalysisConfig& config,
                      std::vector<lexicon::ConversationMatch>* matches = nullptr);

/// Participant rows joining ratings, s-bar, lexicon counts and matching.
std::vector<analysis::Observation> observations(const corpus::Corpus& corpus,
                                                std::span<const similarity::SimilarityProfile> profiles,
                                                std::span<const lexicon::ConversationMatch> matches,
                                                std::span<const corpus::ParticipantRating> ratings);

/// Every stage plus model_<set>.json, model_<set>_coefficients.csv,
/// scatter.csv, manipulation.json, summary.json, report.txt and MANIFEST.
/// Without ratings the model stage is skipped with a warning.
Bundle analyze(const Inputs& in, const AnalysisConfig& config);

/// Human-readable digest of a bundle (the contents of report.txt).
std::string render_report(const Bundle& bundle);

/// "<fnv64 hex>  <name>" per file, sorted by name.
std::string manifest(const Bundle& bundle);

void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);
Bundle read_bundle(const std::filesystem::path& dir);

/// Throws DataError listing files whose digest disagrees with MANIFEST.
void verify_manifest(const Bundle& bundle);

/// The canonical bundle of a synthetic corpus: default config with the
/// given seed, default filler handling and the bundled lexicon.
Bundle reference_report(const synthgen::SynthCorpus& corpus, std::uint64_t seed,
                        std::span<const lexicon::CategoryLexicon> lexicons, int jobs = 0);

}  // namespace dyadlss::pipeline
