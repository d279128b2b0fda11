#pragma once

#include "dyadlss/corpus.hpp"
#include "dyadlss/embeddings.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dyadlss::synthgen {

/// Turn-vector process of one conversation kind.
struct KindParams {
    double rho_min = 0.5;  // each conversation draws rho uniformly from [rho_min, rho_max]
    double rho_max = 0.5;
    double kappa = 0.0;    // pull toward the centroid
    double sigma = 0.7;    // residual sd of the latent emotion score

    bool operator==(const KindParams&) const = default;
};

/// Planted-model terms a config may set: intercept, lss, sex, kind, lss:sex,
/// lss:kind, sex:kind, lss:sex:kind. Contrasts match the analysis coding:
/// sex +0.5 for speaker A ("F"), kind +0.5 for pleasant, lss standardized
/// over all participant rows.
const std::vector<std::string>& planted_terms();

struct SynthConfig {
    std::uint64_t seed = 42;
    std::size_t couples = 50;
    std::size_t turns_min = 20;
    std::size_t turns_max = 40;
    std::size_t dim = 64;
    std::array<KindParams, 2> kinds{};  // indexed by index_of(Kind)
    bool shared_centroid = false;       // one centroid for every conversation
    /// Draw one rho quantile per couple and use it for both kinds, so a
    /// couple's pleasant and conflict s-bar move together.
    bool couple_level_rho = false;
    std::map<std::string, double> coefficients;
    double sigma_b = 0.45;  // couple random-intercept sd
    /// Rescale the noise so the latent emotion score has variance close to
    /// one, which puts planted coefficients on the standardized scale.
    bool standardize_latent = true;

    bool operator==(const SynthConfig&) const = default;

    const KindParams& params(Kind k) const { return kinds[index_of(k)]; }
    KindParams& params(Kind k) { return kinds[index_of(k)]; }
};

/// Throws DataError naming the offending field for an infeasible config.
void validate(const SynthConfig& config);

/// JSON form. Top-level rho / kappa / sigma apply to both kinds unless a
/// "pleasant" or "conflict" object overrides them; to_json always writes the
/// per-kind objects.
SynthConfig config_from_json(std::string_view json);
std::string config_to_json(const SynthConfig& config);

/// Named presets: null (rho = kappa = 0), decay (rho = 0.8, kappa = 0),
/// adjacency (rho = 0.9), high-kappa, shared-centroid, planted (the fixture
/// corpus with the lss x kind interaction).
std::optional<SynthConfig> preset(std::string_view name);
const std::vector<std::string>& preset_names();

struct ConversationTruth {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    double rho = 0.0;
    std::size_t turns = 0;
    double overall = 0.0;  // realized s-bar from the stored float vectors
};

struct SynthCorpus {
    std::vector<corpus::Utterance> transcript;
    embeddings::EmbeddingSet embeddings{1, embeddings::Provenance::synthetic};
    std::vector<corpus::ParticipantRating> ratings;
    std::vector<ConversationTruth> truth;  // sorted by (couple_id, kind)
};

/// e_{i+1} = normalize(rho e_i + kappa c + noise), noise ~ N(0, I / D), with
/// c the couple-and-kind centroid (or one shared centroid). Emotion ratings
/// come from the planted linear model on each conversation's realized s-bar,
/// rounded to the 1..9 scale. Couples are generated in parallel from
/// per-couple streams, so the result depends only on the config.
SynthCorpus generate_corpus(const SynthConfig& config, int jobs = 0);

}  // namespace dyadlss::synthgen
