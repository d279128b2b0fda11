#pragma once

#include "dyadlss/corpus.hpp"
#include "dyadlss/lmm.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dyadlss::analysis {

/// One participant in one conversation.
struct Observation {
    std::string couple_id;
    Speaker speaker = Speaker::A;
    Kind kind = Kind::pleasant;
    std::optional<double> emotion;
    std::optional<double> lss;  // the conversation's overall LSS
    std::optional<std::string> sex;
    std::map<std::string, std::optional<double>> covariates;
};

/// Covariate columns an Observation may carry.
inline constexpr std::string_view kPosemo = "posemo";
inline constexpr std::string_view kNegemo = "negemo";
inline constexpr std::string_view kPosemoMatching = "posemo_matching";
inline constexpr std::string_view kNegemoMatching = "negemo_matching";
inline constexpr std::string_view kStyleMatching = "style_matching";
inline constexpr std::string_view kPairCount = "pair_count";
inline constexpr std::string_view kMaritalSatisfaction = "marital_satisfaction";

struct ModelSpec {
    std::string name;
    std::vector<std::string> covariates;
};

/// base, a (posemo + negemo), b (posemo and negemo matching), c (function-word
/// style matching), d (pair count), e (marital satisfaction), all.
std::vector<ModelSpec> standard_model_specs();

enum class Grouping { couple, couple_kind };

std::string_view to_string(Grouping g);
std::optional<Grouping> parse_grouping(std::string_view s);

struct AnalysisOptions {
    lmm::FitOptions fit;
    double alpha = 0.05;
    Grouping grouping = Grouping::couple;
};

/// Rows after listwise deletion with every continuous variable standardized
/// once over the retained sample. Contrasts: sex and kind at +-0.5
/// (pleasant = +0.5); per-kind models reuse these values without
/// re-standardizing.
struct PreparedData {
    struct Row {
        std::string couple_id;
        Speaker speaker = Speaker::A;
        Kind kind = Kind::pleasant;
        double y = 0.0;
        double lss = 0.0;
        double sex = 0.0;
        double kind_contrast = 0.0;
        std::vector<double> covariates;  // aligned with covariate_names
    };
    std::vector<Row> rows;
    std::vector<std::string> covariate_names;
    std::size_t dropped = 0;
    std::string sex_coding;
    std::vector<std::string> notes;
};

PreparedData prepare(std::span<const Observation> observations, std::span<const std::string> covariates);

/// intercept, lss, sex, kind, lss:sex, lss:kind, sex:kind, lss:sex:kind,
/// then covariates. Throws DataError naming any constant column (a
/// single-kind corpus fails on the kind contrast).
lmm::DesignMatrix full_design(const PreparedData& data, Grouping grouping);

/// Rows of one kind: intercept, lss, sex, lss:sex, then covariates.
lmm::DesignMatrix kind_design(const PreparedData& data, Kind kind);

std::vector<double> response(const PreparedData& data, std::optional<Kind> kind = std::nullopt);

struct ModelReport {
    ModelSpec spec;
    std::size_t observations = 0;
    std::size_t dropped = 0;
    std::string sex_coding;
    std::vector<std::string> notes;
    lmm::MixedModelFit full;
    double interaction_p = 1.0;
    bool simple_slopes = false;
    std::optional<lmm::MixedModelFit> pleasant;
    std::optional<lmm::MixedModelFit> conflict;
};

inline constexpr std::string_view kInteractionTerm = "lss:kind";

/// Fits the full model; when the lss:kind coefficient has p < alpha, fits
/// each kind separately and reports its lss slope.
ModelReport interaction_then_simple_slopes(std::span<const Observation> observations, const ModelSpec& spec,
                                           const AnalysisOptions& options);

}  // namespace dyadlss::analysis
