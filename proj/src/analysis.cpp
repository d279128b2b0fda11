#include "dyadlss/analysis.hpp"

#include "dyadlss/error.hpp"
#include "dyadlss/stats.hpp"

#include <algorithm>
#include <set>

namespace dyadlss::analysis {
namespace {

constexpr const char* kModule = "analysis";

struct Term {
    std::string name;
    double (*value)(const PreparedData::Row&);
};

const std::vector<Term>& full_terms() {
    static const std::vector<Term> terms{
        {"intercept", [](const PreparedData::Row&) { return 1.0; }},
        {"lss", [](const PreparedData::Row& r) { return r.lss; }},
        {"sex", [](const PreparedData::Row& r) { return r.sex; }},
        {"kind", [](const PreparedData::Row& r) { return r.kind_contrast; }},
        {"lss:sex", [](const PreparedData::Row& r) { return r.lss * r.sex; }},
        {"lss:kind", [](const PreparedData::Row& r) { return r.lss * r.kind_contrast; }},
        {"sex:kind", [](const PreparedData::Row& r) { return r.sex * r.kind_contrast; }},
        {"lss:sex:kind", [](const PreparedData::Row& r) { return r.lss * r.sex * r.kind_contrast; }},
    };
    return terms;
}

const std::vector<Term>& kind_terms() {
    static const std::vector<Term> terms{
        {"intercept", [](const PreparedData::Row&) { return 1.0; }},
        {"lss", [](const PreparedData::Row& r) { return r.lss; }},
        {"sex", [](const PreparedData::Row& r) { return r.sex; }},
        {"lss:sex", [](const PreparedData::Row& r) { return r.lss * r.sex; }},
    };
    return terms;
}

lmm::DesignMatrix build(const PreparedData& data, const std::vector<const PreparedData::Row*>& rows,
                        const std::vector<Term>& terms, Grouping grouping) {
    lmm::DesignMatrix d;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(terms.size() + data.covariate_names.size());
    d.x.resize(n, p);
    for (const auto& t : terms) d.columns.push_back(t.name);
    for (const auto& c : data.covariate_names) d.columns.push_back(c);

    std::map<std::string, std::size_t> group_index;
    const auto label = [&](const PreparedData::Row& r) {
        return grouping == Grouping::couple ? r.couple_id : r.couple_id + "/" + std::string(to_string(r.kind));
    };
    for (const auto* r : rows) group_index.emplace(label(*r), 0);
    for (auto& [name, idx] : group_index) {
        idx = d.group_labels.size();
        d.group_labels.push_back(name);
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = *rows[static_cast<std::size_t>(i)];
        Eigen::Index j = 0;
        for (const auto& t : terms) d.x(i, j++) = t.value(r);
        for (double c : r.covariates) d.x(i, j++) = c;
        d.group.push_back(group_index.at(label(r)));
    }

    for (Eigen::Index j = 1; j < p; ++j) {
        const double first = n > 0 ? d.x(0, j) : 0.0;
        bool constant = true;
        for (Eigen::Index i = 1; i < n && constant; ++i) constant = d.x(i, j) == first;
        if (!constant) continue;
        const std::string& name = d.columns[static_cast<std::size_t>(j)];
        if (name == "kind") {
            throw DataError(kModule, "kind contrast is constant: the data hold only one conversation kind, so the "
                                     "model cannot estimate kind effects");
        }
        throw DataError(kModule, "design column '" + name + "' is constant");
    }
    return d;
}

}  // namespace

std::vector<ModelSpec> standard_model_specs() {
    const std::string pos(kPosemo), neg(kNegemo), pm(kPosemoMatching), nm(kNegemoMatching), sm(kStyleMatching),
        pc(kPairCount), ms(kMaritalSatisfaction);
    return {
        {"base", {}},
        {"a", {pos, neg}},
        {"b", {pm, nm}},
        {"c", {sm}},
        {"d", {pc}},
        {"e", {ms}},
        {"all", {pos, neg, pm, nm, sm, pc, ms}},
    };
}

std::string_view to_string(Grouping g) { return g == Grouping::couple ? "couple" : "couple-kind"; }

std::optional<Grouping> parse_grouping(std::string_view s) {
    if (s == "couple") return Grouping::couple;
    if (s == "couple-kind") return Grouping::couple_kind;
    return std::nullopt;
}

PreparedData prepare(std::span<const Observation> observations, std::span<const std::string> covariates) {
    PreparedData out;
    out.covariate_names.assign(covariates.begin(), covariates.end());

    const bool any_sex = std::any_of(observations.begin(), observations.end(),
                                     [](const Observation& o) { return o.sex.has_value(); });
    std::vector<const Observation*> kept;
    for (const auto& o : observations) {
        bool complete = o.emotion.has_value() && o.lss.has_value() && (!any_sex || o.sex.has_value());
        for (const auto& c : covariates) {
            auto it = o.covariates.find(c);
            complete = complete && it != o.covariates.end() && it->second.has_value();
        }
        if (complete) {
            kept.push_back(&o);
        } else {
            ++out.dropped;
        }
    }
    if (out.dropped > 0) {
        out.notes.push_back(std::to_string(out.dropped) + " observation(s) dropped listwise for missing values");
    }
    if (kept.size() < 3) throw DataError(kModule, "too few complete observations to fit a model");

    // sex contrast: first label in sort order = +0.5
    std::map<std::string, double> sex_code;
    if (any_sex) {
        std::set<std::string> labels;
        for (const auto* o : kept) labels.insert(*o->sex);
        if (labels.size() != 2) {
            throw DataError(kModule, "sex must take exactly two values among complete observations (found " +
                                         std::to_string(labels.size()) + ")");
        }
        sex_code[*labels.begin()] = 0.5;
        sex_code[*labels.rbegin()] = -0.5;
        out.sex_coding = *labels.begin() + "=+0.5," + *labels.rbegin() + "=-0.5";
    } else {
        out.sex_coding = "speaker A=+0.5,speaker B=-0.5";
        out.notes.push_back("no sex column in ratings; sex contrast taken from speaker role");
    }

    std::vector<double> y, lss;
    std::vector<std::vector<double>> cov(covariates.size());
    for (const auto* o : kept) {
        y.push_back(*o->emotion);
        lss.push_back(*o->lss);
        for (std::size_t c = 0; c < covariates.size(); ++c) cov[c].push_back(*o->covariates.at(covariates[c]));
    }
    const auto z = [&](const std::vector<double>& col, const std::string& name) {
        try {
            return stats::standardize(col);
        } catch (const DataError&) {
            throw DataError(kModule, "variable '" + name + "' is constant and cannot be standardized");
        }
    };
    const auto y_z = z(y, "emotion");
    const auto lss_z = z(lss, "lss");
    std::vector<std::vector<double>> cov_z;
    for (std::size_t c = 0; c < covariates.size(); ++c) cov_z.push_back(z(cov[c], covariates[c]));

    for (std::size_t i = 0; i < kept.size(); ++i) {
        const Observation& o = *kept[i];
        PreparedData::Row r;
        r.couple_id = o.couple_id;
        r.speaker = o.speaker;
        r.kind = o.kind;
        r.y = y_z[i];
        r.lss = lss_z[i];
        r.sex = any_sex ? sex_code.at(*o.sex) : (o.speaker == Speaker::A ? 0.5 : -0.5);
        r.kind_contrast = o.kind == Kind::pleasant ? 0.5 : -0.5;
        for (std::size_t c = 0; c < covariates.size(); ++c) r.covariates.push_back(cov_z[c][i]);
        out.rows.push_back(std::move(r));
    }
    return out;
}

lmm::DesignMatrix full_design(const PreparedData& data, Grouping grouping) {
    std::vector<const PreparedData::Row*> rows;
    for (const auto& r : data.rows) rows.push_back(&r);
    return build(data, rows, full_terms(), grouping);
}

lmm::DesignMatrix kind_design(const PreparedData& data, Kind kind) {
    std::vector<const PreparedData::Row*> rows;
    for (const auto& r : data.rows) {
        if (r.kind == kind) rows.push_back(&r);
    }
    return build(data, rows, kind_terms(), Grouping::couple);
}

std::vector<double> response(const PreparedData& data, std::optional<Kind> kind) {
    std::vector<double> y;
    for (const auto& r : data.rows) {
        if (!kind || r.kind == *kind) y.push_back(r.y);
    }
    return y;
}

ModelReport interaction_then_simple_slopes(std::span<const Observation> observations, const ModelSpec& spec,
                                           const AnalysisOptions& options) {
    ModelReport report;
    report.spec = spec;
    const PreparedData data = prepare(observations, spec.covariates);
    report.observations = data.rows.size();
    report.dropped = data.dropped;
    report.sex_coding = data.sex_coding;
    report.notes = data.notes;

    const auto design = full_design(data, options.grouping);
    report.full = lmm::fit_lmm(design, response(data), options.fit);
    report.interaction_p = report.full.coefficient(kInteractionTerm).p;
    if (report.interaction_p < options.alpha) {
        report.simple_slopes = true;
        report.pleasant = lmm::fit_lmm(kind_design(data, Kind::pleasant), response(data, Kind::pleasant), options.fit);
        report.conflict = lmm::fit_lmm(kind_design(data, Kind::conflict), response(data, Kind::conflict), options.fit);
    }
    return report;
}

}  // namespace dyadlss::analysis
