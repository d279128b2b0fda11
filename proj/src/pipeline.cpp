#include "dyadlss/pipeline.hpp"

#include "dyadlss/csv.hpp"
#include "dyadlss/error.hpp"
#include "dyadlss/numfmt.hpp"
#include "dyadlss/random.hpp"
#include "dyadlss/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace dyadlss::pipeline {
namespace {

constexpr const char* kModule = "pipeline";

using ojson = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string csv_preamble(const AnalysisConfig& c) {
    return "# dyadlss config=" + config_digest(c) + " seed=" + std::to_string(c.seed) + "\n";
}

ojson meta(const AnalysisConfig& c) { return ojson{{"config_digest", config_digest(c)}, {"seed", c.seed}}; }

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

// JSON has no NaN; non-finite values become null
ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

std::string kind_name(Kind k) { return std::string(to_string(k)); }

class CsvWriter {
public:
    CsvWriter(const AnalysisConfig& c, std::initializer_list<std::string_view> columns) : out_(csv_preamble(c)) {
        row(columns);
    }

    template <class... Fields>
    void add(const Fields&... fields) {
        bool first = true;
        ((append(fields, first)), ...);
        out_.push_back('\n');
    }

    std::string str() && { return std::move(out_); }

private:
    void row(std::initializer_list<std::string_view> fields) {
        bool first = true;
        for (auto f : fields) append(f, first);
        out_.push_back('\n');
    }
    void sep(bool& first) {
        if (!first) out_.push_back(',');
        first = false;
    }
    void append(std::string_view s, bool& first) {
        sep(first);
        out_ += csv::escape(s);
    }
    void append(const std::string& s, bool& first) { append(std::string_view(s), first); }
    void append(const char* s, bool& first) { append(std::string_view(s), first); }
    void append(double v, bool& first) {
        sep(first);
        out_ += format_number(v);
    }
    void append(std::size_t v, bool& first) {
        sep(first);
        out_ += std::to_string(v);
    }
    void append(int v, bool& first) {
        sep(first);
        out_ += std::to_string(v);
    }
    void append(bool v, bool& first) {
        sep(first);
        out_ += v ? "true" : "false";
    }

    std::string out_;
};

std::string bucket(std::optional<double> p) {
    if (!p) return "untestable";
    if (*p < 0.001) return "p<.001";
    if (*p < 0.01) return "p<.01";
    if (*p < 0.05) return "p<.05";
    return "ns";
}

ojson empty_buckets() { return ojson{{"p<.001", 0}, {"p<.01", 0}, {"p<.05", 0}, {"ns", 0}, {"untestable", 0}}; }

ojson ttest_json(const stats::TTestResult& t) {
    return ojson{{"t", num(t.t)},       {"df", num(t.df)},   {"p", num(t.p)},     {"mean1", num(t.mean)},
                 {"sd1", num(t.sd)},    {"n1", t.n},         {"mean2", num(t.mean2)}, {"sd2", num(t.sd2)},
                 {"n2", t.n2}};
}

void require(const Inputs& in, bool embeddings) {
    if (in.corpus == nullptr) throw DataError(kModule, "no corpus supplied");
    if (embeddings && in.embeddings == nullptr) throw DataError(kModule, "no embeddings supplied");
}

ojson fit_json(const lmm::MixedModelFit& f) {
    ojson coefs = ojson::array();
    for (const auto& c : f.coefficients) {
        coefs.push_back({{"term", c.name},
                         {"estimate", num(c.estimate)},
                         {"se", num(c.se)},
                         {"t", num(c.t)},
                         {"df", num(c.df)},
                         {"p", num(c.p)}});
    }
    ojson trace = ojson::array();
    for (const auto& tp : f.trace) trace.push_back({num(tp.log_theta), num(tp.criterion)});
    return ojson{{"method", std::string(lmm::to_string(f.method))},
                 {"dof", std::string(lmm::to_string(f.dof))},
                 {"observations", f.observations},
                 {"groups", f.groups},
                 {"sigma_b2", num(f.sigma_b2)},
                 {"sigma2", num(f.sigma2)},
                 {"theta", num(f.theta)},
                 {"loglik", num(f.loglik)},
                 {"boundary", f.boundary},
                 {"iterations", f.iterations},
                 {"coefficients", coefs},
                 {"trace", trace}};
}

void coefficient_rows(CsvWriter& w, const std::string& model, const std::string& stage, const lmm::MixedModelFit& f) {
    for (const auto& c : f.coefficients) w.add(model, stage, c.name, c.estimate, c.se, c.t, c.df, c.p);
}

const analysis::ModelSpec& find_spec(const std::vector<analysis::ModelSpec>& specs, const std::string& name) {
    for (const auto& s : specs) {
        if (s.name == name) return s;
    }
    throw DataError(kModule, "unknown model set '" + name + "' (expected base, a, b, c, d, e or all)");
}

}  // namespace

std::string canonical_config(const AnalysisConfig& c) {
    std::ostringstream out;
    out << "seed=" << c.seed << "\n"
        << "replicates=" << c.replicates << "\n"
        << "horizon=" << c.horizon << "\n"
        << "permute_mode=" << validation::to_string(c.permute_mode) << "\n"
        << "smoothed=" << (c.smoothed ? "true" : "false") << "\n"
        << "held=" << to_string(c.held) << "\n"
        << "partner_offset=" << c.partner_offset << "\n"
        << "match_input=" << (c.match_input == lexicon::MatchInput::percent ? "percent" : "raw") << "\n"
        << "method=" << lmm::to_string(c.method) << "\n"
        << "dof=" << lmm::to_string(c.dof) << "\n"
        << "grouping=" << analysis::to_string(c.grouping) << "\n"
        << "alpha=" << format_number(c.alpha) << "\n"
        << "models=";
    for (std::size_t i = 0; i < c.model_sets.size(); ++i) out << (i ? "," : "") << c.model_sets[i];
    out << "\n";
    return out.str();
}

std::string config_digest(const AnalysisConfig& c) { return hex64(fnv1a64(canonical_config(c))); }

Bundle similarity_stage(const Inputs& in, const AnalysisConfig& config,
                        std::vector<similarity::SimilarityProfile>* profiles_out) {
    require(in, true);
    const auto profiles = similarity::compute_profiles(*in.corpus, *in.embeddings, config.jobs);

    CsvWriter sim(config, {"couple_id", "kind", "turns", "pair_count", "overall", "low_confidence", "provenance",
                           "source"});
    CsvWriter pairs(config, {"couple_id", "kind", "pair", "from_speaker", "value"});
    for (const auto& p : profiles) {
        const auto* conv = in.corpus->find({p.couple_id, p.kind});
        sim.add(p.couple_id, kind_name(p.kind), conv->turns.size(), p.pair_count, p.overall, p.low_confidence,
                std::string(embeddings::to_string(p.provenance)), p.source);
        for (std::size_t i = 0; i < p.pairwise.size(); ++i) {
            pairs.add(p.couple_id, kind_name(p.kind), i, std::string(to_string(conv->turns[i].speaker)),
                      p.pairwise[i]);
        }
    }
    Bundle b;
    b["similarity.csv"] = std::move(sim).str();
    b["pairwise.csv"] = std::move(pairs).str();
    if (profiles_out != nullptr) *profiles_out = profiles;
    return b;
}

Bundle validation_stage(const Inputs& in, const AnalysisConfig& config) {
    require(in, true);
    ojson report{{"meta", meta(config)}};
    std::vector<std::string> skipped;

    // temporal decay
    CsvWriter decay(config, {"couple_id", "kind", "lag", "value"});
    ojson decay_json;
    for (Kind k : kKinds) {
        std::vector<std::vector<double>> by_lag(config.horizon);
        std::size_t n = 0;
        for (const auto* conv : in.corpus->of_kind(k)) {
            if (conv->turns.size() < 2) continue;
            const auto curve = validation::decay_curve(*conv, *in.embeddings, config.horizon);
            ++n;
            for (std::size_t i = 0; i < curve.values.size(); ++i) {
                decay.add(conv->couple_id, kind_name(k), i + 1, curve.values[i]);
                by_lag[i].push_back(curve.values[i]);
            }
        }
        ojson mean = ojson::array(), counts = ojson::array();
        for (const auto& lag : by_lag) {
            if (lag.empty()) break;
            mean.push_back(num(stats::describe(lag).mean));
            counts.push_back(lag.size());
        }
        decay_json[kind_name(k)] = {{"conversations", n}, {"mean_curve", mean}, {"conversations_per_lag", counts}};
    }
    report["decay"] = {{"horizon", config.horizon}, {"kinds", decay_json}};

    // turn-order permutation
    validation::PermutationOptions popt;
    popt.replicates = config.replicates;
    popt.seed = config.seed;
    popt.mode = config.permute_mode;
    popt.smoothed = config.smoothed;
    CsvWriter perm(config, {"couple_id", "kind", "status", "pair_count", "observed", "replicates", "count_ge", "p"});
    CsvWriter perm_null(config, {"couple_id", "kind", "replicate", "value"});
    ojson perm_json{{"replicates", config.replicates},
                    {"mode", std::string(validation::to_string(config.permute_mode))},
                    {"smoothed", config.smoothed}};
    ojson perm_kinds;
    for (Kind k : kKinds) {
        ojson buckets = empty_buckets();
        std::vector<double> sig_pairs, ns_pairs;
        for (const auto* conv : in.corpus->of_kind(k)) {
            if (!conv->usable()) continue;
            const auto r = validation::permute_turn_order(*conv, *in.embeddings, popt, config.jobs);
            const bool ok = r.status == validation::TestStatus::ok;
            perm.add(r.couple_id, kind_name(k), std::string(ok ? "ok" : "untestable"), r.pair_count, r.observed,
                     r.replicates, r.count_ge, r.p_value ? *r.p_value : NAN);
            for (std::size_t i = 0; i < r.null_values.size(); ++i) {
                perm_null.add(r.couple_id, kind_name(k), i, r.null_values[i]);
            }
            buckets[bucket(r.p_value)] = buckets[bucket(r.p_value)].get<int>() + 1;
            if (r.p_value) (*r.p_value < 0.05 ? sig_pairs : ns_pairs).push_back(static_cast<double>(r.pair_count));
        }
        ojson welch = nullptr;
        if (sig_pairs.size() >= 2 && ns_pairs.size() >= 2) welch = ttest_json(stats::welch_t(sig_pairs, ns_pairs));
        perm_kinds[kind_name(k)] = {{"buckets", buckets}, {"pair_count_significant_vs_ns", welch}};
    }
    perm_json["kinds"] = perm_kinds;
    report["permutation"] = perm_json;

    // cross-couple pseudo dyads
    validation::PseudoDyadOptions dopt{config.held, config.partner_offset};
    CsvWriter pseudo(config, {"couple_id", "kind", "held", "partner", "value"});
    CsvWriter tests(config, {"couple_id", "kind", "held", "status", "observed", "pseudo_mean", "pseudo_sd", "n", "t",
                             "df", "p", "prediction_t", "prediction_df", "prediction_p"});
    ojson pseudo_json{{"held", std::string(to_string(config.held))}, {"partner_offset", config.partner_offset}};
    ojson pseudo_kinds;
    for (Kind k : kKinds) {
        if (in.corpus->of_kind(k).empty()) {
            skipped.push_back("pseudo-dyad test: no " + kind_name(k) + " conversations");
            continue;
        }
        const auto results = validation::pseudo_dyads(*in.corpus, k, *in.embeddings, dopt, config.jobs);
        ojson literal = empty_buckets(), prediction = empty_buckets();
        std::size_t above = 0, testable = 0;
        for (const auto& r : results) {
            const bool ok = r.status == validation::TestStatus::ok;
            for (std::size_t i = 0; i < r.pseudo_values.size(); ++i) {
                pseudo.add(r.couple_id, kind_name(k), std::string(to_string(r.held)), r.partners[i],
                           r.pseudo_values[i]);
            }
            tests.add(r.couple_id, kind_name(k), std::string(to_string(r.held)), std::string(ok ? "ok" : "untestable"),
                      r.observed, r.one_sample.mean, r.one_sample.sd, r.one_sample.n, r.one_sample.t,
                      r.one_sample.df, r.one_sample.p, r.prediction.t, r.prediction.df, r.prediction.p);
            const std::string lb = ok ? bucket(r.one_sample.p) : "untestable";
            const std::string pb = ok ? bucket(r.prediction.p) : "untestable";
            literal[lb] = literal[lb].get<int>() + 1;
            prediction[pb] = prediction[pb].get<int>() + 1;
            if (ok) {
                ++testable;
                if (r.observed > r.one_sample.mean) ++above;
            }
        }
        pseudo_kinds[kind_name(k)] = {{"couples", results.size()},
                                      {"testable", testable},
                                      {"observed_above_pseudo_mean", above},
                                      {"one_sample_buckets", literal},
                                      {"prediction_buckets", prediction}};
    }
    pseudo_json["kinds"] = pseudo_kinds;
    report["pseudo_dyads"] = pseudo_json;
    report["skipped"] = skipped;

    Bundle b;
    b["validation.json"] = dump(report);
    b["decay.csv"] = std::move(decay).str();
    b["permutation.csv"] = std::move(perm).str();
    b["permutation_null.csv"] = std::move(perm_null).str();
    b["pseudo_dyads.csv"] = std::move(pseudo).str();
    b["pseudo_tests.csv"] = std::move(tests).str();
    return b;
}

Bundle matching_stage(const Inputs& in, const AnalysisConfig& config,
                      std::vector<lexicon::ConversationMatch>* matches_out) {
    require(in, false);
    if (in.lexicons.empty()) throw DataError(kModule, "no lexicon categories loaded");
    CsvWriter counts(config, {"couple_id", "kind", "speaker", "words", "low_word_count", "category", "count",
                              "percent"});
    CsvWriter sync(config, {"couple_id", "kind", "category", "value"});
    std::vector<lexicon::ConversationMatch> matches;
    for (const auto& conv : in.corpus->conversations) {
        if (!conv.usable()) continue;
        auto m = lexicon::match_conversation(conv, in.lexicons, config.match_input);
        for (const auto& sc : m.speakers) {
            for (const auto& [cat, n] : sc.counts.counts) {
                counts.add(sc.couple_id, kind_name(sc.kind), std::string(to_string(sc.speaker)), sc.counts.total_words,
                           sc.low_word_count, cat, n, 100.0 * sc.counts.proportions.at(cat));
            }
        }
        for (const auto& s : m.synchrony) sync.add(s.couple_id, kind_name(s.kind), s.category, s.value);
        matches.push_back(std::move(m));
    }
    Bundle b;
    b["counts.csv"] = std::move(counts).str();
    b["synchrony.csv"] = std::move(sync).str();
    if (matches_out != nullptr) *matches_out = std::move(matches);
    return b;
}

std::vector<analysis::Observation> observations(const corpus::Corpus& corpus,
                                                std::span<const similarity::SimilarityProfile> profiles,
                                                std::span<const lexicon::ConversationMatch> matches,
                                                std::span<const corpus::ParticipantRating> ratings) {
    std::map<ConversationKey, const similarity::SimilarityProfile*> by_conv;
    for (const auto& p : profiles) by_conv[{p.couple_id, p.kind}] = &p;
    std::map<ConversationKey, const lexicon::ConversationMatch*> match_by_conv;
    for (const auto& m : matches) match_by_conv[{m.speakers[0].couple_id, m.speakers[0].kind}] = &m;

    std::vector<analysis::Observation> out;
    for (const auto& r : ratings) {
        analysis::Observation o;
        o.couple_id = r.couple_id;
        o.speaker = r.speaker;
        o.kind = r.kind;
        if (r.emotion) o.emotion = *r.emotion;
        o.sex = r.sex;
        const ConversationKey key{r.couple_id, r.kind};
        auto& cov = o.covariates;
        for (auto name : {analysis::kPosemo, analysis::kNegemo, analysis::kPosemoMatching, analysis::kNegemoMatching,
                          analysis::kStyleMatching, analysis::kPairCount}) {
            cov[std::string(name)] = std::nullopt;
        }
        cov[std::string(analysis::kMaritalSatisfaction)] = r.marital_satisfaction;
        if (auto it = by_conv.find(key); it != by_conv.end()) {
            o.lss = it->second->overall;
            cov[std::string(analysis::kPairCount)] = static_cast<double>(it->second->pair_count);
        }
        if (auto it = match_by_conv.find(key); it != match_by_conv.end()) {
            const auto& props = it->second->speakers[index_of(r.speaker)].counts.proportions;
            if (auto p = props.find("posemo"); p != props.end()) cov[std::string(analysis::kPosemo)] = 100.0 * p->second;
            if (auto p = props.find("negemo"); p != props.end()) cov[std::string(analysis::kNegemo)] = 100.0 * p->second;
            for (const auto& s : it->second->synchrony) {
                if (s.category == "posemo") cov[std::string(analysis::kPosemoMatching)] = s.value;
                if (s.category == "negemo") cov[std::string(analysis::kNegemoMatching)] = s.value;
                if (s.category == "function") cov[std::string(analysis::kStyleMatching)] = s.value;
            }
        }
        out.push_back(std::move(o));
    }
    (void)corpus;
    return out;
}

Bundle analyze(const Inputs& in, const AnalysisConfig& config) {
    require(in, true);
    std::vector<similarity::SimilarityProfile> profiles;
    std::vector<lexicon::ConversationMatch> matches;
    Bundle b = similarity_stage(in, config, &profiles);
    b.merge(validation_stage(in, config));
    b.merge(matching_stage(in, config, &matches));

    std::vector<std::string> warnings;
    for (const auto& m : matches) {
        for (const auto& sc : m.speakers) {
            if (sc.low_word_count) {
                warnings.push_back("speaker " + std::string(to_string(sc.speaker)) + " of (" + sc.couple_id + ", " +
                                   kind_name(sc.kind) + ") has " + std::to_string(sc.counts.total_words) +
                                   " words; dictionary counts are unreliable below " +
                                   std::to_string(lexicon::kReliableWordFloor));
            }
        }
    }

    const auto& corpus = *in.corpus;
    std::size_t dropped = 0, unusable = 0;
    for (const auto& c : corpus.conversations) {
        dropped += c.dropped_filler_turns;
        if (!c.usable()) ++unusable;
    }
    std::set<std::string> couples;
    for (const auto& c : corpus.conversations) couples.insert(c.couple_id);

    ojson summary{{"meta", meta(config)},
                  {"corpus",
                   {{"couples", couples.size()},
                    {"conversations", corpus.conversations.size()},
                    {"unusable_conversations", unusable},
                    {"turns", corpus.turn_count()},
                    {"dropped_filler_turns", dropped}}}};
    const auto sim = similarity::summarize(profiles);
    summary["similarity"] = {{"conversations", sim.conversations},
                             {"pairs", sim.pairs},
                             {"mean_overall", num(sim.mean_overall)},
                             {"min_pairwise", num(sim.min_pairwise)},
                             {"max_pairwise", num(sim.max_pairwise)},
                             {"out_of_range", sim.out_of_range},
                             {"low_confidence", sim.low_confidence},
                             {"provenance", profiles.empty() ? std::string()
                                                             : std::string(embeddings::to_string(profiles[0].provenance))}};

    ojson models = ojson::array();
    if (in.ratings == nullptr) {
        warnings.push_back("no ratings supplied; model stage skipped (similarity-only mode)");
    } else {
        const auto obs = observations(corpus, profiles, matches, *in.ratings);

        CsvWriter scatter(config, {"couple_id", "kind", "speaker", "lss", "emotion"});
        for (const auto& o : obs) {
            if (o.lss && o.emotion) {
                scatter.add(o.couple_id, kind_name(o.kind), std::string(to_string(o.speaker)), *o.lss, *o.emotion);
            }
        }
        b["scatter.csv"] = std::move(scatter).str();

        // manipulation checks on the raw rating scales
        ojson manip{{"meta", meta(config)}};
        ojson natural;
        for (Kind k : kKinds) {
            std::vector<double> v;
            for (const auto& r : *in.ratings) {
                if (r.kind == k && r.naturalness) v.push_back(*r.naturalness);
            }
            natural[kind_name(k)] = v.size() >= 2 ? ttest_json(stats::one_sample_t(v, 4.0)) : ojson(nullptr);
        }
        manip["naturalness_vs_midpoint_4"] = natural;
        {
            lmm::DesignMatrix d;
            std::vector<double> y;
            std::vector<std::array<double, 2>> rows;
            std::map<std::string, std::size_t> groups;
            std::vector<std::string> row_group;
            for (const auto& r : *in.ratings) {
                if (!r.emotion) continue;
                y.push_back(*r.emotion);
                rows.push_back({1.0, r.kind == Kind::pleasant ? 0.5 : -0.5});
                row_group.push_back(r.couple_id);
                groups.emplace(r.couple_id, 0);
            }
            for (auto& [name, idx] : groups) {
                idx = d.group_labels.size();
                d.group_labels.push_back(name);
            }
            d.columns = {"intercept", "kind"};
            d.x.resize(static_cast<Eigen::Index>(rows.size()), 2);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                d.x(static_cast<Eigen::Index>(i), 0) = rows[i][0];
                d.x(static_cast<Eigen::Index>(i), 1) = rows[i][1];
                d.group.push_back(groups.at(row_group[i]));
            }
            lmm::FitOptions fo;
            fo.method = config.method;
            fo.dof = config.dof;
            try {
                manip["emotion_by_kind"] = fit_json(lmm::fit_lmm(d, y, fo));
            } catch (const DataError& e) {
                manip["emotion_by_kind"] = nullptr;
                warnings.push_back(std::string("emotion-by-kind check skipped: ") + e.what());
            }
        }
        b["manipulation.json"] = dump(manip);

        analysis::AnalysisOptions aopt;
        aopt.fit.method = config.method;
        aopt.fit.dof = config.dof;
        aopt.alpha = config.alpha;
        aopt.grouping = config.grouping;
        const auto specs = analysis::standard_model_specs();
        for (const auto& name : config.model_sets) {
            const auto& spec = find_spec(specs, name);
            for (const auto& cov : spec.covariates) {
                const bool any = std::any_of(obs.begin(), obs.end(), [&](const analysis::Observation& o) {
                    auto it = o.covariates.find(cov);
                    return it != o.covariates.end() && it->second.has_value();
                });
                if (!any) {
                    throw DataError(kModule, "model set '" + name + "' needs covariate '" + cov +
                                                 "', which no observation carries");
                }
            }
            const auto report = analysis::interaction_then_simple_slopes(obs, spec, aopt);

            ojson mj{{"meta", meta(config)},
                     {"model", spec.name},
                     {"covariates", spec.covariates},
                     {"grouping", std::string(analysis::to_string(config.grouping))},
                     {"observations", report.observations},
                     {"dropped", report.dropped},
                     {"sex_coding", report.sex_coding},
                     {"notes", report.notes},
                     {"full", fit_json(report.full)},
                     {"interaction",
                      {{"term", std::string(analysis::kInteractionTerm)},
                       {"p", num(report.interaction_p)},
                       {"alpha", config.alpha},
                       {"significant", report.simple_slopes}}}};
            CsvWriter coefs(config, {"model", "stage", "term", "estimate", "se", "t", "df", "p"});
            coefficient_rows(coefs, spec.name, "full", report.full);
            ojson slopes = nullptr;
            if (report.simple_slopes) {
                slopes = {{"pleasant", fit_json(*report.pleasant)}, {"conflict", fit_json(*report.conflict)}};
                coefficient_rows(coefs, spec.name, "pleasant", *report.pleasant);
                coefficient_rows(coefs, spec.name, "conflict", *report.conflict);
            }
            mj["simple_slopes"] = slopes;
            b["model_" + spec.name + ".json"] = dump(mj);
            b["model_" + spec.name + "_coefficients.csv"] = std::move(coefs).str();

            const auto& inter = report.full.coefficient(analysis::kInteractionTerm);
            ojson entry{{"model", spec.name},
                        {"observations", report.observations},
                        {"interaction_estimate", num(inter.estimate)},
                        {"interaction_p", num(inter.p)},
                        {"simple_slopes", report.simple_slopes}};
            if (report.simple_slopes) {
                const auto& ps = report.pleasant->coefficient("lss");
                const auto& cs = report.conflict->coefficient("lss");
                entry["pleasant_slope"] = {{"estimate", num(ps.estimate)}, {"p", num(ps.p)}};
                entry["conflict_slope"] = {{"estimate", num(cs.estimate)}, {"p", num(cs.p)}};
            }
            models.push_back(entry);
        }
    }
    summary["models"] = models;
    summary["warnings"] = warnings;
    b["summary.json"] = dump(summary);
    b["report.txt"] = render_report(b);
    b["MANIFEST"] = manifest(b);
    return b;
}

std::string render_report(const Bundle& bundle) {
    const auto it = bundle.find("summary.json");
    if (it == bundle.end()) throw DataError(kModule, "bundle has no summary.json");
    const auto summary = ojson::parse(it->second);
    std::ostringstream out;
    // full precision lives in the JSON and CSV files
    const auto fmt = [](const ojson& v) {
        if (!v.is_number()) return std::string("NA");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v.get<double>());
        return std::string(buf);
    };
    const auto p3 = [](const ojson& v) {
        if (!v.is_number()) return std::string("NA");
        const double p = v.get<double>();
        if (p < 0.001) return std::string("<.001");
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.3f", p);
        return std::string(buf);
    };

    out << "dyadlss report (config " << summary["meta"]["config_digest"].get<std::string>() << ", seed "
        << summary["meta"]["seed"].get<std::uint64_t>() << ")\n\n";
    const auto& c = summary["corpus"];
    out << "Corpus: " << c["couples"] << " couples, " << c["conversations"] << " conversations, " << c["turns"]
        << " turns, " << c["dropped_filler_turns"] << " filler turns dropped\n";
    const auto& s = summary["similarity"];
    out << "Mean overall LSS: " << fmt(s["mean_overall"]) << " over " << s["conversations"] << " conversations\n";

    if (auto v = bundle.find("validation.json"); v != bundle.end()) {
        const auto val = ojson::parse(v->second);
        out << "\nTurn-order permutation (" << val["permutation"]["replicates"] << " replicates)\n";
        for (const auto& [kind, k] : val["permutation"]["kinds"].items()) {
            const auto& bk = k["buckets"];
            out << "  " << kind << ": p<.001 " << bk["p<.001"] << ", p<.01 " << bk["p<.01"] << ", p<.05 "
                << bk["p<.05"] << ", ns " << bk["ns"] << ", untestable " << bk["untestable"] << "\n";
        }
        out << "Pseudo dyads (held speaker " << val["pseudo_dyads"]["held"].get<std::string>() << ")\n";
        for (const auto& [kind, k] : val["pseudo_dyads"]["kinds"].items()) {
            out << "  " << kind << ": observed above pseudo mean in " << k["observed_above_pseudo_mean"] << " of "
                << k["testable"] << "; one-sample p<.001 in " << k["one_sample_buckets"]["p<.001"] << "\n";
        }
    }

    if (!summary["models"].empty()) {
        out << "\nModels (lss x kind interaction, then simple slopes when p < alpha)\n";
        for (const auto& m : summary["models"]) {
            out << "  " << m["model"].get<std::string>() << ": b = " << fmt(m["interaction_estimate"])
                << ", p = " << p3(m["interaction_p"]) << "\n";
            if (m["simple_slopes"].get<bool>()) {
                out << "    pleasant slope b = " << fmt(m["pleasant_slope"]["estimate"])
                    << ", p = " << p3(m["pleasant_slope"]["p"]) << "\n";
                out << "    conflict slope b = " << fmt(m["conflict_slope"]["estimate"])
                    << ", p = " << p3(m["conflict_slope"]["p"]) << "\n";
            }
        }
    }
    if (!summary["warnings"].empty()) {
        out << "\nWarnings\n";
        for (const auto& w : summary["warnings"]) out << "  " << w.get<std::string>() << "\n";
    }
    return out.str();
}

std::string manifest(const Bundle& bundle) {
    std::string out;
    for (const auto& [name, contents] : bundle) {
        if (name == "MANIFEST") continue;
        out += hex64(fnv1a64(contents)) + "  " + name + "\n";
    }
    return out;
}

void write_bundle(const std::filesystem::path& dir, const Bundle& bundle) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, contents] : bundle) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw DataError(kModule, "cannot write " + (dir / name).string());
        f << contents;
    }
}

Bundle read_bundle(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError(kModule, "not a directory: " + dir.string());
    Bundle b;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream f(entry.path(), std::ios::binary);
        b[entry.path().filename().string()] = {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    }
    return b;
}

void verify_manifest(const Bundle& bundle) {
    const auto it = bundle.find("MANIFEST");
    if (it == bundle.end()) throw DataError(kModule, "bundle has no MANIFEST");
    std::istringstream in(it->second);
    std::string line, problems;
    while (std::getline(in, line)) {
        if (line.size() < 19) continue;
        const std::string digest = line.substr(0, 16);
        const std::string name = line.substr(18);
        const auto f = bundle.find(name);
        if (f == bundle.end()) {
            problems += " " + name + " (missing)";
        } else if (hex64(fnv1a64(f->second)) != digest) {
            problems += " " + name + " (digest mismatch)";
        }
    }
    if (!problems.empty()) throw DataError(kModule, "bundle does not match MANIFEST:" + problems);
}

Bundle reference_report(const synthgen::SynthCorpus& synth, std::uint64_t seed,
                        std::span<const lexicon::CategoryLexicon> lexicons, int jobs) {
    const auto corpus = corpus::build_corpus(synth.transcript);
    AnalysisConfig config;
    config.seed = seed;
    config.jobs = jobs;
    Inputs in;
    in.corpus = &corpus;
    in.embeddings = &synth.embeddings;
    in.ratings = &synth.ratings;
    in.lexicons = lexicons;
    return analyze(in, config);
}

}  // namespace dyadlss::pipeline
