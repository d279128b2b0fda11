#include "dyadlss/synthgen.hpp"

#include "dyadlss/error.hpp"
#include "dyadlss/random.hpp"
#include "dyadlss/similarity.hpp"
#include "dyadlss/stats.hpp"

#include <json.hpp>
#include <omp.h>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>

namespace dyadlss::synthgen {
namespace {

constexpr const char* kModule = "synthgen";

// Placeholder vocabulary. Every word here is in the bundled lexicon so the
// matching stage has something to count.
constexpr std::array<std::string_view, 20> kFunctionWords{"the", "a",   "and", "i",    "you", "we",   "it",
                                                          "to",  "of",  "that", "is",  "in",  "but",  "so",
                                                          "not", "with", "my",  "your", "me",  "for"};
constexpr std::array<std::string_view, 10> kPositiveWords{"love",  "happy", "good",  "nice", "great",
                                                          "fun",   "laugh", "enjoy", "glad", "wonderful"};
constexpr std::array<std::string_view, 10> kNegativeWords{"angry", "hate", "bad", "upset", "annoyed",
                                                          "worry", "hurt", "sad", "unfair", "mad"};

constexpr double kEmotionCenter = 5.0;
constexpr double kEmotionScale = 1.8;

enum Stream : std::uint64_t { vectors = 1, text = 2, ratings = 3, centroid = 4 };

std::uint64_t couple_stream(const SynthConfig& c, Stream what, const std::string& couple, std::uint64_t kind) {
    return stream_key({c.seed, what, fnv1a64(couple), kind});
}

std::size_t uniform_index(SplitMix64& rng, std::size_t lo, std::size_t hi) {
    boost::random::uniform_int_distribution<std::size_t> d(lo, hi);
    return d(rng);
}

std::vector<double> noise(SplitMix64& rng, std::size_t dim) {
    boost::random::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    std::vector<double> v(dim);
    for (double& x : v) x = n(rng);
    return v;
}

std::vector<double> random_direction(SplitMix64& rng, std::size_t dim) {
    return embeddings::normalize(noise(rng, dim));
}

std::string couple_label(std::size_t i, std::size_t count) {
    const std::size_t width = std::max<std::size_t>(3, std::to_string(count).size());
    std::string n = std::to_string(i + 1);
    return "c" + std::string(width - n.size(), '0') + n;
}

std::string placeholder_text(SplitMix64& rng, Kind kind) {
    const std::size_t words = uniform_index(rng, 4, 14);
    const double positive_share = kind == Kind::pleasant ? 0.8 : 0.3;
    std::string out;
    for (std::size_t w = 0; w < words; ++w) {
        if (!out.empty()) out.push_back(' ');
        const double u = uniform01(rng);
        if (u < 0.45) {
            out += kFunctionWords[uniform_index(rng, 0, kFunctionWords.size() - 1)];
        } else if (u < 0.55) {
            const bool pos = uniform01(rng) < positive_share;
            const auto& pool = pos ? kPositiveWords : kNegativeWords;
            out += pool[uniform_index(rng, 0, pool.size() - 1)];
        } else {
            out += "w" + std::to_string(uniform_index(rng, 0, 999));
        }
    }
    return out;
}

struct CoupleOutput {
    std::vector<corpus::Utterance> utterances;
    std::vector<std::pair<embeddings::TurnKey, std::vector<float>>> vectors;
    std::array<ConversationTruth, 2> truth;
};

CoupleOutput generate_couple(const SynthConfig& c, const std::string& couple, const std::vector<double>* shared) {
    CoupleOutput out;
    SplitMix64 couple_rng(couple_stream(c, Stream::vectors, couple, 2));
    const double couple_quantile = uniform01(couple_rng);
    for (Kind kind : kKinds) {
        const KindParams& kp = c.params(kind);
        SplitMix64 rng(couple_stream(c, Stream::vectors, couple, index_of(kind)));
        SplitMix64 text_rng(couple_stream(c, Stream::text, couple, index_of(kind)));

        const std::size_t turns = uniform_index(rng, c.turns_min, c.turns_max);
        const double own_quantile = uniform01(rng);
        const double q = c.couple_level_rho ? couple_quantile : own_quantile;
        const double rho = kp.rho_min + (kp.rho_max - kp.rho_min) * q;
        const Speaker first = uniform01(rng) < 0.5 ? Speaker::A : Speaker::B;
        const std::vector<double> centroid = shared != nullptr ? *shared : random_direction(rng, c.dim);

        std::vector<double> e(c.dim, 0.0);
        std::vector<std::vector<float>> stored;
        for (std::size_t i = 0; i < turns; ++i) {
            std::vector<double> next = noise(rng, c.dim);
            for (std::size_t d = 0; d < c.dim; ++d) next[d] += rho * e[d] + kp.kappa * centroid[d];
            e = embeddings::normalize(next);

            std::vector<float> f(e.begin(), e.end());
            stored.push_back(f);
            const Speaker s = i % 2 == 0 ? first : partner_of(first);
            corpus::Utterance u;
            u.couple_id = couple;
            u.kind = kind;
            u.speaker = s;
            u.text = placeholder_text(text_rng, kind);
            u.t = static_cast<std::int64_t>(i + 1);
            out.utterances.push_back(std::move(u));
            out.vectors.push_back({{couple, kind, static_cast<std::uint32_t>(i)}, std::move(f)});
        }

        std::vector<double> series;
        for (std::size_t i = 0; i + 1 < stored.size(); ++i) series.push_back(similarity::cosine(stored[i], stored[i + 1]));
        out.truth[index_of(kind)] = {couple, kind, rho, turns, similarity::overall_lss(series)};
    }
    return out;
}

double term_value(const std::string& term, double lss, double sex, double kind) {
    if (term == "intercept") return 1.0;
    if (term == "lss") return lss;
    if (term == "sex") return sex;
    if (term == "kind") return kind;
    if (term == "lss:sex") return lss * sex;
    if (term == "lss:kind") return lss * kind;
    if (term == "sex:kind") return sex * kind;
    return lss * sex * kind;  // lss:sex:kind
}

int clamp_round(double v, int lo, int hi) {
    return static_cast<int>(std::clamp(std::lround(v), static_cast<long>(lo), static_cast<long>(hi)));
}

void generate_ratings(const SynthConfig& c, SynthCorpus& out) {
    // one participant row per (conversation, speaker), couples in order
    struct Row {
        const ConversationTruth* conv;
        Speaker speaker;
    };
    std::vector<Row> rows;
    std::vector<double> lss;
    for (const auto& t : out.truth) {
        for (Speaker s : kSpeakers) {
            rows.push_back({&t, s});
            lss.push_back(t.overall);
        }
    }
    std::vector<double> lss_z;
    try {
        lss_z = stats::standardize(lss);
    } catch (const DataError&) {
        throw DataError(kModule, "realized s-bar is constant across conversations; cannot plant an LSS effect");
    }

    std::vector<double> fixed(rows.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double sex = rows[i].speaker == Speaker::A ? 0.5 : -0.5;
        const double kind = rows[i].conv->kind == Kind::pleasant ? 0.5 : -0.5;
        for (const auto& [term, beta] : c.coefficients) fixed[i] += beta * term_value(term, lss_z[i], sex, kind);
    }

    double scale = 1.0;
    if (c.standardize_latent) {
        const double fixed_var = std::pow(stats::describe(fixed).sd, 2);
        const double noise_var = c.sigma_b * c.sigma_b +
                                 0.5 * (std::pow(c.params(Kind::pleasant).sigma, 2) +
                                        std::pow(c.params(Kind::conflict).sigma, 2));
        if (fixed_var >= 1.0) {
            throw DataError(kModule, "infeasible config: planted fixed effects have variance " +
                                         std::to_string(fixed_var) + " >= 1 on the standardized latent scale");
        }
        if (noise_var > 0.0) scale = std::sqrt((1.0 - fixed_var) / noise_var);
    }

    boost::random::normal_distribution<double> z(0.0, 1.0);
    std::size_t i = 0;
    for (std::size_t first = 0; first < rows.size();) {
        // rows of one couple: both kinds, both speakers
        const std::string& couple = rows[first].conv->couple_id;
        SplitMix64 rng(couple_stream(c, Stream::ratings, couple, 0));
        const double b = c.sigma_b * z(rng);
        std::array<double, 2> satisfaction{};
        for (double& m : satisfaction) m = static_cast<double>(std::lround(100.0 + 15.0 * z(rng)));
        for (i = first; i < rows.size() && rows[i].conv->couple_id == couple; ++i) {
            const Kind kind = rows[i].conv->kind;
            const double e = c.params(kind).sigma * z(rng);
            const double latent = fixed[i] + scale * (b + e);
            corpus::ParticipantRating r;
            r.couple_id = couple;
            r.speaker = rows[i].speaker;
            r.kind = kind;
            r.emotion = clamp_round(kEmotionCenter + kEmotionScale * latent, 1, 9);
            r.naturalness = clamp_round(5.0 + 1.5 * z(rng), 0, 8);
            r.sex = rows[i].speaker == Speaker::A ? "F" : "M";
            r.marital_satisfaction = satisfaction[index_of(rows[i].speaker)];
            out.ratings.push_back(std::move(r));
        }
        first = i;
    }
}

using nlohmann::json;

json kind_to_json(const KindParams& k) {
    return json{{"rho", json::array({k.rho_min, k.rho_max})}, {"kappa", k.kappa}, {"sigma", k.sigma}};
}

void read_rho(const json& j, KindParams& k) {
    if (j.is_number()) {
        k.rho_min = k.rho_max = j.get<double>();
    } else if (j.is_array() && j.size() == 2) {
        k.rho_min = j[0].get<double>();
        k.rho_max = j[1].get<double>();
    } else {
        throw DataError(kModule, "'rho' must be a number or a [min, max] pair");
    }
}

void apply_kind_fields(const json& j, KindParams& k, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) continue;
        if (key == "rho") read_rho(value, k);
        if (key == "kappa") k.kappa = value.get<double>();
        if (key == "sigma") k.sigma = value.get<double>();
    }
}

}  // namespace

const std::vector<std::string>& planted_terms() {
    static const std::vector<std::string> terms{"intercept", "lss",      "sex",      "kind",
                                                "lss:sex",   "lss:kind", "sex:kind", "lss:sex:kind"};
    return terms;
}

void validate(const SynthConfig& c) {
    const auto fail = [](const std::string& msg) { throw DataError(kModule, "infeasible config: " + msg); };
    if (c.couples < 3) fail("couples must be at least 3");
    if (c.turns_min < 3) fail("turns minimum must be at least 3");
    if (c.turns_max < c.turns_min) fail("turns maximum is below the minimum");
    if (c.dim < 2) fail("dim must be at least 2");
    for (Kind k : kKinds) {
        const KindParams& p = c.params(k);
        const std::string where = std::string(to_string(k)) + ": ";
        if (!(p.rho_min >= 0.0) || !(p.rho_max < 1.0) || p.rho_min > p.rho_max) {
            fail(where + "rho range must satisfy 0 <= min <= max < 1");
        }
        if (!(p.kappa >= 0.0) || !std::isfinite(p.kappa)) fail(where + "kappa must be finite and >= 0");
        if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma)) fail(where + "sigma must be finite and >= 0");
    }
    if (!(c.sigma_b >= 0.0) || !std::isfinite(c.sigma_b)) fail("sigma_b must be finite and >= 0");
    const auto& terms = planted_terms();
    for (const auto& [name, beta] : c.coefficients) {
        if (std::find(terms.begin(), terms.end(), name) == terms.end()) fail("unknown coefficient '" + name + "'");
        if (!std::isfinite(beta)) fail("coefficient '" + name + "' is not finite");
    }
}

SynthConfig config_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(kModule, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError(kModule, "config must be a JSON object");

    static const std::set<std::string> top{"seed",    "couples",         "turns",     "dim",
                                           "rho",     "kappa",           "sigma",     "pleasant",
                                           "conflict", "shared_centroid", "couple_level_rho", "coefficients",
                                           "sigma_b", "standardize_latent"};
    static const std::set<std::string> per_kind{"rho", "kappa", "sigma"};
    SynthConfig c;
    try {
        for (const auto& [key, _] : j.items()) {
            if (!top.contains(key)) throw DataError(kModule, "unknown config key '" + key + "'");
        }
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("couples")) c.couples = j["couples"].get<std::size_t>();
        if (j.contains("turns")) {
            const json& t = j["turns"];
            if (t.is_number()) {
                c.turns_min = c.turns_max = t.get<std::size_t>();
            } else if (t.is_array() && t.size() == 2) {
                c.turns_min = t[0].get<std::size_t>();
                c.turns_max = t[1].get<std::size_t>();
            } else {
                throw DataError(kModule, "'turns' must be a count or a [min, max] pair");
            }
        }
        if (j.contains("dim")) c.dim = j["dim"].get<std::size_t>();
        for (Kind k : kKinds) apply_kind_fields(j, c.params(k), per_kind);
        for (Kind k : kKinds) {
            const std::string name(to_string(k));
            if (!j.contains(name)) continue;
            const json& kj = j[name];
            if (!kj.is_object()) throw DataError(kModule, "'" + name + "' must be an object");
            for (const auto& [key, _] : kj.items()) {
                if (!per_kind.contains(key)) throw DataError(kModule, "unknown key '" + key + "' in '" + name + "'");
            }
            apply_kind_fields(kj, c.params(k), per_kind);
        }
        if (j.contains("shared_centroid")) c.shared_centroid = j["shared_centroid"].get<bool>();
        if (j.contains("couple_level_rho")) c.couple_level_rho = j["couple_level_rho"].get<bool>();
        if (j.contains("coefficients")) c.coefficients = j["coefficients"].get<std::map<std::string, double>>();
        if (j.contains("sigma_b")) c.sigma_b = j["sigma_b"].get<double>();
        if (j.contains("standardize_latent")) c.standardize_latent = j["standardize_latent"].get<bool>();
    } catch (const json::exception& e) {
        throw DataError(kModule, std::string("bad config value: ") + e.what());
    }
    validate(c);
    return c;
}

std::string config_to_json(const SynthConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["couples"] = c.couples;
    j["turns"] = json::array({c.turns_min, c.turns_max});
    j["dim"] = c.dim;
    for (Kind k : kKinds) j[std::string(to_string(k))] = kind_to_json(c.params(k));
    j["shared_centroid"] = c.shared_centroid;
    j["couple_level_rho"] = c.couple_level_rho;
    j["coefficients"] = c.coefficients;
    j["sigma_b"] = c.sigma_b;
    j["standardize_latent"] = c.standardize_latent;
    return j.dump(2) + "\n";
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"null", "decay", "adjacency", "high-kappa", "shared-centroid",
                                                "planted"};
    return names;
}

std::optional<SynthConfig> preset(std::string_view name) {
    SynthConfig c;
    const auto both = [&](KindParams p) { c.kinds = {p, p}; };
    if (name == "null") {
        c.couples = 250;
        both({0.0, 0.0, 0.0, 0.7});
    } else if (name == "decay") {
        c.couples = 100;
        both({0.8, 0.8, 0.0, 0.7});
    } else if (name == "adjacency") {
        c.couples = 100;
        both({0.9, 0.9, 0.0, 0.7});
    } else if (name == "high-kappa") {
        c.couples = 20;
        both({0.3, 0.3, 2.0, 0.7});
    } else if (name == "shared-centroid") {
        c.couples = 20;
        c.shared_centroid = true;
        both({0.0, 0.0, 1.0, 0.7});
    } else if (name == "planted") {
        // Pleasant conversations spread widely in s-bar and carry little
        // noise; conflict ones spread less and carry more, so the negative
        // pleasant slope is detectable while the small positive conflict
        // slope mostly is not. A couple-level rho quantile ties the two
        // kinds together, letting the couple intercept cancel out of the
        // interaction contrast.
        c.couples = 50;
        c.params(Kind::pleasant) = {0.05, 0.9, 0.3, 0.4};
        c.params(Kind::conflict) = {0.2, 0.7, 0.3, 0.9};
        c.couple_level_rho = true;
        c.sigma_b = 0.6;
        // within-kind slopes -0.30 (pleasant) and +0.19 (conflict)
        c.coefficients = {{"lss", -0.055}, {"lss:kind", -0.49}, {"kind", 0.6}};
    } else {
        return std::nullopt;
    }
    return c;
}

SynthCorpus generate_corpus(const SynthConfig& config, int jobs) {
    validate(config);
    std::optional<std::vector<double>> shared;
    if (config.shared_centroid) {
        SplitMix64 rng(stream_key({config.seed, Stream::centroid}));
        shared = random_direction(rng, config.dim);
    }

    std::vector<std::string> labels;
    for (std::size_t i = 0; i < config.couples; ++i) labels.push_back(couple_label(i, config.couples));

    std::vector<CoupleOutput> parts(labels.size());
    std::vector<std::exception_ptr> errors(labels.size());
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
    const auto n = static_cast<std::ptrdiff_t>(labels.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            parts[idx] = generate_couple(config, labels[idx], shared ? &*shared : nullptr);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    SynthCorpus out;
    out.embeddings = embeddings::EmbeddingSet(config.dim, embeddings::Provenance::synthetic,
                                              "synthgen seed " + std::to_string(config.seed));
    for (auto& part : parts) {
        for (auto& u : part.utterances) out.transcript.push_back(std::move(u));
        for (auto& [key, v] : part.vectors) out.embeddings.insert(key, std::move(v));
        for (auto& t : part.truth) out.truth.push_back(std::move(t));
    }
    generate_ratings(config, out);
    return out;
}

}  // namespace dyadlss::synthgen
