#include "dyadlss/validation.hpp"

#include "dyadlss/error.hpp"
#include "dyadlss/random.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <numeric>

namespace dyadlss::validation {
namespace {

constexpr const char* kModule = "validation";

double replicate_overall(const similarity::TurnGram& gram, std::span<const Speaker> speakers, PermuteMode mode,
                         std::uint64_t key, std::vector<std::size_t>& order) {
    const std::size_t n = gram.size();
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(key);
    if (mode == PermuteMode::pooled) {
        shuffle(std::span<std::size_t>(order), rng);
    } else {
        std::vector<std::size_t> slots;
        std::vector<std::size_t> picks;
        for (Speaker who : kSpeakers) {
            slots.clear();
            for (std::size_t i = 0; i < n; ++i) {
                if (speakers[i] == who) slots.push_back(i);
            }
            picks = slots;
            shuffle(std::span<std::size_t>(picks), rng);
            for (std::size_t k = 0; k < slots.size(); ++k) order[slots[k]] = picks[k];
        }
    }
    return gram.overall(order);
}

void check_options(const PermutationOptions& options) {
    if (options.replicates < 1) throw DataError(kModule, "permutation test needs at least one replicate");
}

struct RoleStreams {
    std::string couple_id;
    std::vector<std::span<const float>> all;
    std::array<std::vector<std::span<const float>>, 2> by_role;
};

std::vector<RoleStreams> collect_streams(const corpus::Corpus& corpus, Kind kind,
                                         const embeddings::EmbeddingSet& emb) {
    std::vector<RoleStreams> out;
    for (const auto* conv : corpus.of_kind(kind)) {
        if (conv->turns.size() < 2) continue;
        RoleStreams s;
        s.couple_id = conv->couple_id;
        s.all = embeddings::conversation_vectors(*conv, emb);
        for (std::size_t i = 0; i < conv->turns.size(); ++i) {
            s.by_role[index_of(conv->turns[i].speaker)].push_back(s.all[i]);
        }
        out.push_back(std::move(s));
    }
    if (out.size() < 3) {
        throw DataError(kModule, "pseudo-dyad test needs at least three couples with usable " +
                                     std::string(to_string(kind)) + " conversations (found " +
                                     std::to_string(out.size()) + ")");
    }
    return out;
}

PseudoDyadResult pseudo_for(const std::vector<RoleStreams>& streams, std::size_t c, Kind kind,
                            const PseudoDyadOptions& options) {
    const RoleStreams& own = streams[c];
    PseudoDyadResult r;
    r.couple_id = own.couple_id;
    r.kind = kind;
    r.held = options.held;
    {
        std::vector<double> series(own.all.size() - 1);
        for (std::size_t i = 0; i + 1 < own.all.size(); ++i) series[i] = similarity::cosine(own.all[i], own.all[i + 1]);
        r.observed = similarity::overall_lss(series);
    }
    const auto& held = own.by_role[index_of(options.held)];
    for (std::size_t d = 0; d < streams.size(); ++d) {
        if (d == c) continue;
        const auto& partner_all = streams[d].by_role[index_of(partner_of(options.held))];
        std::span<const std::span<const float>> partner(partner_all);
        partner = partner.subspan(std::min(options.partner_offset, partner.size()));
        if (auto v = interleaved_overall(held, partner)) {
            r.pseudo_values.push_back(*v);
            r.partners.push_back(streams[d].couple_id);
        }
    }
    if (r.pseudo_values.size() < 2) {
        r.status = TestStatus::untestable;
        return r;
    }
    r.one_sample = stats::one_sample_t(r.pseudo_values, r.observed);
    const double n = static_cast<double>(r.pseudo_values.size());
    const double diff = r.one_sample.mean - r.observed;
    const double scale = r.one_sample.sd * std::sqrt(1.0 + 1.0 / n);
    r.prediction.df = n - 1.0;
    if (scale > 0.0) {
        r.prediction.t = diff / scale;
    } else {
        r.prediction.t = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
    }
    r.prediction.p = stats::student_t_two_sided_p(r.prediction.t, r.prediction.df);
    return r;
}

void require_some_testable(const std::vector<PseudoDyadResult>& results) {
    for (const auto& r : results) {
        if (r.status == TestStatus::ok) return;
    }
    throw DataError(kModule, "every pseudo-dyad pairing is degenerate");
}

}  // namespace

DecayCurve decay_curve(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb, std::size_t horizon) {
    if (conv.turns.size() < 2) throw DataError(kModule, "decay curve needs at least two turns");
    const auto vecs = embeddings::conversation_vectors(conv, emb);
    DecayCurve curve{conv.couple_id, conv.kind, {}};
    const std::size_t lags = std::min(horizon, vecs.size() - 1);
    curve.values.reserve(lags);
    for (std::size_t i = 1; i <= lags; ++i) curve.values.push_back(similarity::cosine(vecs[0], vecs[i]));
    return curve;
}

std::string_view to_string(PermuteMode mode) { return mode == PermuteMode::pooled ? "pooled" : "within-speaker"; }

std::optional<PermuteMode> parse_permute_mode(std::string_view s) {
    if (s == "pooled") return PermuteMode::pooled;
    if (s == "within-speaker") return PermuteMode::within_speaker;
    return std::nullopt;
}

bool at_least(double null_value, double observed) {
    return null_value >= observed - 1e-12 * std::max(1.0, std::abs(observed));
}

double permutation_p(std::size_t count_ge, std::size_t replicates, bool smoothed) {
    if (smoothed) return static_cast<double>(count_ge + 1) / static_cast<double>(replicates + 1);
    return static_cast<double>(count_ge) / static_cast<double>(replicates);
}

std::uint64_t conversation_stream(std::uint64_t seed, const std::string& couple_id, Kind kind) {
    return stream_key({seed, fnv1a64(couple_id), static_cast<std::uint64_t>(kind)});
}

std::vector<double> permutation_null(const similarity::TurnGram& gram, std::span<const Speaker> speakers,
                                     const PermutationOptions& options, std::uint64_t stream, int jobs) {
    check_options(options);
    std::vector<double> out(options.replicates);
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel num_threads(threads)
    {
        std::vector<std::size_t> order;
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(out.size()); ++r) {
            out[r] = replicate_overall(gram, speakers, options.mode,
                                       stream_key({stream, static_cast<std::uint64_t>(r)}), order);
        }
    }
    return out;
}

std::vector<double> permutation_null_serial(const similarity::TurnGram& gram, std::span<const Speaker> speakers,
                                            const PermutationOptions& options, std::uint64_t stream) {
    check_options(options);
    std::vector<double> out(options.replicates);
    std::vector<std::size_t> order;
    for (std::size_t r = 0; r < out.size(); ++r) {
        out[r] = replicate_overall(gram, speakers, options.mode, stream_key({stream, r}), order);
    }
    return out;
}

PermutationResult permute_turn_order(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb,
                                     const PermutationOptions& options, int jobs) {
    check_options(options);
    PermutationResult r;
    r.couple_id = conv.couple_id;
    r.kind = conv.kind;
    r.replicates = options.replicates;
    r.pair_count = conv.pair_count();
    if (conv.turns.size() < 3) {
        r.status = TestStatus::untestable;
        if (conv.turns.size() == 2) r.observed = similarity::overall_lss(similarity::pairwise_series(conv, emb));
        return r;
    }
    const similarity::TurnGram gram(conv, emb);
    std::vector<std::size_t> identity(conv.turns.size());
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    r.observed = gram.overall(identity);

    std::vector<Speaker> speakers;
    speakers.reserve(conv.turns.size());
    for (const auto& t : conv.turns) speakers.push_back(t.speaker);

    r.null_values = permutation_null(gram, speakers, options, conversation_stream(options.seed, conv.couple_id, conv.kind),
                                     jobs);
    for (double v : r.null_values) {
        if (at_least(v, r.observed)) ++r.count_ge;
    }
    r.p_value = permutation_p(r.count_ge, r.replicates, options.smoothed);
    return r;
}

std::optional<double> interleaved_overall(std::span<const std::span<const float>> held,
                                          std::span<const std::span<const float>> partner) {
    const std::size_t m = std::min(held.size(), partner.size());
    if (m == 0) return std::nullopt;
    std::vector<double> series;
    series.reserve(2 * m - 1);
    for (std::size_t k = 0; k < m; ++k) {
        series.push_back(similarity::cosine(held[k], partner[k]));
        if (k + 1 < m) series.push_back(similarity::cosine(partner[k], held[k + 1]));
    }
    return similarity::overall_lss(series);
}

std::vector<PseudoDyadResult> pseudo_dyads(const corpus::Corpus& corpus, Kind kind,
                                           const embeddings::EmbeddingSet& emb, const PseudoDyadOptions& options,
                                           int jobs) {
    const auto streams = collect_streams(corpus, kind, emb);
    std::vector<PseudoDyadResult> out(streams.size());
    std::vector<std::exception_ptr> errors(streams.size());
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(streams.size()); ++c) {
        try {
            out[c] = pseudo_for(streams, static_cast<std::size_t>(c), kind, options);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    require_some_testable(out);
    return out;
}

std::vector<PseudoDyadResult> pseudo_dyads_serial(const corpus::Corpus& corpus, Kind kind,
                                                  const embeddings::EmbeddingSet& emb,
                                                  const PseudoDyadOptions& options) {
    const auto streams = collect_streams(corpus, kind, emb);
    std::vector<PseudoDyadResult> out;
    out.reserve(streams.size());
    for (std::size_t c = 0; c < streams.size(); ++c) out.push_back(pseudo_for(streams, c, kind, options));
    require_some_testable(out);
    return out;
}

}  // namespace dyadlss::validation
