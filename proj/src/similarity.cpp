#include "dyadlss/similarity.hpp"

#include "dyadlss/error.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>

namespace dyadlss::similarity {
namespace {

constexpr const char* kModule = "similarity";
constexpr std::size_t kPlainSumLimit = 1024;

template <class T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
    if (u.size() != v.size()) {
        throw DataError(kModule, "cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                                     std::to_string(v.size()) + ")");
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i];
        const double b = v[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (!(nu > 0.0) || !(nv > 0.0)) throw NumericError(kModule, "cosine: zero-norm vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

void require_turns(const corpus::Conversation& conv) {
    if (conv.turns.size() < 2) {
        throw DataError(kModule, "conversation " + conv.couple_id + "/" + std::string(to_string(conv.kind)) +
                                     " has fewer than two turns");
    }
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= kPlainSumLimit) {
        double s = 0.0;
        for (double x : values) s += x;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double overall_lss(std::span<const double> series) {
    if (series.empty()) throw DataError(kModule, "overall LSS of an empty series");
    return pairwise_sum(series) / static_cast<double>(series.size());
}

std::vector<double> pairwise_series(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb) {
    require_turns(conv);
    const auto vecs = embeddings::conversation_vectors(conv, emb);
    std::vector<double> out(vecs.size() - 1);
    for (std::size_t i = 0; i + 1 < vecs.size(); ++i) out[i] = cosine(vecs[i], vecs[i + 1]);
    return out;
}

SimilarityProfile profile(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb) {
    SimilarityProfile p;
    p.couple_id = conv.couple_id;
    p.kind = conv.kind;
    p.pairwise = pairwise_series(conv, emb);
    p.overall = overall_lss(p.pairwise);
    p.pair_count = p.pairwise.size();
    p.provenance = emb.provenance();
    p.source = emb.source();
    p.low_confidence = p.pair_count == 1;
    return p;
}

std::vector<SimilarityProfile> compute_profiles(const corpus::Corpus& corpus, const embeddings::EmbeddingSet& emb,
                                                int jobs) {
    std::vector<const corpus::Conversation*> todo;
    for (const auto& c : corpus.conversations) {
        if (c.turns.size() >= 2) todo.push_back(&c);
    }
    std::vector<SimilarityProfile> out(todo.size());
    std::vector<std::exception_ptr> errors(todo.size());
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(todo.size()); ++i) {
        try {
            out[i] = profile(*todo[i], emb);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    // report the first failure in corpus order, not the first to happen
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<SimilarityProfile> compute_profiles_serial(const corpus::Corpus& corpus,
                                                       const embeddings::EmbeddingSet& emb) {
    std::vector<SimilarityProfile> out;
    for (const auto& c : corpus.conversations) {
        if (c.turns.size() >= 2) out.push_back(profile(c, emb));
    }
    return out;
}

SimilaritySummary summarize(std::span<const SimilarityProfile> profiles) {
    SimilaritySummary s;
    if (profiles.empty()) return s;
    const auto& first = profiles.front();
    s.min_pairwise = std::numeric_limits<double>::infinity();
    s.max_pairwise = -std::numeric_limits<double>::infinity();
    std::vector<double> overall;
    for (const auto& p : profiles) {
        if (p.provenance != first.provenance || p.source != first.source) {
            throw DataError(kModule, "refusing to aggregate LSS across embedding sources ('" + first.source + "' vs '" +
                                         p.source + "'); LSS is only comparable within one model");
        }
        ++s.conversations;
        s.pairs += p.pair_count;
        if (p.low_confidence) ++s.low_confidence;
        for (double v : p.pairwise) {
            s.min_pairwise = std::min(s.min_pairwise, v);
            s.max_pairwise = std::max(s.max_pairwise, v);
            if (std::abs(v) > 1.0 + 1e-6) ++s.out_of_range;
        }
        overall.push_back(p.overall);
    }
    s.mean_overall = pairwise_sum(overall) / static_cast<double>(overall.size());
    return s;
}

TurnGram::TurnGram(const corpus::Conversation& conv, const embeddings::EmbeddingSet& emb)
    : TurnGram(embeddings::conversation_vectors(conv, emb)) {}

TurnGram::TurnGram(std::span<const std::span<const float>> vectors) : n_(vectors.size()), g_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i; j < n_; ++j) {
            // cosine is evaluated in the (i, j) argument order used by the
            // adjacent series; the mirror entry copies it
            const double c = cosine(vectors[i], vectors[j]);
            g_[i * n_ + j] = c;
            g_[j * n_ + i] = c;
        }
    }
}

double TurnGram::overall(std::span<const std::size_t> order) const {
    if (order.size() < 2) throw DataError(kModule, "overall LSS needs at least two turns");
    std::vector<double> series(order.size() - 1);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) series[i] = (*this)(order[i], order[i + 1]);
    return overall_lss(series);
}

}  // namespace dyadlss::similarity
