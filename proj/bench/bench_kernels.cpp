// Serial reference vs OpenMP kernel on the same synthetic corpus. Outputs are
// identical by construction, so only the timing differs.

#include "dyadlss/similarity.hpp"
#include "dyadlss/synthgen.hpp"
#include "dyadlss/validation.hpp"

#include <benchmark/benchmark.h>

#include <numeric>
#include <omp.h>

using namespace dyadlss;

namespace {

struct Corpus {
    synthgen::SynthCorpus synth;
    corpus::Corpus corpus;
};

const Corpus& shared_corpus() {
    static const Corpus c = [] {
        auto cfg = *synthgen::preset("planted");
        cfg.couples = 200;
        cfg.turns_min = 60;
        cfg.turns_max = 120;
        cfg.dim = 384;
        Corpus out;
        out.synth = synthgen::generate_corpus(cfg);
        out.corpus = corpus::build_corpus(out.synth.transcript);
        return out;
    }();
    return c;
}

void BM_profiles_serial(benchmark::State& state) {
    const auto& c = shared_corpus();
    for (auto _ : state) benchmark::DoNotOptimize(similarity::compute_profiles_serial(c.corpus, c.synth.embeddings));
}

void BM_profiles_parallel(benchmark::State& state) {
    const auto& c = shared_corpus();
    const int jobs = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(similarity::compute_profiles(c.corpus, c.synth.embeddings, jobs));
}

struct Gram {
    similarity::TurnGram gram;
    std::vector<Speaker> speakers;
};

const Gram& longest_conversation() {
    static const Gram g = [] {
        const auto& c = shared_corpus();
        const corpus::Conversation* best = &c.corpus.conversations.front();
        for (const auto& conv : c.corpus.conversations)
            if (conv.turns.size() > best->turns.size()) best = &conv;
        std::vector<Speaker> speakers;
        for (const auto& t : best->turns) speakers.push_back(t.speaker);
        return Gram{similarity::TurnGram(*best, c.synth.embeddings), speakers};
    }();
    return g;
}

void BM_permutation_serial(benchmark::State& state) {
    const auto& g = longest_conversation();
    validation::PermutationOptions opt;
    opt.replicates = 10000;
    for (auto _ : state) benchmark::DoNotOptimize(validation::permutation_null_serial(g.gram, g.speakers, opt, 1));
}

void BM_permutation_parallel(benchmark::State& state) {
    const auto& g = longest_conversation();
    validation::PermutationOptions opt;
    opt.replicates = 10000;
    const int jobs = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(validation::permutation_null(g.gram, g.speakers, opt, 1, jobs));
}

void BM_pseudo_serial(benchmark::State& state) {
    const auto& c = shared_corpus();
    for (auto _ : state)
        benchmark::DoNotOptimize(validation::pseudo_dyads_serial(c.corpus, Kind::pleasant, c.synth.embeddings, {}));
}

void BM_pseudo_parallel(benchmark::State& state) {
    const auto& c = shared_corpus();
    const int jobs = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(validation::pseudo_dyads(c.corpus, Kind::pleasant, c.synth.embeddings, {}, jobs));
}

void thread_counts(benchmark::internal::Benchmark* b) {
    const int max = omp_get_max_threads();
    for (int j = 1; j <= max; j *= 2) b->Arg(j);
    if ((max & (max - 1)) != 0) b->Arg(max);
}

}  // namespace

BENCHMARK(BM_profiles_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_profiles_parallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_permutation_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_permutation_parallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_pseudo_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_pseudo_parallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
