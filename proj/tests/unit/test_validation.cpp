#include <doctest.h>

#include "dyadlss/error.hpp"
#include "dyadlss/synthgen.hpp"
#include "dyadlss/validation.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace dyadlss;
using namespace dyadlss::validation;

namespace {

struct Data {
    corpus::Corpus corpus;
    embeddings::EmbeddingSet emb;
};

void add_conversation(Data& d, const std::string& couple, Kind kind, const std::vector<std::vector<float>>& vecs) {
    corpus::Conversation conv;
    conv.couple_id = couple;
    conv.kind = kind;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        conv.turns.push_back({i, i % 2 ? Speaker::B : Speaker::A, "t", 1});
        d.emb.insert({couple, kind, static_cast<std::uint32_t>(i)}, vecs[i]);
    }
    d.corpus.conversations.push_back(std::move(conv));
    std::sort(d.corpus.conversations.begin(), d.corpus.conversations.end(),
              [](const auto& a, const auto& b) { return a.key() < b.key(); });
}

Data single(const std::vector<std::vector<float>>& vecs) {
    Data d{{}, embeddings::EmbeddingSet(vecs.front().size(), embeddings::Provenance::imported_file)};
    add_conversation(d, "c1", Kind::pleasant, vecs);
    return d;
}

std::vector<std::vector<float>> random_vectors(oracle::Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<std::vector<float>> out(n, std::vector<float>(dim));
    for (auto& v : out)
        for (auto& x : v) x = static_cast<float>(rng.normal());
    return out;
}

// Turn i is e_i + e_{i+1}: neighbours share a basis direction, others none.
std::vector<std::vector<float>> planted_chain(std::size_t n) {
    std::vector<std::vector<float>> out(n, std::vector<float>(n + 1, 0.0f));
    for (std::size_t i = 0; i < n; ++i) out[i][i] = out[i][i + 1] = 1.0f;
    return out;
}

}  // namespace

TEST_CASE("decay curve examples") {
    const auto same = single({{1, 2}, {1, 2}, {1, 2}, {1, 2}});
    const auto c = decay_curve(same.corpus.conversations[0], same.emb, 10);
    REQUIRE(c.values.size() == 3);
    for (double v : c.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

    const auto perp = single({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 1}});
    for (double v : decay_curve(perp.corpus.conversations[0], perp.emb, 2).values) CHECK(v == 0.0);
    CHECK(decay_curve(perp.corpus.conversations[0], perp.emb, 2).values.size() == 2);

    const auto one = single({{1, 0}});
    CHECK_THROWS_AS(decay_curve(one.corpus.conversations[0], one.emb, 5), DataError);
}

TEST_CASE("permutation degenerate and untestable cases") {
    const auto same = single({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}});
    PermutationOptions opt;
    opt.replicates = 200;
    const auto r = permute_turn_order(same.corpus.conversations[0], same.emb, opt);
    CHECK(r.status == TestStatus::ok);
    CHECK(r.observed == doctest::Approx(1.0).epsilon(1e-15));
    for (double v : r.null_values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    REQUIRE(r.p_value);
    CHECK(*r.p_value == 1.0);

    const auto two = single({{1, 0}, {0, 1}});
    const auto u = permute_turn_order(two.corpus.conversations[0], two.emb, opt);
    CHECK(u.status == TestStatus::untestable);
    CHECK_FALSE(u.p_value.has_value());

    opt.replicates = 0;
    CHECK_THROWS_AS(permute_turn_order(same.corpus.conversations[0], same.emb, opt), DataError);
}

TEST_CASE("p-value rule") {
    CHECK(permutation_p(0, 1000, false) == 0.0);
    CHECK(permutation_p(0, 1000, true) == doctest::Approx(1.0 / 1001.0));
    CHECK(permutation_p(50, 1000, false) == 0.05);
    CHECK(at_least(1.0 - 1e-15, 1.0));
    CHECK_FALSE(at_least(1.0 - 1e-9, 1.0));
}

TEST_CASE("Monte-Carlo p tracks exhaustive enumeration on 4-turn conversations") {
    oracle::Rng rng(404);
    PermutationOptions opt;
    opt.replicates = 10000;
    for (int k = 0; k < 20; ++k) {
        const auto vecs = random_vectors(rng, 4, 6);
        const auto d = single(vecs);
        opt.seed = static_cast<std::uint64_t>(k);
        const auto r = permute_turn_order(d.corpus.conversations[0], d.emb, opt);
        CHECK(std::abs(*r.p_value - oracle::exhaustive_permutation_p(vecs)) <= 0.03);
    }
}

TEST_CASE("planted adjacency is detected") {
    const auto d = single(planted_chain(20));
    PermutationOptions opt;
    opt.replicates = 1000;
    const auto r = permute_turn_order(d.corpus.conversations[0], d.emb, opt);
    CHECK(r.observed == doctest::Approx(0.5));
    CHECK(*r.p_value < 0.001);

    opt.mode = PermuteMode::within_speaker;
    CHECK(*permute_turn_order(d.corpus.conversations[0], d.emb, opt).p_value < 0.001);
}

TEST_CASE("within-speaker shuffles keep each speaker in their own slots") {
    // A turns all share one vector and B turns another, so any within-speaker
    // shuffle reproduces the observed sequence exactly.
    std::vector<std::vector<float>> vecs;
    for (int i = 0; i < 10; ++i) vecs.push_back(i % 2 ? std::vector<float>{0.2f, 1.0f} : std::vector<float>{1.0f, 0.3f});
    const auto d = single(vecs);
    PermutationOptions opt;
    opt.replicates = 300;
    opt.mode = PermuteMode::within_speaker;
    const auto r = permute_turn_order(d.corpus.conversations[0], d.emb, opt);
    CHECK(*r.p_value == 1.0);
    opt.mode = PermuteMode::pooled;
    const auto pooled = permute_turn_order(d.corpus.conversations[0], d.emb, opt);
    CHECK(std::any_of(pooled.null_values.begin(), pooled.null_values.end(),
                      [&](double v) { return v > pooled.observed + 1e-9; }));
}

TEST_CASE("permutation null is independent of thread count and reproducible") {
    oracle::Rng rng(8);
    const auto d = single(random_vectors(rng, 25, 16));
    const similarity::TurnGram gram(d.corpus.conversations[0], d.emb);
    std::vector<Speaker> speakers;
    for (const auto& t : d.corpus.conversations[0].turns) speakers.push_back(t.speaker);
    for (auto mode : {PermuteMode::pooled, PermuteMode::within_speaker}) {
        PermutationOptions opt;
        opt.replicates = 777;
        opt.mode = mode;
        const auto serial = permutation_null_serial(gram, speakers, opt, 99);
        for (int jobs : {1, 2, 7}) CHECK(permutation_null(gram, speakers, opt, 99, jobs) == serial);
        CHECK(permutation_null_serial(gram, speakers, opt, 100) != serial);
    }
}

TEST_CASE("permutation monotonicity in planted adjacency") {
    std::vector<double> medians;
    for (double rho : {0.0, 0.4, 0.8}) {
        synthgen::SynthConfig cfg;
        cfg.couples = 30;
        cfg.dim = 32;
        cfg.seed = 17;
        for (auto& k : cfg.kinds) k = {rho, rho, 0.0, 0.7};
        const auto s = synthgen::generate_corpus(cfg, 1);
        const auto c = corpus::build_corpus(s.transcript);
        std::vector<double> ps;
        PermutationOptions opt;
        opt.replicates = 200;
        for (const auto* conv : c.of_kind(Kind::pleasant)) ps.push_back(*permute_turn_order(*conv, s.embeddings, opt).p_value);
        std::sort(ps.begin(), ps.end());
        medians.push_back(ps[ps.size() / 2]);
    }
    CHECK(medians[1] <= medians[0]);
    CHECK(medians[2] <= medians[1]);
}

TEST_CASE("pseudo dyads: hand-set 2-d vectors") {
    Data d{{}, embeddings::EmbeddingSet(2, embeddings::Provenance::imported_file)};
    add_conversation(d, "c1", Kind::pleasant, {{1, 0}, {1, 0}});
    add_conversation(d, "c2", Kind::pleasant, {{0, 1}, {0, 1}});
    add_conversation(d, "c3", Kind::pleasant, {{1, 1}, {1, -1}});
    const auto res = pseudo_dyads(d.corpus, Kind::pleasant, d.emb, {});
    REQUIRE(res.size() == 3);
    // held A of c1 against B of c2 and c3
    CHECK(res[0].observed == 1.0);
    CHECK(res[0].partners == std::vector<std::string>{"c2", "c3"});
    CHECK(res[0].pseudo_values[0] == 0.0);
    CHECK(res[0].pseudo_values[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    // c3: A = (1, 1) against (1, 0) and (0, 1)
    CHECK(res[2].observed == 0.0);
    CHECK(res[2].pseudo_values[0] == doctest::Approx(std::sqrt(0.5)));
    CHECK(res[2].pseudo_values[1] == doctest::Approx(std::sqrt(0.5)));

    const auto b = pseudo_dyads(d.corpus, Kind::pleasant, d.emb, {Speaker::B, 0});
    // held B of c1 = (1, 0), partner A of c2 = (0, 1) and of c3 = (1, 1)
    CHECK(b[0].pseudo_values[0] == 0.0);
    CHECK(b[0].pseudo_values[1] == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("pseudo dyads: interleaving and truncation") {
    const std::vector<float> a0{1, 0}, a1{0, 1}, p0{1, 1}, p1{1, 0}, p2{0, 1};
    const std::vector<std::span<const float>> held{a0, a1};
    const std::vector<std::span<const float>> partner{p0, p1, p2};
    const auto v = interleaved_overall(held, partner);
    REQUIRE(v);
    // h0 p0 h1 p1
    const double expect = (std::sqrt(0.5) + std::sqrt(0.5) + 0.0) / 3.0;
    CHECK(*v == doctest::Approx(expect).epsilon(1e-15));
    CHECK_FALSE(interleaved_overall(held, {}).has_value());
}

TEST_CASE("pseudo dyads: identical streams give t = 0") {
    Data d{{}, embeddings::EmbeddingSet(3, embeddings::Provenance::imported_file)};
    const std::vector<std::vector<float>> vecs{{1, 2, 3}, {3, 1, 0}, {0.5f, 0.5f, 2}, {1, 0, 0}};
    for (const char* c : {"c1", "c2", "c3", "c4"}) add_conversation(d, c, Kind::conflict, vecs);
    for (const auto& r : pseudo_dyads(d.corpus, Kind::conflict, d.emb, {})) {
        for (double v : r.pseudo_values) CHECK(v == r.observed);
        CHECK(r.one_sample.t == 0.0);
        CHECK(r.prediction.t == 0.0);
    }
}

TEST_CASE("pseudo dyads: errors") {
    Data d{{}, embeddings::EmbeddingSet(2, embeddings::Provenance::imported_file)};
    add_conversation(d, "c1", Kind::pleasant, {{1, 0}, {1, 0}});
    add_conversation(d, "c2", Kind::pleasant, {{0, 1}, {0, 1}});
    CHECK_THROWS_AS(pseudo_dyads(d.corpus, Kind::pleasant, d.emb, {}), DataError);
    add_conversation(d, "c3", Kind::pleasant, {{1, 1}, {1, -1}});
    // skipping every partner turn leaves nothing to pair
    CHECK_THROWS_AS(pseudo_dyads(d.corpus, Kind::pleasant, d.emb, {Speaker::A, 5}), DataError);
}

TEST_CASE("pseudo dyads: couple centroids separate real from pseudo, parallel equals serial") {
    synthgen::SynthConfig cfg = *synthgen::preset("high-kappa");
    cfg.seed = 5;
    const auto s = synthgen::generate_corpus(cfg, 1);
    const auto c = corpus::build_corpus(s.transcript);
    const auto serial = pseudo_dyads_serial(c, Kind::pleasant, s.embeddings, {});
    const auto par = pseudo_dyads(c, Kind::pleasant, s.embeddings, {}, 4);
    REQUIRE(serial.size() == par.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].pseudo_values == par[i].pseudo_values);
        CHECK(serial[i].one_sample.t == par[i].one_sample.t);
        CHECK(serial[i].pseudo_values.size() == serial.size() - 1);
        for (const auto& p : serial[i].partners) CHECK(p != serial[i].couple_id);
        for (double v : serial[i].pseudo_values) CHECK(v < serial[i].observed);
        CHECK(serial[i].one_sample.t < 0.0);
        CHECK(serial[i].one_sample.p < 0.001);
    }
}
