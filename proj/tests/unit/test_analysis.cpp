#include <doctest.h>

#include "dyadlss/analysis.hpp"
#include "dyadlss/error.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace dyadlss;
using namespace dyadlss::analysis;

namespace {

/// Couples x kinds x speakers with a couple intercept; emotion depends on
/// lss with slope `pleasant` / `conflict` per kind.
std::vector<Observation> simulate(oracle::Rng& rng, std::size_t couples, double pleasant, double conflict) {
    std::vector<Observation> out;
    for (std::size_t c = 0; c < couples; ++c) {
        const double b = 0.5 * rng.normal();
        const double ms = 100 + 15 * rng.normal();
        for (Kind k : kKinds) {
            const double lss = rng.uniform(0.3, 0.8);
            const double slope = k == Kind::pleasant ? pleasant : conflict;
            for (Speaker s : kSpeakers) {
                Observation o;
                o.couple_id = "c" + std::to_string(c);
                o.kind = k;
                o.speaker = s;
                o.lss = lss;
                o.emotion = 5 + slope * (lss - 0.55) / 0.15 + b + rng.normal();
                o.sex = s == Speaker::A ? "F" : "M";
                o.covariates[std::string(kMaritalSatisfaction)] = ms;
                o.covariates[std::string(kPairCount)] = static_cast<double>(10 + rng.below(40));
                out.push_back(o);
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("standard model specs") {
    const auto specs = standard_model_specs();
    REQUIRE(specs.size() == 7);
    CHECK(specs[0].name == "base");
    CHECK(specs[0].covariates.empty());
    CHECK(specs[2].covariates == std::vector<std::string>{"posemo_matching", "negemo_matching"});
    CHECK(specs[6].covariates.size() == 7);
    CHECK(parse_grouping("couple-kind") == Grouping::couple_kind);
    CHECK_FALSE(parse_grouping("kind").has_value());
}

TEST_CASE("prepare: listwise deletion, coding, standardize once") {
    oracle::Rng rng(1);
    auto obs = simulate(rng, 10, 0.0, 0.0);
    obs[3].emotion.reset();
    obs[7].covariates[std::string(kMaritalSatisfaction)].reset();
    const std::vector<std::string> cov{std::string(kMaritalSatisfaction)};
    const auto p = prepare(obs, cov);
    CHECK(p.dropped == 2);
    CHECK(p.rows.size() == 38);
    CHECK(p.sex_coding == "F=+0.5,M=-0.5");
    CHECK_FALSE(p.notes.empty());

    double sum = 0, ss = 0;
    for (const auto& r : p.rows) sum += r.lss;
    for (const auto& r : p.rows) ss += (r.lss - sum / 38) * (r.lss - sum / 38);
    CHECK(std::abs(sum) < 1e-12);
    CHECK(std::abs(ss / 37 - 1) < 1e-12);
    for (const auto& r : p.rows) {
        CHECK(r.sex == (r.speaker == Speaker::A ? 0.5 : -0.5));
        CHECK(r.kind_contrast == (r.kind == Kind::pleasant ? 0.5 : -0.5));
    }
    // per-kind subsets are not re-standardized
    const auto y = response(p, Kind::pleasant);
    std::size_t k = 0;
    for (const auto& r : p.rows)
        if (r.kind == Kind::pleasant) CHECK(y[k++] == r.y);
    CHECK(y.size() + response(p, Kind::conflict).size() == response(p).size());

    auto no_sex = obs;
    for (auto& o : no_sex) o.sex.reset();
    const auto q = prepare(no_sex, {});
    CHECK(q.sex_coding == "speaker A=+0.5,speaker B=-0.5");

    auto three = obs;
    three[0].sex = "X";
    CHECK_THROWS_AS(prepare(three, {}), DataError);
}

TEST_CASE("full design columns and single-kind refusal") {
    oracle::Rng rng(2);
    const auto obs = simulate(rng, 8, 0.0, 0.0);
    const std::vector<std::string> cov{std::string(kPairCount)};
    const auto p = prepare(obs, cov);
    const auto d = full_design(p, Grouping::couple);
    CHECK(d.columns == std::vector<std::string>{"intercept", "lss", "sex", "kind", "lss:sex", "lss:kind", "sex:kind",
                                                "lss:sex:kind", "pair_count"});
    CHECK(d.group_labels.size() == 8);
    CHECK(full_design(p, Grouping::couple_kind).group_labels.size() == 16);
    CHECK(kind_design(p, Kind::conflict).columns ==
          std::vector<std::string>{"intercept", "lss", "sex", "lss:sex", "pair_count"});

    std::vector<Observation> pleasant_only;
    for (const auto& o : obs)
        if (o.kind == Kind::pleasant) pleasant_only.push_back(o);
    try {
        interaction_then_simple_slopes(pleasant_only, standard_model_specs()[0], {});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("kind contrast is constant") != std::string::npos);
    }
}

TEST_CASE("interaction t is invariant to affine rescaling of lss and emotion") {
    oracle::Rng rng(3);
    const auto obs = simulate(rng, 30, -0.4, 0.2);
    const auto p = prepare(obs, {});
    auto q = p;
    for (auto& r : q.rows) {
        r.lss = 3.0 * r.lss + 2.0;
        r.y = -0.5 + 4.0 * r.y;
    }
    const auto a = lmm::fit_lmm(full_design(p, Grouping::couple), response(p));
    const auto b = lmm::fit_lmm(full_design(q, Grouping::couple), response(q));
    CHECK(std::abs(a.coefficient("lss:kind").t - b.coefficient("lss:kind").t) < 1e-6);
    CHECK(std::abs(a.coefficient("lss:kind").p - b.coefficient("lss:kind").p) < 1e-6);
    CHECK(std::signbit(a.coefficient("lss:kind").estimate) == std::signbit(b.coefficient("lss:kind").estimate));
}

TEST_CASE("simple slopes follow a significant interaction") {
    oracle::Rng rng(4);
    const auto obs = simulate(rng, 60, -0.8, 0.4);
    const auto rep = interaction_then_simple_slopes(obs, standard_model_specs()[5], {});
    CHECK(rep.interaction_p < 0.05);
    REQUIRE(rep.simple_slopes);
    CHECK(rep.pleasant->coefficient("lss").estimate < 0);
    CHECK(rep.conflict->coefficient("lss").estimate > 0);
    CHECK(rep.observations == 240);
}

TEST_CASE("zero interaction skips the per-kind stage about 95% of the time") {
    oracle::Rng rng(5);
    int skipped = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        const auto obs = simulate(rng, 40, 0.3, 0.3);
        skipped += !interaction_then_simple_slopes(obs, standard_model_specs()[0], {}).simple_slopes;
    }
    const double rate = static_cast<double>(skipped) / reps;
    CHECK(rate >= 0.90);
    CHECK(rate <= 0.99);
}
