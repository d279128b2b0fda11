#include <doctest.h>

#include "dyadlss/corpus.hpp"
#include "dyadlss/error.hpp"
#include "dyadlss/text.hpp"
#include "oracles.hpp"

#include <fstream>
#include <sstream>

using namespace dyadlss;
using corpus::Utterance;

namespace {

std::vector<Utterance> records(std::initializer_list<std::pair<Speaker, const char*>> items) {
    std::vector<Utterance> out;
    for (const auto& [s, t] : items) out.push_back({"c1", Kind::pleasant, s, t, std::nullopt, 0});
    return out;
}

bool alternates(const corpus::Conversation& c) {
    for (std::size_t i = 1; i < c.turns.size(); ++i) {
        if (c.turns[i].speaker == c.turns[i - 1].speaker) return false;
        if (c.turns[i].index != i) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("parse_transcript jsonl") {
    std::istringstream one(R"({"couple_id":"c1","kind":"pleasant","speaker":"A","text":"hi"})" "\n");
    const auto recs = corpus::parse_transcript(one, corpus::TranscriptFormat::jsonl);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].speaker == Speaker::A);
    CHECK(recs[0].text == "hi");

    std::istringstream empty("");
    CHECK(corpus::parse_transcript(empty, corpus::TranscriptFormat::jsonl).empty());
}

TEST_CASE("parse_transcript names the bad line") {
    std::istringstream in(R"({"couple_id":"c1","kind":"pleasant","speaker":"A","text":"hi"})" "\n"
                          R"({"couple_id":"c1","kind":"pleasant","speaker":"B"})" "\n");
    try {
        corpus::parse_transcript(in, corpus::TranscriptFormat::jsonl);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("text") != std::string::npos);
    }
    std::istringstream speaker(R"({"couple_id":"c1","kind":"pleasant","speaker":"C","text":"x"})" "\n");
    CHECK_THROWS_AS(corpus::parse_transcript(speaker, corpus::TranscriptFormat::jsonl), ParseError);
    std::istringstream kind(R"({"couple_id":"c1","kind":"neutral","speaker":"A","text":"x"})" "\n");
    CHECK_THROWS_AS(corpus::parse_transcript(kind, corpus::TranscriptFormat::jsonl), ParseError);
    std::istringstream utf("{\"couple_id\":\"c1\",\"kind\":\"pleasant\",\"speaker\":\"A\",\"text\":\"\xFF\"}\n");
    CHECK_THROWS_AS(corpus::parse_transcript(utf, corpus::TranscriptFormat::jsonl), ParseError);
}

TEST_CASE("transcript round trip in both formats") {
    auto recs = records({{Speaker::A, "hello, there"}, {Speaker::B, "say \"hi\""}, {Speaker::A, "line\nbreak"}});
    recs[1].t = 7;
    for (auto fmt : {corpus::TranscriptFormat::jsonl, corpus::TranscriptFormat::csv}) {
        std::ostringstream out;
        corpus::write_transcript(out, recs, fmt);
        std::istringstream in(out.str());
        CHECK(corpus::parse_transcript(in, fmt) == recs);
    }
}

TEST_CASE("merge_turns examples") {
    auto c = corpus::merge_turns(records({{Speaker::A, "x"}, {Speaker::A, "y"}, {Speaker::B, "z"}}));
    REQUIRE(c.turns.size() == 2);
    CHECK(c.turns[0].text == "x y");
    CHECK(c.turns[0].speaker == Speaker::A);
    CHECK(c.turns[1].text == "z");

    CHECK(corpus::merge_turns(records({{Speaker::A, "a"}, {Speaker::B, "b"}, {Speaker::A, "c"}})).turns.size() == 3);
    CHECK(corpus::merge_turns(records({{Speaker::B, "a"}, {Speaker::B, "b"}, {Speaker::B, "c"}})).turns.size() == 1);
    CHECK_THROWS_AS(corpus::merge_turns(records({{Speaker::A, "   "}})), DataError);
}

TEST_CASE("filler turns") {
    const corpus::FillerLexicon um_mhm{"um", "mhm"};
    CHECK(corpus::is_filler_turn("Mhm.", um_mhm));
    CHECK_FALSE(corpus::is_filler_turn("Mhm, I agree", um_mhm));
    CHECK(corpus::default_fillers() == corpus::FillerLexicon{"hmm", "mhm", "mm", "uh", "um"});

    auto conv = corpus::merge_turns(records({{Speaker::A, "hi"}, {Speaker::B, "um"}, {Speaker::A, "bye"}}));
    auto dropped = corpus::drop_filler_turns(conv, um_mhm);
    REQUIRE(dropped.turns.size() == 1);
    CHECK(dropped.turns[0].text == "hi bye");
    CHECK(dropped.dropped_filler_turns == 1);

    auto kept = corpus::drop_filler_turns(conv, um_mhm, false);
    CHECK(kept.turns.size() == 2);

    auto all = corpus::drop_filler_turns(corpus::merge_turns(records({{Speaker::A, "um"}, {Speaker::B, "Mhm."}})),
                                         um_mhm);
    CHECK_FALSE(all.usable());
}

TEST_CASE("stop words survive") {
    auto conv = corpus::merge_turns(records({{Speaker::A, "the and of"}, {Speaker::B, "um"}}));
    auto d = corpus::drop_filler_turns(conv, corpus::default_fillers());
    REQUIRE(d.turns.size() == 1);
    CHECK(d.turns[0].text == "the and of");
}

TEST_CASE("property: alternation and token conservation over random speaker sequences") {
    oracle::Rng rng(2024);
    const char* words[] = {"um", "mhm", "hello", "Mhm.", "we", "should", "uh", "go"};
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<Utterance> recs;
        const std::size_t n = 1 + rng.below(12);
        std::size_t source_tokens = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::string text;
            const std::size_t w = 1 + rng.below(3);
            for (std::size_t k = 0; k < w; ++k) text += std::string(k ? " " : "") + words[rng.below(8)];
            source_tokens += text::count_tokens(text);
            recs.push_back({"c", Kind::conflict, rng.below(2) ? Speaker::A : Speaker::B, text, std::nullopt, 0});
        }
        const auto merged = corpus::merge_turns(recs);
        REQUIRE(alternates(merged));
        std::size_t merged_tokens = 0;
        for (const auto& t : merged.turns) {
            CHECK(t.tokens == text::count_tokens(t.text));
            merged_tokens += t.tokens;
        }
        CHECK(merged_tokens == source_tokens);

        const auto dropped = corpus::drop_filler_turns(merged, corpus::default_fillers());
        CHECK(alternates(dropped));
        for (const auto& t : dropped.turns) CHECK_FALSE(corpus::is_filler_turn(t.text, corpus::default_fillers()));
    }
}

TEST_CASE("build_corpus orders by t and rejects duplicates") {
    std::vector<Utterance> recs{
        {"c2", Kind::conflict, Speaker::B, "second", 2, 0},
        {"c2", Kind::conflict, Speaker::A, "first", 1, 0},
        {"c1", Kind::pleasant, Speaker::A, "only", std::nullopt, 0},
        {"c1", Kind::pleasant, Speaker::B, "reply", std::nullopt, 0},
    };
    const auto c = corpus::build_corpus(recs);
    REQUIRE(c.conversations.size() == 2);
    CHECK(c.conversations[0].couple_id == "c1");
    const auto* c2 = c.find({"c2", Kind::conflict});
    REQUIRE(c2);
    CHECK(c2->turns[0].text == "first");

    recs.push_back({"c2", Kind::conflict, Speaker::A, "dup", 2, 0});
    CHECK_THROWS_AS(corpus::build_corpus(recs), DataError);
    recs.pop_back();
    recs.push_back({"c2", Kind::conflict, Speaker::A, "no t", std::nullopt, 0});
    CHECK_THROWS_AS(corpus::build_corpus(recs), DataError);
}

TEST_CASE("bundled fixture counts") {
    std::ifstream in(DYADLSS_FIXTURE_DIR "/transcripts.jsonl");
    REQUIRE(in);
    const auto recs = corpus::parse_transcript(in, corpus::TranscriptFormat::jsonl);
    const auto c = corpus::build_corpus(recs);
    CHECK(c.conversations.size() == 8);
    CHECK(c.turn_count() == 46);
    std::size_t dropped = 0;
    for (const auto& conv : c.conversations) dropped += conv.dropped_filler_turns;
    CHECK(dropped == 6);

    std::ostringstream out;
    corpus::write_corpus(out, c);
    std::istringstream back(out.str());
    const auto again = corpus::read_corpus(back);
    REQUIRE(again.conversations.size() == c.conversations.size());
    for (std::size_t i = 0; i < c.conversations.size(); ++i) {
        REQUIRE(again.conversations[i].turns.size() == c.conversations[i].turns.size());
        for (std::size_t t = 0; t < c.conversations[i].turns.size(); ++t) {
            CHECK(again.conversations[i].turns[t].text == c.conversations[i].turns[t].text);
        }
    }
}

TEST_CASE("ratings csv") {
    std::ifstream in(DYADLSS_FIXTURE_DIR "/ratings.csv");
    const auto r = corpus::parse_ratings(in);
    CHECK(r.size() == 16);
    CHECK_FALSE(r[4].emotion.has_value());
    CHECK(r[4].naturalness == 6);

    std::ostringstream out;
    corpus::write_ratings(out, r);
    std::istringstream back(out.str());
    CHECK(corpus::parse_ratings(back) == r);

    std::istringstream bad("couple_id,speaker,kind,emotion\nc1,A,pleasant,10\n");
    CHECK_THROWS_AS(corpus::parse_ratings(bad), ParseError);
    std::istringstream nat("couple_id,speaker,kind,emotion,naturalness\nc1,A,pleasant,5,9\n");
    CHECK_THROWS_AS(corpus::parse_ratings(nat), ParseError);
}
