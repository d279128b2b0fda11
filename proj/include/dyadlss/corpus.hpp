#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dyadlss {

enum class Speaker : std::uint8_t { A = 0, B = 1 };
enum class Kind : std::uint8_t { pleasant = 0, conflict = 1 };

inline constexpr std::array<Speaker, 2> kSpeakers{Speaker::A, Speaker::B};
inline constexpr std::array<Kind, 2> kKinds{Kind::pleasant, Kind::conflict};

constexpr Speaker partner_of(Speaker s) { return s == Speaker::A ? Speaker::B : Speaker::A; }
constexpr std::size_t index_of(Speaker s) { return static_cast<std::size_t>(s); }
constexpr std::size_t index_of(Kind k) { return static_cast<std::size_t>(k); }

std::string_view to_string(Speaker s);
std::string_view to_string(Kind k);
std::optional<Speaker> parse_speaker(std::string_view s);
std::optional<Kind> parse_kind(std::string_view s);

struct ConversationKey {
    std::string couple_id;
    Kind kind = Kind::pleasant;

    auto operator<=>(const ConversationKey&) const = default;
};

}  // namespace dyadlss

namespace dyadlss::corpus {

/// One raw transcript record, before turn merging.
struct Utterance {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    Speaker speaker = Speaker::A;
    std::string text;
    std::optional<std::int64_t> t;  // optional ordinal
    std::size_t line = 0;           // source line, 0 when synthetic

    bool operator==(const Utterance& o) const {
        return couple_id == o.couple_id && kind == o.kind && speaker == o.speaker && text == o.text && t == o.t;
    }
};

enum class TranscriptFormat { jsonl, csv };

std::optional<TranscriptFormat> parse_format(std::string_view s);

/// Reads utterance records in file order. Throws ParseError naming the line
/// for invalid UTF-8, missing fields, unknown speaker or kind labels.
std::vector<Utterance> parse_transcript(std::istream& in, TranscriptFormat format);

void write_transcript(std::ostream& out, std::span<const Utterance> records, TranscriptFormat format);

/// Everything one speaker said before the partner spoke.
struct Turn {
    std::size_t index = 0;
    Speaker speaker = Speaker::A;
    std::string text;
    std::size_t tokens = 0;
};

struct Conversation {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    std::vector<Turn> turns;
    std::array<std::size_t, 2> words{};  // per speaker, indexed by index_of(Speaker)
    std::size_t dropped_filler_turns = 0;
    std::size_t source_records = 0;

    ConversationKey key() const { return {couple_id, kind}; }
    bool usable() const { return !turns.empty(); }
    std::size_t word_count(Speaker s) const { return words[index_of(s)]; }
    /// Adjacent turn pairs, N - 1 (0 for an empty conversation).
    std::size_t pair_count() const { return turns.empty() ? 0 : turns.size() - 1; }
};

/// Concatenates consecutive same-speaker records (single-space joint) into
/// turns that strictly alternate speakers. Records whose text is blank after
/// trimming are skipped. Throws DataError when no usable record remains or
/// when the records do not share couple_id and kind.
Conversation merge_turns(std::span<const Utterance> records);

using FillerLexicon = std::set<std::string, std::less<>>;

/// {um, uh, mhm, mm, hmm}
const FillerLexicon& default_fillers();

/// Loads one filler token per line ('#' comments allowed).
FillerLexicon read_filler_lexicon(std::istream& in);

bool is_filler_turn(std::string_view text, const FillerLexicon& fillers);

/// Removes turns made only of filler tokens. With remerge set, the
/// same-speaker neighbours left behind are joined again so speakers keep
/// alternating. A conversation whose turns are all fillers comes back with no
/// turns (usable() == false).
Conversation drop_filler_turns(Conversation conv, const FillerLexicon& fillers, bool remerge = true);

struct Corpus {
    std::vector<Conversation> conversations;  // sorted by (couple_id, kind)

    const Conversation* find(const ConversationKey& key) const;
    std::vector<const Conversation*> of_kind(Kind kind) const;
    std::size_t turn_count() const;
};

struct BuildOptions {
    FillerLexicon fillers = default_fillers();
    bool remerge = true;
};

/// Groups records by (couple_id, kind), orders each group by `t` when every
/// record carries one (file order otherwise), merges and drops fillers.
/// Throws DataError on duplicate (couple_id, kind, t) or when only some
/// records of a conversation carry `t`.
Corpus build_corpus(std::span<const Utterance> records, const BuildOptions& options = {});

/// Normalized working file: one JSON object per post-merge turn with
/// couple_id, kind, turn, speaker, text.
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in);

struct ParticipantRating {
    std::string couple_id;
    Speaker speaker = Speaker::A;
    Kind kind = Kind::pleasant;
    std::optional<int> emotion;       // 1..9
    std::optional<int> naturalness;   // 0..8
    std::optional<std::string> sex;
    std::optional<double> marital_satisfaction;

    bool operator==(const ParticipantRating&) const = default;
};

/// Ratings CSV with header
/// couple_id,speaker,kind,emotion,naturalness,sex,marital_satisfaction.
/// Empty cells are missing values; out-of-range ratings are errors.
std::vector<ParticipantRating> parse_ratings(std::istream& in);
void write_ratings(std::ostream& out, std::span<const ParticipantRating> ratings);

}  // namespace dyadlss::corpus
