#include "dyadlss/corpus.hpp"

#include "dyadlss/csv.hpp"
#include "dyadlss/error.hpp"
#include "dyadlss/numfmt.hpp"
#include "dyadlss/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <map>

namespace dyadlss {

std::string_view to_string(Speaker s) { return s == Speaker::A ? "A" : "B"; }
std::string_view to_string(Kind k) { return k == Kind::pleasant ? "pleasant" : "conflict"; }

std::optional<Speaker> parse_speaker(std::string_view s) {
    if (s == "A") return Speaker::A;
    if (s == "B") return Speaker::B;
    return std::nullopt;
}

std::optional<Kind> parse_kind(std::string_view s) {
    if (s == "pleasant") return Kind::pleasant;
    if (s == "conflict") return Kind::conflict;
    return std::nullopt;
}

}  // namespace dyadlss

namespace dyadlss::corpus {
namespace {

constexpr const char* kModule = "corpus";

using json = nlohmann::json;

std::string require_string(const json& obj, const char* field, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
        throw ParseError(kModule, line, std::string("missing required field '") + field + "'");
    }
    if (!it->is_string()) {
        throw ParseError(kModule, line, std::string("field '") + field + "' must be a string");
    }
    return it->get<std::string>();
}

Utterance make_utterance(std::string couple_id, std::string_view kind, std::string_view speaker,
                         std::string text, std::optional<std::int64_t> t, std::size_t line) {
    if (couple_id.empty()) throw ParseError(kModule, line, "empty couple_id");
    auto k = parse_kind(kind);
    if (!k) throw ParseError(kModule, line, "unknown kind '" + std::string(kind) + "'");
    auto s = parse_speaker(speaker);
    if (!s) throw ParseError(kModule, line, "unknown speaker label '" + std::string(speaker) + "'");
    return Utterance{std::move(couple_id), *k, *s, std::move(text), t, line};
}

std::vector<Utterance> parse_jsonl(std::istream& in) {
    std::vector<Utterance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        if (!text::is_valid_utf8(line)) throw ParseError(kModule, lineno, "invalid UTF-8");
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(kModule, lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(kModule, lineno, "expected a JSON object");
        std::optional<std::int64_t> t;
        if (auto it = obj.find("t"); it != obj.end() && !it->is_null()) {
            if (!it->is_number_integer()) throw ParseError(kModule, lineno, "field 't' must be an integer");
            t = it->get<std::int64_t>();
        }
        out.push_back(make_utterance(require_string(obj, "couple_id", lineno), require_string(obj, "kind", lineno),
                                     require_string(obj, "speaker", lineno), require_string(obj, "text", lineno), t,
                                     lineno));
    }
    return out;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<Utterance> parse_csv(std::istream& in) {
    auto rows = csv::read(in, kModule);
    std::vector<Utterance> out;
    if (rows.empty()) return out;
    const csv::Header header(rows.front());
    const std::size_t c_couple = header.require("couple_id", kModule);
    const std::size_t c_kind = header.require("kind", kModule);
    const std::size_t c_speaker = header.require("speaker", kModule);
    const std::size_t c_text = header.require("text", kModule);
    const auto c_t = header.find("t");

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto field = [&](std::size_t c, const char* name) -> const std::string& {
            if (c >= row.fields.size()) {
                throw ParseError(kModule, row.line, std::string("missing required field '") + name + "'");
            }
            if (!text::is_valid_utf8(row.fields[c])) throw ParseError(kModule, row.line, "invalid UTF-8");
            return row.fields[c];
        };
        std::optional<std::int64_t> t;
        if (c_t && *c_t < row.fields.size() && !row.fields[*c_t].empty()) {
            t = parse_int(row.fields[*c_t]);
            if (!t) throw ParseError(kModule, row.line, "field 't' must be an integer");
        }
        out.push_back(make_utterance(field(c_couple, "couple_id"), field(c_kind, "kind"),
                                     field(c_speaker, "speaker"), field(c_text, "text"), t, row.line));
    }
    return out;
}

std::string join_text(std::string_view a, std::string_view b) {
    std::string out;
    out.reserve(a.size() + 1 + b.size());
    out.append(a);
    out.push_back(' ');
    out.append(b);
    return out;
}

void recount_words(Conversation& conv) {
    conv.words = {};
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        conv.turns[i].index = i;
        conv.words[index_of(conv.turns[i].speaker)] += conv.turns[i].tokens;
    }
}

}  // namespace

std::optional<TranscriptFormat> parse_format(std::string_view s) {
    if (s == "jsonl") return TranscriptFormat::jsonl;
    if (s == "csv") return TranscriptFormat::csv;
    return std::nullopt;
}

std::vector<Utterance> parse_transcript(std::istream& in, TranscriptFormat format) {
    return format == TranscriptFormat::jsonl ? parse_jsonl(in) : parse_csv(in);
}

void write_transcript(std::ostream& out, std::span<const Utterance> records, TranscriptFormat format) {
    if (format == TranscriptFormat::jsonl) {
        for (const auto& r : records) {
            nlohmann::ordered_json obj;
            obj["couple_id"] = r.couple_id;
            obj["kind"] = to_string(r.kind);
            obj["speaker"] = to_string(r.speaker);
            obj["text"] = r.text;
            if (r.t) obj["t"] = *r.t;
            out << obj.dump() << '\n';
        }
        return;
    }
    const bool with_t = std::any_of(records.begin(), records.end(), [](const Utterance& u) { return u.t.has_value(); });
    out << "couple_id,kind,speaker,text" << (with_t ? ",t" : "") << '\n';
    for (const auto& r : records) {
        out << csv::escape(r.couple_id) << ',' << to_string(r.kind) << ',' << to_string(r.speaker) << ','
            << csv::escape(r.text);
        if (with_t) out << ',' << (r.t ? std::to_string(*r.t) : std::string());
        out << '\n';
    }
}

Conversation merge_turns(std::span<const Utterance> records) {
    Conversation conv;
    for (const auto& r : records) {
        if (conv.source_records == 0) {
            conv.couple_id = r.couple_id;
            conv.kind = r.kind;
        } else if (r.couple_id != conv.couple_id || r.kind != conv.kind) {
            throw DataError(kModule, "merge_turns: records span more than one conversation");
        }
        ++conv.source_records;

        std::string body = text::trim(r.text);
        if (body.empty()) continue;
        const std::size_t tokens = text::count_tokens(body);
        if (!conv.turns.empty() && conv.turns.back().speaker == r.speaker) {
            Turn& last = conv.turns.back();
            last.text = join_text(last.text, body);
            last.tokens += tokens;
        } else {
            conv.turns.push_back(Turn{conv.turns.size(), r.speaker, std::move(body), tokens});
        }
    }
    if (conv.turns.empty()) throw DataError(kModule, "merge_turns: no usable records");
    recount_words(conv);
    return conv;
}

const FillerLexicon& default_fillers() {
    static const FillerLexicon fillers{"um", "uh", "mhm", "mm", "hmm"};
    return fillers;
}

FillerLexicon read_filler_lexicon(std::istream& in) {
    FillerLexicon out;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        for (auto& tok : text::tokenize(t)) out.insert(std::move(tok));
    }
    return out;
}

bool is_filler_turn(std::string_view body, const FillerLexicon& fillers) {
    const auto tokens = text::tokenize(body);
    if (tokens.empty()) return false;
    return std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return fillers.contains(t); });
}

Conversation drop_filler_turns(Conversation conv, const FillerLexicon& fillers, bool remerge) {
    std::vector<Turn> kept;
    kept.reserve(conv.turns.size());
    for (auto& turn : conv.turns) {
        if (is_filler_turn(turn.text, fillers)) {
            ++conv.dropped_filler_turns;
            continue;
        }
        if (remerge && !kept.empty() && kept.back().speaker == turn.speaker) {
            kept.back().text = join_text(kept.back().text, turn.text);
            kept.back().tokens += turn.tokens;
        } else {
            kept.push_back(std::move(turn));
        }
    }
    conv.turns = std::move(kept);
    recount_words(conv);
    return conv;
}

const Conversation* Corpus::find(const ConversationKey& key) const {
    auto it = std::lower_bound(conversations.begin(), conversations.end(), key,
                               [](const Conversation& c, const ConversationKey& k) { return c.key() < k; });
    if (it == conversations.end() || it->key() != key) return nullptr;
    return &*it;
}

std::vector<const Conversation*> Corpus::of_kind(Kind kind) const {
    std::vector<const Conversation*> out;
    for (const auto& c : conversations) {
        if (c.kind == kind) out.push_back(&c);
    }
    return out;
}

std::size_t Corpus::turn_count() const {
    std::size_t n = 0;
    for (const auto& c : conversations) n += c.turns.size();
    return n;
}

Corpus build_corpus(std::span<const Utterance> records, const BuildOptions& options) {
    std::map<ConversationKey, std::vector<Utterance>> groups;
    for (const auto& r : records) groups[{r.couple_id, r.kind}].push_back(r);

    Corpus corpus;
    for (auto& [key, group] : groups) {
        const auto with_t = std::count_if(group.begin(), group.end(), [](const Utterance& u) { return u.t.has_value(); });
        if (with_t != 0 && static_cast<std::size_t>(with_t) != group.size()) {
            throw DataError(kModule, "conversation " + key.couple_id + "/" + std::string(to_string(key.kind)) +
                                         ": field 't' present on some records only");
        }
        if (with_t != 0) {
            std::stable_sort(group.begin(), group.end(), [](const Utterance& a, const Utterance& b) { return *a.t < *b.t; });
            for (std::size_t i = 1; i < group.size(); ++i) {
                if (*group[i].t == *group[i - 1].t) {
                    throw DataError(kModule, "duplicate key (" + key.couple_id + ", " + std::string(to_string(key.kind)) +
                                                 ", t=" + std::to_string(*group[i].t) + ") at lines " +
                                                 std::to_string(group[i - 1].line) + " and " +
                                                 std::to_string(group[i].line));
                }
            }
        }
        Conversation conv;
        try {
            conv = merge_turns(group);
        } catch (const DataError&) {
            // every record blank: keep the conversation, flagged unusable
            conv.couple_id = key.couple_id;
            conv.kind = key.kind;
            conv.source_records = group.size();
        }
        corpus.conversations.push_back(drop_filler_turns(std::move(conv), options.fillers, options.remerge));
    }
    return corpus;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& conv : corpus.conversations) {
        for (const auto& turn : conv.turns) {
            nlohmann::ordered_json obj;
            obj["couple_id"] = conv.couple_id;
            obj["kind"] = to_string(conv.kind);
            obj["turn"] = turn.index;
            obj["speaker"] = to_string(turn.speaker);
            obj["text"] = turn.text;
            out << obj.dump() << '\n';
        }
    }
}

Corpus read_corpus(std::istream& in) {
    std::map<ConversationKey, Conversation> convs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(kModule, lineno, std::string("malformed JSON: ") + e.what());
        }
        auto it = obj.find("turn");
        if (it == obj.end() || !it->is_number_unsigned()) {
            throw ParseError(kModule, lineno, "field 'turn' must be a non-negative integer");
        }
        const auto turn_index = it->get<std::size_t>();
        Utterance u = make_utterance(require_string(obj, "couple_id", lineno), require_string(obj, "kind", lineno),
                                     require_string(obj, "speaker", lineno), require_string(obj, "text", lineno),
                                     std::nullopt, lineno);
        Conversation& conv = convs[{u.couple_id, u.kind}];
        conv.couple_id = u.couple_id;
        conv.kind = u.kind;
        if (turn_index != conv.turns.size()) {
            throw ParseError(kModule, lineno, "turn indices must be contiguous from 0 within a conversation");
        }
        if (!conv.turns.empty() && conv.turns.back().speaker == u.speaker) {
            throw ParseError(kModule, lineno, "adjacent turns share a speaker");
        }
        const std::size_t tokens = text::count_tokens(u.text);
        conv.turns.push_back(Turn{turn_index, u.speaker, std::move(u.text), tokens});
        ++conv.source_records;
    }
    Corpus corpus;
    for (auto& [key, conv] : convs) {
        recount_words(conv);
        corpus.conversations.push_back(std::move(conv));
    }
    return corpus;
}

std::vector<ParticipantRating> parse_ratings(std::istream& in) {
    auto rows = csv::read(in, kModule);
    std::vector<ParticipantRating> out;
    if (rows.empty()) return out;
    const csv::Header header(rows.front());
    const std::size_t c_couple = header.require("couple_id", kModule);
    const std::size_t c_speaker = header.require("speaker", kModule);
    const std::size_t c_kind = header.require("kind", kModule);
    const std::size_t c_emotion = header.require("emotion", kModule);
    const auto c_nat = header.find("naturalness");
    const auto c_sex = header.find("sex");
    const auto c_ms = header.find("marital_satisfaction");

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto cell = [&](std::optional<std::size_t> c) -> std::string_view {
            if (!c || *c >= row.fields.size()) return {};
            return row.fields[*c];
        };
        const auto rating = [&](std::optional<std::size_t> c, const char* name, int lo,
                                int hi) -> std::optional<int> {
            const std::string_view v = cell(c);
            if (v.empty()) return std::nullopt;
            auto parsed = parse_int(v);
            if (!parsed || *parsed < lo || *parsed > hi) {
                throw ParseError(kModule, row.line, std::string(name) + " must be an integer in [" +
                                                        std::to_string(lo) + "," + std::to_string(hi) + "]");
            }
            return static_cast<int>(*parsed);
        };
        ParticipantRating p;
        p.couple_id = std::string(cell(c_couple));
        if (p.couple_id.empty()) throw ParseError(kModule, row.line, "missing required field 'couple_id'");
        auto s = parse_speaker(cell(c_speaker));
        if (!s) throw ParseError(kModule, row.line, "unknown speaker label '" + std::string(cell(c_speaker)) + "'");
        auto k = parse_kind(cell(c_kind));
        if (!k) throw ParseError(kModule, row.line, "unknown kind '" + std::string(cell(c_kind)) + "'");
        p.speaker = *s;
        p.kind = *k;
        p.emotion = rating(c_emotion, "emotion", 1, 9);
        p.naturalness = rating(c_nat, "naturalness", 0, 8);
        if (auto v = cell(c_sex); !v.empty()) p.sex = std::string(v);
        if (auto v = cell(c_ms); !v.empty()) {
            double d = 0;
            auto res = std::from_chars(v.data(), v.data() + v.size(), d);
            if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
                throw ParseError(kModule, row.line, "marital_satisfaction must be a number");
            }
            p.marital_satisfaction = d;
        }
        out.push_back(std::move(p));
    }
    return out;
}

void write_ratings(std::ostream& out, std::span<const ParticipantRating> ratings) {
    out << "couple_id,speaker,kind,emotion,naturalness,sex,marital_satisfaction\n";
    for (const auto& r : ratings) {
        out << csv::escape(r.couple_id) << ',' << to_string(r.speaker) << ',' << to_string(r.kind) << ','
            << (r.emotion ? std::to_string(*r.emotion) : "") << ','
            << (r.naturalness ? std::to_string(*r.naturalness) : "") << ',' << (r.sex ? csv::escape(*r.sex) : "")
            << ',' << (r.marital_satisfaction ? format_number(*r.marital_satisfaction) : "") << '\n';
    }
}

}  // namespace dyadlss::corpus
