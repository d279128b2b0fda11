#include "dyadlss/lexicon.hpp"

#include "dyadlss/error.hpp"
#include "dyadlss/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

namespace dyadlss::lexicon {
namespace {

constexpr const char* kModule = "lexicon";
constexpr double kMatchingEpsilon = 0.0001;

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

void merge_into(std::map<std::string, CategoryLexicon>& out, std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(kModule, lineno, origin + "expected 'category<TAB>pattern'");
        }
        const std::string category = text::trim(line.substr(0, tab));
        const std::string pattern = text::trim(line.substr(tab + 1));
        if (category.empty()) throw ParseError(kModule, lineno, origin + "empty category name");
        auto it = out.try_emplace(category, category).first;
        try {
            it->second.add(pattern);
        } catch (const DataError& e) {
            throw ParseError(kModule, lineno, origin + std::string(e.what()).substr(e.module().size() + 2));
        }
    }
}

std::vector<CategoryLexicon> to_vector(std::map<std::string, CategoryLexicon>&& cats) {
    std::vector<CategoryLexicon> out;
    for (auto& [_, lex] : cats) out.push_back(std::move(lex));
    return out;
}

}  // namespace

CategoryLexicon::CategoryLexicon(std::string name) : name_(std::move(name)) {}

void CategoryLexicon::add(std::string_view raw) {
    std::string pattern = lowercase(raw);
    const bool stem = !pattern.empty() && pattern.back() == '*';
    if (stem) pattern.pop_back();
    if (pattern.empty()) throw DataError(kModule, "empty pattern in category '" + name_ + "'");
    if (stem) {
        auto pos = std::lower_bound(stems_.begin(), stems_.end(), pattern);
        if (pos != stems_.end() && *pos == pattern) {
            throw DataError(kModule, "duplicate pattern '" + pattern + "*' in category '" + name_ + "'");
        }
        stems_.insert(pos, std::move(pattern));
    } else if (!literals_.insert(pattern).second) {
        throw DataError(kModule, "duplicate pattern '" + pattern + "' in category '" + name_ + "'");
    }
}

bool CategoryLexicon::matches(std::string_view token) const {
    if (literals_.contains(token)) return true;
    // only stems sorting at or before the token can be its prefix
    auto end = std::upper_bound(stems_.begin(), stems_.end(), token,
                                [](std::string_view t, const std::string& s) { return t < s; });
    for (auto it = stems_.begin(); it != end; ++it) {
        if (token.starts_with(*it)) return true;
    }
    return false;
}

std::vector<CategoryLexicon> read_lexicon(std::istream& in) {
    std::map<std::string, CategoryLexicon> cats;
    merge_into(cats, in, "");
    return to_vector(std::move(cats));
}

std::vector<CategoryLexicon> load_lexicon_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(kModule, "cannot open lexicon " + path.string());
    std::map<std::string, CategoryLexicon> cats;
    merge_into(cats, in, path.filename().string() + ": ");
    return to_vector(std::move(cats));
}

std::vector<CategoryLexicon> load_lexicon_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError(kModule, "lexicon directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".tsv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::map<std::string, CategoryLexicon> cats;
    for (const auto& f : files) {
        std::ifstream in(f);
        merge_into(cats, in, f.filename().string() + ": ");
    }
    if (cats.empty()) throw DataError(kModule, "no lexicon entries under " + dir.string());
    return to_vector(std::move(cats));
}

std::filesystem::path default_lexicon_dir() {
    if (const char* env = std::getenv("DYADLSS_LEXICON_DIR"); env != nullptr && *env != '\0') return env;
    return DYADLSS_SOURCE_LEXICON_DIR;
}

std::map<Speaker, CollapsedText> collapse_speaker_text(const corpus::Conversation& conv) {
    std::map<Speaker, CollapsedText> out;
    for (Speaker s : kSpeakers) out[s];
    for (const auto& turn : conv.turns) {
        CollapsedText& c = out[turn.speaker];
        if (!c.text.empty()) c.text.push_back(' ');
        c.text += turn.text;
    }
    for (auto& [_, c] : out) {
        c.words = text::count_tokens(c.text);
        c.low_word_count = c.words < kReliableWordFloor;
    }
    return out;
}

CategoryCounts count_categories(std::string_view body, std::span<const CategoryLexicon> lexicons) {
    CategoryCounts out;
    for (const auto& lex : lexicons) out.counts[lex.name()] = 0;
    for (const auto& token : text::tokenize(body)) {
        ++out.total_words;
        for (const auto& lex : lexicons) {
            if (lex.matches(token)) ++out.counts[lex.name()];
        }
    }
    for (const auto& [name, n] : out.counts) {
        out.proportions[name] =
            out.total_words == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(out.total_words);
    }
    return out;
}

double style_matching(double h_value, double w_value) {
    if (!(h_value >= 0.0) || !(w_value >= 0.0)) throw DataError(kModule, "style matching needs non-negative inputs");
    return 1.0 - std::abs(h_value - w_value) / (h_value + w_value + kMatchingEpsilon);
}

ConversationMatch match_conversation(const corpus::Conversation& conv, std::span<const CategoryLexicon> lexicons,
                                     MatchInput input) {
    ConversationMatch m;
    const auto texts = collapse_speaker_text(conv);
    for (Speaker s : kSpeakers) {
        const CollapsedText& c = texts.at(s);
        SpeakerCounts& sc = m.speakers[index_of(s)];
        sc.couple_id = conv.couple_id;
        sc.kind = conv.kind;
        sc.speaker = s;
        sc.counts = count_categories(c.text, lexicons);
        sc.low_word_count = c.low_word_count;
    }
    const auto quantity = [&](Speaker s, const std::string& cat) {
        const CategoryCounts& cc = m.speakers[index_of(s)].counts;
        return input == MatchInput::percent ? 100.0 * cc.proportions.at(cat)
                                            : static_cast<double>(cc.counts.at(cat));
    };
    for (const auto& lex : lexicons) {
        m.synchrony.push_back({conv.couple_id, conv.kind, lex.name(),
                               style_matching(quantity(Speaker::A, lex.name()), quantity(Speaker::B, lex.name()))});
    }
    const auto& first = m.speakers[0].counts.counts;
    if (first.contains("posemo") && first.contains("negemo")) {
        const auto emotion = [&](Speaker s) { return quantity(s, "posemo") + quantity(s, "negemo"); };
        m.synchrony.push_back({conv.couple_id, conv.kind, std::string(kEmotionComposite),
                               style_matching(emotion(Speaker::A), emotion(Speaker::B))});
    }
    return m;
}

}  // namespace dyadlss::lexicon
