#pragma once

#include "dyadlss/corpus.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dyadlss::lexicon {

/// Word category. Patterns are lowercase; a trailing '*' marks a stem that
/// matches any token starting with it.
class CategoryLexicon {
public:
    explicit CategoryLexicon(std::string name);

    /// Throws DataError on an empty or duplicate pattern.
    void add(std::string_view pattern);

    const std::string& name() const { return name_; }
    bool matches(std::string_view token) const;
    std::size_t size() const { return literals_.size() + stems_.size(); }

private:
    std::string name_;
    std::set<std::string, std::less<>> literals_;
    std::vector<std::string> stems_;  // sorted
};

/// `category<TAB>pattern` per line; blank lines and '#' comments skipped.
/// Categories come back sorted by name.
std::vector<CategoryLexicon> read_lexicon(std::istream& in);
std::vector<CategoryLexicon> load_lexicon_file(const std::filesystem::path& path);

/// Loads every *.tsv file of a directory, merging categories that share a
/// name across files.
std::vector<CategoryLexicon> load_lexicon_dir(const std::filesystem::path& dir);

/// The directory named by DYADLSS_LEXICON_DIR, else the bundled one.
std::filesystem::path default_lexicon_dir();

struct CollapsedText {
    std::string text;
    std::size_t words = 0;
    bool low_word_count = false;  // fewer than kReliableWordFloor words
};

/// Dictionary counts are unreliable below this many words per text.
inline constexpr std::size_t kReliableWordFloor = 50;

/// All turns of each speaker joined in order, one text per speaker.
std::map<Speaker, CollapsedText> collapse_speaker_text(const corpus::Conversation& conv);

struct CategoryCounts {
    std::size_t total_words = 0;
    std::map<std::string, std::size_t> counts;
    std::map<std::string, double> proportions;  // counts / total_words, 0 for empty text
};

/// A token counts once toward every category it matches.
CategoryCounts count_categories(std::string_view text, std::span<const CategoryLexicon> lexicons);

/// 1 - |h - w| / (h + w + 0.0001). Throws DataError for negative input.
double style_matching(double h_value, double w_value);

struct SpeakerCounts {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    Speaker speaker = Speaker::A;
    CategoryCounts counts;
    bool low_word_count = false;
};

struct SynchronyScore {
    std::string couple_id;
    Kind kind = Kind::pleasant;
    std::string category;
    double value = 0.0;
};

enum class MatchInput {
    percent,     // category share of the speaker's words, in percent
    raw_counts,  // category token counts
};

struct ConversationMatch {
    std::array<SpeakerCounts, 2> speakers;
    std::vector<SynchronyScore> synchrony;
};

/// Name of the pseudo-category scored from posemo + negemo together.
inline constexpr std::string_view kEmotionComposite = "emotion";

/// Counts both speakers' collapsed texts and scores matching for every
/// category, plus the emotion composite when posemo and negemo are loaded.
ConversationMatch match_conversation(const corpus::Conversation& conv, std::span<const CategoryLexicon> lexicons,
                                     MatchInput input = MatchInput::percent);

}  // namespace dyadlss::lexicon
