#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dyadlss::text {

bool is_valid_utf8(std::string_view s);

/// Strip leading/trailing Unicode whitespace.
std::string trim(std::string_view s);

/// Word tokenizer shared by filler detection, word counts and the lexicon
/// counter: split on Unicode whitespace, strip leading and trailing
/// punctuation, ASCII casefold. Tokens that are pure punctuation vanish.
std::vector<std::string> tokenize(std::string_view s);

std::size_t count_tokens(std::string_view s);

}  // namespace dyadlss::text
