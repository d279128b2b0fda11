#include <doctest.h>

#include "dyadlss/text.hpp"

using dyadlss::text::count_tokens;
using dyadlss::text::is_valid_utf8;
using dyadlss::text::tokenize;
using dyadlss::text::trim;

TEST_CASE("tokenize strips edge punctuation and casefolds") {
    CHECK(tokenize("Mhm.") == std::vector<std::string>{"mhm"});
    CHECK(tokenize("  Mhm, I agree!  ") == std::vector<std::string>{"mhm", "i", "agree"});
    CHECK(tokenize("don't") == std::vector<std::string>{"don't"});
    CHECK(tokenize("... -- !!").empty());
    CHECK(tokenize("").empty());
}

TEST_CASE("tokenize splits on non-ASCII whitespace") {
    // U+00A0 no-break space and U+3000 ideographic space
    CHECK(tokenize("a\xC2\xA0" "b\xE3\x80\x80" "c").size() == 3);
    CHECK(count_tokens("one\ttwo\nthree") == 3);
}

TEST_CASE("trim handles unicode whitespace") {
    CHECK(trim("\xC2\xA0 hi \t") == "hi");
    CHECK(trim("   ").empty());
}

TEST_CASE("utf8 validation") {
    CHECK(is_valid_utf8("caf\xC3\xA9"));
    CHECK_FALSE(is_valid_utf8("\xC3"));
    CHECK_FALSE(is_valid_utf8("\xFF\xFE"));
    CHECK_FALSE(is_valid_utf8("\xC0\xAF"));  // overlong '/'
}
