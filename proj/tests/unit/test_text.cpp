#include <doctest.h>

#include "eacl/error.hpp"
#include "eacl/hashing.hpp"
#include "eacl/text.hpp"

using namespace eacl;

TEST_SUITE("text") {
  TEST_CASE("code point length and substrings") {
    const std::string s = "5 µg of β-agonist";
    CHECK(text::codepoint_length(s) == 17);
    CHECK(text::substr_cp(s, 2, 4) == "µg");
    CHECK(text::substr_cp(s, 8, 17) == "β-agonist");
    CHECK(text::byte_offset(s, 3) == 4);
    CHECK(text::codepoint_index(s, 4) == 3);
    CHECK(text::byte_offset(s, 17) == s.size());
  }

  TEST_CASE("invalid UTF-8 is rejected") {
    CHECK_THROWS_AS(text::codepoint_length("abc\xff"), InputError);
    CHECK_THROWS_AS(text::codepoint_length("\xc3"), InputError);
  }

  TEST_CASE("word search respects boundaries and ignores ASCII case") {
    CHECK(text::find_word("Aspirin may not help", "NOT") == 12);
    CHECK(text::find_word("nothing here", "not") == std::string::npos);
    CHECK(text::find_word("cannot", "not") == std::string::npos);
    CHECK(text::find_word("(not)", "not") == 1);
    CHECK(text::find_word("no, no", "no", 1) == 4);
  }

  TEST_CASE("whitespace helpers") {
    CHECK(text::collapse_whitespace("  a \t b\n c  ") == "a b c");
    CHECK(text::split_whitespace(" a  b ") == std::vector<std::string>{"a", "b"});
    CHECK(text::join({"a", "b", "c"}, ", ") == "a, b, c");
    CHECK(text::strip_punct("(warfarin),") == "warfarin");
    CHECK(text::strip_punct("...") == "");
    CHECK(text::iequals_ascii("CYP3A4", "cyp3a4"));
  }

  TEST_CASE("sha256 matches known digests") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}
