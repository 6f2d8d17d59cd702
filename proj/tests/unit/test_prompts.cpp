#include <doctest.h>

#include "eacl/error.hpp"
#include "eacl/prompts.hpp"

using namespace eacl;
using namespace eacl::prompts;

TEST_SUITE("prompts") {
  TEST_CASE("every role has a template with declared slots") {
    for (PromptRole role : {PromptRole::error_classify, PromptRole::remediate, PromptRole::verify_relation,
                            PromptRole::mimic_exemplar, PromptRole::repair}) {
      const auto& t = builtin_template(role);
      CHECK(t.role == role);
      CHECK_FALSE(t.text.empty());
      CHECK(role_from_string(to_string(role)) == role);
    }
    CHECK_FALSE(role_from_string("nope").has_value());
    CHECK_FALSE(asset("rules_taxonomy").empty());
    CHECK_FALSE(asset("rules_remediation").empty());
    CHECK_THROWS(asset("no_such_asset"));
  }

  TEST_CASE("rendering fills slots and rejects gaps") {
    PromptTemplate t{PromptRole::repair, "Hello {{name}}, {{name}} and {{other}}."};
    CHECK(t.slots() == std::vector<std::string>{"name", "other"});
    CHECK(render(t, {{"name", "A"}, {"other", "B"}}) == "Hello A, A and B.");
    try {
      render(t, {{"name", "A"}});
      FAIL("expected an error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("other") != std::string::npos);
    }
    CHECK(render_text("{{x}}", {{"x", "{{y}}"}}) == "{{y}}");
  }

  TEST_CASE("payload blocks round trip and the last one wins") {
    corpus::Json a = {{"role", "verify_relation"}, {"text", "line1\nline2 PAYLOAD>>> inside"}};
    corpus::Json b = {{"role", "repair"}};
    const std::string prompt = "intro\n" + payload_block(a) + "\nmore\n" + payload_block(b);
    const auto got = extract_payload(prompt);
    REQUIRE(got.has_value());
    CHECK(*got == b);
    CHECK(extract_payload(payload_block(a)) == a);
    CHECK_FALSE(extract_payload("no payload here").has_value());
    CHECK_FALSE(extract_payload("<<<PAYLOAD\n{broken\nPAYLOAD>>>").has_value());
  }
}
