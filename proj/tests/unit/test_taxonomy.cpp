#include <doctest.h>

#include "eacl/error.hpp"
#include "eacl/taxonomy.hpp"
#include "support.hpp"

using namespace eacl;
using namespace eacl::taxonomy;
using eacl::testing::make_instance;

TEST_SUITE("taxonomy") {
  TEST_CASE("names and categories") {
    for (ErrorType t : kAllErrorTypes) CHECK(error_type_from_string(to_string(t)) == t);
    CHECK_FALSE(error_type_from_string("Sarcasm").has_value());
    CHECK(category_of(ErrorType::Negation) == ErrorCategory::LinguisticSemantic);
    CHECK(category_of(ErrorType::AmplificationModality) == ErrorCategory::LinguisticSemantic);
    CHECK(category_of(ErrorType::LackOfDomainKnowledge) == ErrorCategory::KnowledgeBased);
    CHECK(category_of(ErrorType::DistantEntities) == ErrorCategory::Structural);
  }

  TEST_CASE("tag tokens and rule classes") {
    CHECK(token(ErrorTag::ConKgLookup) == "[###CON_KGLOOKUP]");
    CHECK(token(ErrorTag::NewNeg) == "[###NEW_NEG]");
    for (ErrorTag t : kAllTags) CHECK(tag_from_token(token(t)) == t);
    CHECK(rule_class(ErrorTag::Con) == ErrorType::Contrast);
    CHECK(rule_class(ErrorTag::ConKgLookup) == ErrorType::Contrast);
    CHECK(rule_class(ErrorTag::KgLookup) == ErrorType::LackOfDomainKnowledge);
    CHECK(is_kg_tag(ErrorTag::ConKgLookup));
    CHECK(is_kg_tag(ErrorTag::KgLookup));
    CHECK_FALSE(is_kg_tag(ErrorTag::Con));
    CHECK(is_rewrite_tag(ErrorTag::NewMulti));
    CHECK_FALSE(is_rewrite_tag(ErrorTag::Amp));
    CHECK(produces_rewrite(ErrorType::DistantEntities));
    CHECK_FALSE(produces_rewrite(ErrorType::Contrast));
  }

  TEST_CASE("difficulty tiers") {
    CHECK(score_difficulty({}) == 0);
    CHECK(score_difficulty({ErrorType::Negation}) == 1);
    CHECK(score_difficulty({ErrorType::LackOfDomainKnowledge}) == 2);
    CHECK(score_difficulty({ErrorType::Negation, ErrorType::LackOfDomainKnowledge}) == 3);
    CHECK(score_difficulty({ErrorType::Negation, ErrorType::Contrast, ErrorType::MultipleEntities}) == 4);
    CHECK(score_difficulty({kAllErrorTypes.begin(), kAllErrorTypes.end()}) == 5);
  }

  TEST_CASE("parsing pulls the longest token and tidies spacing") {
    const auto p = parse_tags("Drug A  [###CON_KGLOOKUP] binds B [###CON]\nGuidance: [###XYZ] keep");
    CHECK(p.tags == std::vector<ErrorTag>{ErrorTag::ConKgLookup, ErrorTag::Con});
    CHECK(p.clean_text == "Drug A binds B\nGuidance: [###XYZ] keep");
    CHECK(parse_tags("[###CON][###AMP]").tags == std::vector<ErrorTag>{ErrorTag::Con, ErrorTag::Amp});
    CHECK(parse_tags("no tags  here").clean_text == "no tags  here");
    CHECK(parse_tags("[###CON_KGLOOKUP").tags.empty());
  }

  TEST_CASE("render then parse is the identity on tidy text") {
    const std::vector<ErrorTag> tags = {ErrorTag::NewNeg, ErrorTag::ConKgLookup, ErrorTag::KgLookup};
    const std::string rendered = render_tags("A does NOT bind B.", tags);
    CHECK(rendered == "A does NOT bind B. [###NEW_NEG] [###CON_KGLOOKUP] [###KGLOOKUP]");
    const auto back = parse_tags(rendered);
    CHECK(back.clean_text == "A does NOT bind B.");
    CHECK(back.tags == tags);
    CHECK(render_tags("", {ErrorTag::Amp}) == "[###AMP]");
  }

  TEST_CASE("entity token distance counts whitespace tokens between spans") {
    CHECK(entity_token_distance(make_instance("a", "<<A>> one two three ((B))")) == 3);
    CHECK(entity_token_distance(make_instance("a", "((B)) one, two <<A>>")) == 2);
    CHECK(entity_token_distance(make_instance("a", "<<A>>((B))")) == 0);
    auto far = make_instance("a", "<<A>> " + std::string(21 * 2, ' ') + "((B))");
    CHECK(entity_token_distance(far) == 0);
    std::string words;
    for (int i = 0; i < 21; ++i) words += "w ";
    CHECK(distant_entities(make_instance("a", "<<A>> " + words + "((B))")));
    CHECK_FALSE(distant_entities(make_instance("a", "<<A>> " + words + "((B))"), 21));
  }

  TEST_CASE("annotation JSON round trip checks derived fields") {
    ErrorAnnotation a;
    a.instance_id = "x";
    a.error_types = {ErrorType::Contrast, ErrorType::LackOfDomainKnowledge};
    a.tags = {ErrorTag::ConKgLookup, ErrorTag::KgLookup};
    a.normalize();
    CHECK(a.difficulty == 3);
    CHECK(a.requires_kg);
    auto j = to_json(a);
    const auto back = annotation_from_json(j);
    CHECK(back.difficulty == 3);
    CHECK(back.tags == a.tags);
    CHECK(back.error_types == a.error_types);
    auto stale = j;
    stale["difficulty"] = 0;
    CHECK_THROWS_AS(annotation_from_json(stale), ValidationError);
    auto no_kg = j;
    no_kg["requires_kg"] = false;
    CHECK_THROWS_AS(annotation_from_json(no_kg), ValidationError);
    j["error_types"] = {"Sarcasm"};
    CHECK_THROWS_AS(annotation_from_json(j), InputError);
  }
}
