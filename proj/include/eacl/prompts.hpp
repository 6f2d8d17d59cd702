#pragma once

// Prompt templates. Templates are text assets compiled into the library;
// slots are written {{name}} and every slot must be filled at render time.
//
// Each rendered request prompt ends with a machine-readable block
//   <<<PAYLOAD
//   {...}
//   PAYLOAD>>>
// restating the structured input, so backends (and the mock) can read the
// request without scraping prose.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eacl/corpus.hpp"

namespace eacl::prompts {

enum class PromptRole { error_classify, remediate, verify_relation, mimic_exemplar, repair };

std::string_view to_string(PromptRole role);
std::optional<PromptRole> role_from_string(std::string_view s);

struct PromptTemplate {
  PromptRole role;
  std::string text;

  std::vector<std::string> slots() const;
};

const PromptTemplate& builtin_template(PromptRole role);
/// Non-template text assets ("rules_taxonomy", "rules_remediation").
const std::string& asset(std::string_view name);

using Slots = std::map<std::string, std::string, std::less<>>;

/// Throws InputError naming any slot left unfilled.
std::string render(const PromptTemplate& tmpl, const Slots& slots);
std::string render_text(std::string_view text, const Slots& slots);

std::string payload_block(const corpus::Json& payload);
/// The last payload block in a prompt, if any.
std::optional<corpus::Json> extract_payload(std::string_view prompt);

}  // namespace eacl::prompts
