#include "eacl/prompts.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "eacl/error.hpp"

namespace eacl::prompts {

namespace {

struct Asset {
  std::string_view name;
  std::string_view text;
};

constexpr Asset kAssets[] = {
#include "eacl_prompt_assets.inc"
};

constexpr std::string_view kPayloadOpen = "<<<PAYLOAD\n";
constexpr std::string_view kPayloadClose = "\nPAYLOAD>>>";

std::string_view find_asset(std::string_view name) {
  for (const auto& a : kAssets) {
    if (a.name == name) return a.text;
  }
  throw std::logic_error(fmt::format("prompt asset '{}' not compiled in", name));
}

}  // namespace

std::string_view to_string(PromptRole role) {
  switch (role) {
    case PromptRole::error_classify: return "error_classify";
    case PromptRole::remediate: return "remediate";
    case PromptRole::verify_relation: return "verify_relation";
    case PromptRole::mimic_exemplar: return "mimic_exemplar";
    case PromptRole::repair: return "repair";
  }
  return "";
}

std::optional<PromptRole> role_from_string(std::string_view s) {
  for (auto r : {PromptRole::error_classify, PromptRole::remediate, PromptRole::verify_relation,
                 PromptRole::mimic_exemplar, PromptRole::repair}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::vector<std::string> PromptTemplate::slots() const {
  std::set<std::string> seen;
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string::npos) {
    const std::size_t end = text.find("}}", pos + 2);
    if (end == std::string::npos) break;
    std::string name = text.substr(pos + 2, end - pos - 2);
    if (seen.insert(name).second) out.push_back(std::move(name));
    pos = end + 2;
  }
  return out;
}

const PromptTemplate& builtin_template(PromptRole role) {
  static const std::array<PromptTemplate, 5> templates = [] {
    std::array<PromptTemplate, 5> t;
    std::size_t i = 0;
    for (auto r : {PromptRole::error_classify, PromptRole::remediate, PromptRole::verify_relation,
                   PromptRole::mimic_exemplar, PromptRole::repair}) {
      t[i++] = PromptTemplate{r, std::string(find_asset(to_string(r)))};
    }
    return t;
  }();
  return templates.at(static_cast<std::size_t>(role));
}

const std::string& asset(std::string_view name) {
  static const std::map<std::string, std::string, std::less<>> cache = [] {
    std::map<std::string, std::string, std::less<>> m;
    for (const auto& a : kAssets) m.emplace(a.name, a.text);
    return m;
  }();
  auto it = cache.find(name);
  if (it == cache.end()) throw std::logic_error(fmt::format("prompt asset '{}' not compiled in", name));
  return it->second;
}

std::string render_text(std::string_view text, const Slots& slots) {
  std::string out;
  out.reserve(text.size() * 2);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, open - pos));
    const std::string_view name = text.substr(open + 2, close - open - 2);
    auto it = slots.find(name);
    if (it == slots.end()) throw InputError(fmt::format("prompt slot '{}' is not filled", name));
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

std::string render(const PromptTemplate& tmpl, const Slots& slots) { return render_text(tmpl.text, slots); }

std::string payload_block(const corpus::Json& payload) {
  return std::string(kPayloadOpen) + payload.dump() + std::string(kPayloadClose);
}

std::optional<corpus::Json> extract_payload(std::string_view prompt) {
  const std::size_t open = prompt.rfind(kPayloadOpen);
  if (open == std::string_view::npos) return std::nullopt;
  const std::size_t start = open + kPayloadOpen.size();
  const std::size_t close = prompt.find(kPayloadClose, start);
  if (close == std::string_view::npos) return std::nullopt;
  try {
    return corpus::Json::parse(prompt.substr(start, close - start));
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;
  }
}

}  // namespace eacl::prompts
