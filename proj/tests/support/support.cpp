#include "support.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "eacl/prompts.hpp"
#include "eacl/text.hpp"

namespace eacl::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return EACL_FIXTURE_DIR; }
fs::path golden_dir() { return EACL_GOLDEN_DIR; }

TempDir::TempDir(std::string_view tag) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const fs::path candidate = fs::temp_directory_path() / (std::string(tag) + "-" + std::to_string(rd()));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("could not create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

corpus::RelationInstance make_instance(std::string id, std::string_view marked, corpus::LabelSet labels,
                                       corpus::Split split) {
  corpus::RelationInstance inst;
  inst.id = std::move(id);
  inst.reference_relations = std::move(labels);
  inst.split = split;
  std::string sentence;
  std::size_t i = 0;
  bool found1 = false, found2 = false;
  while (i < marked.size()) {
    const bool first = marked.compare(i, 2, "<<") == 0;
    const bool second = marked.compare(i, 2, "((") == 0;
    if (first || second) {
      const std::size_t close = marked.find(first ? ">>" : "))", i + 2);
      if (close == std::string_view::npos) throw std::invalid_argument("unclosed entity marker");
      corpus::EntitySpan span;
      span.surface = std::string(marked.substr(i + 2, close - i - 2));
      span.char_start = text::codepoint_length(sentence);
      span.char_end = span.char_start + text::codepoint_length(span.surface);
      sentence += span.surface;
      (first ? inst.entity1 : inst.entity2) = span;
      (first ? found1 : found2) = true;
      i = close + 2;
    } else {
      sentence.push_back(marked[i++]);
    }
  }
  if (!found1 || !found2) throw std::invalid_argument("both entity markers are required");
  inst.sentence = std::move(sentence);
  return inst;
}

corpus::LabelSpace fixture_labels() { return corpus::LabelSpace({"advise", "effect", "mechanism", "int"}); }

pipeline::PipelineConfig fixture_config(const fs::path& output_dir) {
  auto config = pipeline::PipelineConfig::load(fixture_dir() / "config.json");
  config.output_dir = output_dir;
  config.cache_dir.reset();
  return config;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(std::string_view name, const std::string& actual) {
  const fs::path path = golden_dir() / name;
  if (const char* flag = std::getenv("EACL_UPDATE_GOLDEN"); flag && std::string_view(flag) == "1") {
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << actual;
  }
  return slurp(path);
}

ScriptedBackend::ScriptedBackend(Script script, std::string name) : script_(std::move(script)), name_(std::move(name)) {}

std::string ScriptedBackend::complete(const std::string& prompt, const backend::DecodingParams& /*params*/) {
  ++calls_;
  {
    std::lock_guard lock(mutex_);
    prompts_.push_back(prompt);
  }
  const auto payload = prompts::extract_payload(prompt);
  return script_(payload ? *payload : corpus::Json::object(), prompt);
}

std::vector<std::string> ScriptedBackend::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

}  // namespace eacl::testing
