#pragma once

// Builds index-paired prompt lists by substituting a keyword or a concept
// word into context templates. Text only; encoding happens elsewhere.

#include <filesystem>
#include <string>
#include <vector>

namespace tea {

/// A context with either one "{}" slot or numbered slots "{1}", "{2}", ...
/// (each appearing exactly once) for multi-concept prompts.
class ContextTemplate {
 public:
  /// Throws MalformedTemplate when the slot structure is invalid.
  explicit ContextTemplate(std::string text);

  const std::string& text() const noexcept { return text_; }
  /// 1 for "{}" templates, k for templates using {1}..{k}.
  std::size_t slot_count() const noexcept { return slots_; }
  bool numbered() const noexcept { return numbered_; }

  /// Substitutes the single slot. Throws MalformedTemplate on numbered templates.
  std::string fill(const std::string& word) const;
  /// Substitutes {1}..{k} in order. Throws MalformedTemplate on a count mismatch.
  std::string fill(const std::vector<std::string>& words) const;

 private:
  std::string text_;
  std::size_t slots_ = 0;
  bool numbered_ = false;
};

enum class SetKind { contextual, simple };
enum class SlotFill { keyword, concept_word };

struct PromptSetSpec {
  std::vector<ContextTemplate> templates;
  std::string keyword;  ///< surface form of the learned token, e.g. "sks"
  std::string concept_word;  ///< reference concept, e.g. "man"
  SetKind set_kind = SetKind::contextual;

  void validate() const;
};

/// One prompt per template, in template order, with the slot filled by the
/// keyword or the concept word.
std::vector<std::string> construct(const PromptSetSpec& spec, SlotFill use);

/// One template per line; blank lines and lines starting with '#' are skipped.
/// Errors name the 1-based line number.
std::vector<ContextTemplate> load_templates(const std::filesystem::path& path);

/// Writes one prompt per line (UTF-8, '\n' terminated).
void write_prompts(const std::vector<std::string>& prompts, const std::filesystem::path& path);

}  // namespace tea
