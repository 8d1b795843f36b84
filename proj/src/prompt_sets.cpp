#include "tea/prompt_sets.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "tea/error.hpp"
#include "tea/io_formats.hpp"

namespace tea {

namespace {

struct Slot {
  std::size_t pos;
  std::size_t len;
  std::size_t number;  // 0 for "{}"
};

std::vector<Slot> find_slots(const std::string& text) {
  std::vector<Slot> slots;
  std::size_t i = 0;
  while ((i = text.find('{', i)) != std::string::npos) {
    const std::size_t close = text.find('}', i + 1);
    if (close == std::string::npos) break;
    const std::string inner = text.substr(i + 1, close - i - 1);
    if (inner.empty()) {
      slots.push_back({i, 2, 0});
      i = close + 1;
      continue;
    }
    if (inner.find_first_not_of("0123456789") == std::string::npos && inner.size() <= 3 &&
        inner[0] != '0') {
      slots.push_back({i, close - i + 1, static_cast<std::size_t>(std::stoul(inner))});
      i = close + 1;
      continue;
    }
    ++i;  // literal brace
  }
  return slots;
}

std::string substitute(const std::string& text, const std::vector<Slot>& slots,
                       const std::vector<std::string>& words) {
  std::string out;
  std::size_t cursor = 0;
  for (const auto& s : slots) {
    out.append(text, cursor, s.pos - cursor);
    out += words[s.number == 0 ? 0 : s.number - 1];
    cursor = s.pos + s.len;
  }
  out.append(text, cursor, std::string::npos);
  return out;
}

}  // namespace

ContextTemplate::ContextTemplate(std::string text) : text_(std::move(text)) {
  const auto slots = find_slots(text_);
  std::size_t plain = 0;
  std::map<std::size_t, std::size_t> numbered;
  for (const auto& s : slots) {
    if (s.number == 0) {
      ++plain;
    } else {
      ++numbered[s.number];
    }
  }
  if (plain > 0 && !numbered.empty()) {
    throw Error(ErrorCode::MalformedTemplate, "template mixes '{}' with numbered slots: " + text_);
  }
  if (plain == 1) {
    slots_ = 1;
    return;
  }
  if (plain > 1) {
    throw Error(ErrorCode::MalformedTemplate,
                "template has " + std::to_string(plain) + " '{}' slots, expected one: " + text_);
  }
  if (numbered.empty()) {
    throw Error(ErrorCode::MalformedTemplate, "template has no '{}' slot: " + text_);
  }
  std::size_t expected = 1;
  for (const auto& [number, count] : numbered) {
    if (number != expected || count != 1) {
      throw Error(ErrorCode::MalformedTemplate,
                  "numbered slots must be {1}..{k}, each used once: " + text_);
    }
    ++expected;
  }
  numbered_ = true;
  slots_ = numbered.size();
}

std::string ContextTemplate::fill(const std::string& word) const {
  if (numbered_) {
    throw Error(ErrorCode::MalformedTemplate,
                "template with " + std::to_string(slots_) + " numbered slots needs that many words");
  }
  return substitute(text_, find_slots(text_), {word});
}

std::string ContextTemplate::fill(const std::vector<std::string>& words) const {
  if (words.size() != slots_) {
    throw Error(ErrorCode::MalformedTemplate, "template has " + std::to_string(slots_) +
                                                  " slots, got " + std::to_string(words.size()) +
                                                  " words");
  }
  return substitute(text_, find_slots(text_), words);
}

void PromptSetSpec::validate() const {
  if (templates.empty()) throw Error(ErrorCode::InvalidParameter, "prompt set needs templates");
  if (keyword.empty() || concept_word.empty()) {
    throw Error(ErrorCode::InvalidParameter, "keyword and concept must be non-empty");
  }
}

std::vector<std::string> construct(const PromptSetSpec& spec, SlotFill use) {
  spec.validate();
  const std::string& word = use == SlotFill::keyword ? spec.keyword : spec.concept_word;
  std::vector<std::string> out;
  out.reserve(spec.templates.size());
  for (const auto& t : spec.templates) out.push_back(t.fill(word));
  return out;
}

std::vector<ContextTemplate> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open template file " + path.string());
  std::vector<ContextTemplate> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t")] == '#') continue;
    try {
      out.emplace_back(line);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedTemplate,
                  path.string() + " line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failure on " + path.string());
  return out;
}

void write_prompts(const std::vector<std::string>& prompts, const std::filesystem::path& path) {
  std::ostringstream buf;
  for (const auto& p : prompts) buf << p << '\n';
  write_file_atomic(path, buf.str());
}

}  // namespace tea
