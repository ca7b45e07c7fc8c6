#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vlfly {

/// Natural-language instruction; construction rejects blank text.
class Instruction {
 public:
  explicit Instruction(std::string raw);
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

struct TokenSeq {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> ids;  ///< FNV-1a 64 of each token
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercases ASCII letters and splits on runs of non-alphanumeric bytes.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words survive intact.
TokenSeq tokenize(std::string_view text);

enum class PromptSource { Template, Affordance, Passthrough, ExternalLLM };

std::string_view to_string(PromptSource source);

struct Prompt {
  std::string text;
  PromptSource source = PromptSource::Passthrough;
  std::optional<std::string> matched_item;
  friend bool operator==(const Prompt&, const Prompt&) = default;
};

/// Cue phrase -> item. Phrases are stored in normalized (token-joined) form.
class AffordanceTable {
 public:
  AffordanceTable() = default;
  explicit AffordanceTable(const std::map<std::string, std::string>& entries);

  const std::map<std::string, std::string>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Throws InvalidArgument when an entry maps to an item missing from `items`.
  void validate(const std::vector<std::string>& items) const;

  static AffordanceTable builtin();
  static AffordanceTable load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> entries_;
};

std::vector<std::string> load_items(const std::filesystem::path& path);

std::string template_prompt(std::string_view item);

Prompt encode_instruction(const Instruction& instr, const std::vector<std::string>& items,
                          const AffordanceTable& table);

/// Raw text handed straight to retrieval (the no-prompting ablation).
Prompt passthrough_prompt(const Instruction& instr);

/// External command speaking the one-line JSON protocol:
/// stdin  {"instruction": "...", "items": [...]}\n
/// stdout <prompt>\n
struct LlmProvider {
  std::string command;  ///< run through /bin/sh -c
  std::chrono::milliseconds timeout{10000};
  bool fallback = true;
};

Prompt external_prompt(const Instruction& instr, const LlmProvider& provider,
                       const std::vector<std::string>& items, const AffordanceTable& table);

}  // namespace vlfly
