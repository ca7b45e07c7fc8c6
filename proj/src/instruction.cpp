#include "vlfly/instruction.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vlfly/error.hpp"

namespace vlfly {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      cur += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct PhraseMatch {
  std::size_t length = 0;
  std::size_t position = 0;
  std::string phrase;
};

/// Longest token-subsequence match; ties go to the earliest position, then
/// the lexicographically smaller phrase.
std::optional<PhraseMatch> best_match(const std::vector<std::string>& haystack,
                                      const std::vector<std::string>& phrases) {
  std::optional<PhraseMatch> best;
  for (const auto& phrase : phrases) {
    const auto needle = split_words(phrase);
    if (needle.empty() || needle.size() > haystack.size()) continue;
    for (std::size_t pos = 0; pos + needle.size() <= haystack.size(); ++pos) {
      if (!std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(pos))) {
        continue;
      }
      PhraseMatch m{needle.size(), pos, phrase};
      if (!best || m.length > best->length ||
          (m.length == best->length &&
           (m.position < best->position ||
            (m.position == best->position && m.phrase < best->phrase)))) {
        best = std::move(m);
      }
      break;  // later occurrences of the same phrase never win
    }
  }
  return best;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Instruction::Instruction(std::string raw) : raw_(std::move(raw)) {
  if (trim(raw_).empty()) throw Error(ErrorCode::InvalidArgument, "instruction is blank");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  seq.tokens = split_words(text);
  if (seq.tokens.empty()) {
    throw Error(ErrorCode::EmptyTokenSequence,
                "no alphanumeric content in '" + std::string(text) + "'");
  }
  seq.ids.reserve(seq.tokens.size());
  for (const auto& t : seq.tokens) seq.ids.push_back(fnv1a64(t));
  return seq;
}

std::string_view to_string(PromptSource source) {
  switch (source) {
    case PromptSource::Template: return "template";
    case PromptSource::Affordance: return "affordance";
    case PromptSource::Passthrough: return "passthrough";
    case PromptSource::ExternalLLM: return "external-llm";
  }
  return "passthrough";
}

AffordanceTable::AffordanceTable(const std::map<std::string, std::string>& entries) {
  for (const auto& [cue, item] : entries) {
    const auto words = split_words(cue);
    if (words.empty()) throw Error(ErrorCode::InvalidArgument, "blank affordance cue");
    entries_[join(words)] = item;
  }
}

void AffordanceTable::validate(const std::vector<std::string>& items) const {
  for (const auto& [cue, item] : entries_) {
    if (std::find(items.begin(), items.end(), item) == items.end()) {
      throw Error(ErrorCode::InvalidArgument,
                  "affordance '" + cue + "' maps to unknown item '" + item + "'");
    }
  }
}

AffordanceTable AffordanceTable::builtin() {
  return AffordanceTable({
      {"keep textbooks", "blue backpack"},
      {"carry books", "blue backpack"},
      {"school bag", "blue backpack"},
      {"pack for a hike", "blue backpack"},
      {"child would play", "pink toy"},
      {"kid play", "pink toy"},
      {"plaything", "pink toy"},
      {"fiducial marker", "apriltag"},
      {"visual marker", "apriltag"},
      {"calibration target", "apriltag"},
      {"sit down", "wooden chair"},
      {"take a seat", "wooden chair"},
      {"store books", "bookshelf"},
      {"find a novel", "bookshelf"},
      {"shelve", "bookshelf"},
      {"stay dry", "yellow umbrella"},
      {"when it rains", "yellow umbrella"},
      {"drink coffee", "white mug"},
      {"cup of tea", "white mug"},
      {"check email", "black laptop"},
      {"write code", "black laptop"},
      {"water it", "green plant"},
      {"play catch", "red ball"},
  });
}

AffordanceTable AffordanceTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open affordance table " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    return AffordanceTable(j.get<std::map<std::string, std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

std::vector<std::string> load_items(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open item list " + path.string());
  try {
    auto items = nlohmann::json::parse(in).get<std::vector<std::string>>();
    if (items.empty()) throw Error(ErrorCode::ParseError, path.string() + ": empty item list");
    return items;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

std::string template_prompt(std::string_view item) { return "a photo of a " + std::string(item); }

Prompt encode_instruction(const Instruction& instr, const std::vector<std::string>& items,
                          const AffordanceTable& table) {
  if (items.empty()) throw Error(ErrorCode::InvalidArgument, "item list is empty");
  const auto words = split_words(instr.raw());

  if (auto m = best_match(words, items)) {
    return Prompt{template_prompt(m->phrase), PromptSource::Template, m->phrase};
  }
  std::vector<std::string> cues;
  cues.reserve(table.entries().size());
  for (const auto& [cue, item] : table.entries()) cues.push_back(cue);
  if (auto m = best_match(words, cues)) {
    const std::string& item = table.entries().at(m->phrase);
    return Prompt{template_prompt(item), PromptSource::Affordance, item};
  }
  return passthrough_prompt(instr);
}

Prompt passthrough_prompt(const Instruction& instr) {
  return Prompt{instr.raw(), PromptSource::Passthrough, std::nullopt};
}

// ---------------------------------------------------------------------------
// external provider

namespace {

struct ProviderReply {
  bool completed = false;  ///< false on timeout / spawn failure / no output
  std::string line;
};

ProviderReply run_provider(const std::string& command, const std::string& request,
                           std::chrono::milliseconds timeout) {
  int to_child[2], from_child[2];
  if (pipe(to_child) != 0) return {};
  if (pipe(from_child) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    return {};
  }
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
    return {};
  }
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);

  // the request is one short line; a closed pipe just means the provider died
  struct sigaction ignore {}, previous {};
  ignore.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ignore, &previous);
  const std::string payload = request + "\n";
  std::size_t written = 0;
  while (written < payload.size()) {
    const ssize_t n = write(to_child[1], payload.data() + written, payload.size() - written);
    if (n <= 0) break;
    written += static_cast<std::size_t>(n);
  }
  close(to_child[1]);
  sigaction(SIGPIPE, &previous, nullptr);

  ProviderReply reply;
  std::string buffer;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool eof = false;
  while (!eof && buffer.find('\n') == std::string::npos) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) break;
    pollfd pfd{from_child[0], POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready <= 0) break;
    char chunk[512];
    const ssize_t n = read(from_child[0], chunk, sizeof chunk);
    if (n <= 0) {
      eof = true;
    } else {
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
  close(from_child[0]);

  int status = 0;
  pid_t done = waitpid(pid, &status, WNOHANG);
  while (done == 0 && eof && std::chrono::steady_clock::now() < deadline) {
    usleep(2000);
    done = waitpid(pid, &status, WNOHANG);
  }
  if (done == 0) {
    kill(pid, SIGKILL);
    waitpid(pid, &status, 0);
  }
  const bool has_line = buffer.find('\n') != std::string::npos;
  const bool exited_ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  if (has_line || (eof && exited_ok)) {
    reply.completed = true;
    reply.line = buffer.substr(0, buffer.find('\n'));
  }
  return reply;
}

}  // namespace

Prompt external_prompt(const Instruction& instr, const LlmProvider& provider,
                       const std::vector<std::string>& items, const AffordanceTable& table) {
  const nlohmann::json request = {{"instruction", instr.raw()}, {"items", items}};
  const ProviderReply reply = run_provider(provider.command, request.dump(), provider.timeout);
  if (!reply.completed) {
    if (provider.fallback) return encode_instruction(instr, items, table);
    throw Error(ErrorCode::ProviderTimeout, "provider '" + provider.command +
                                                "' gave no reply within " +
                                                std::to_string(provider.timeout.count()) + " ms");
  }
  std::string line = trim(reply.line);
  if (line.empty()) {
    if (provider.fallback) return encode_instruction(instr, items, table);
    throw Error(ErrorCode::MalformedReply, "provider '" + provider.command + "' returned an empty line");
  }
  return Prompt{std::move(line), PromptSource::ExternalLLM, std::nullopt};
}

}  // namespace vlfly
