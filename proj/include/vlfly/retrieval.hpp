#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlfly/instruction.hpp"

namespace vlfly {

/// Unit-norm embedding. Values are single precision so that pool files
/// round-trip exactly.
class Embedding {
 public:
  Embedding() = default;
  /// Validates finiteness and unit norm (tolerance `norm_tol`).
  explicit Embedding(std::vector<float> values, double norm_tol = 1e-6);

  std::size_t dim() const { return values_.size(); }
  std::span<const float> values() const { return values_; }
  double norm() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<float> values_;
};

double dot(const Embedding& a, const Embedding& b);

struct GoalPoolEntry {
  std::string id;
  std::string descriptor;
  Embedding embedding;
  std::optional<std::string> goal_link;  ///< GoalObject id, not persisted
  friend bool operator==(const GoalPoolEntry&, const GoalPoolEntry&) = default;
};

using GoalPool = std::vector<GoalPoolEntry>;

struct RetrievalConfig {
  double logit_scale = 100.0;
  std::size_t dim = 64;
};

struct RetrievalResult {
  std::vector<double> scores;
  std::vector<double> probs;
  std::size_t best_index = 0;
  std::string best_id;
};

/// Signed feature hashing: bucket = id mod d, sign from the top bit of id.
Embedding embed_text(const TokenSeq& tokens, std::size_t dim);

Embedding embed_descriptor(const std::string& descriptor, std::size_t dim);

/// logit_scale * <t, v_j> in pool order.
std::vector<double> score_pool(const Embedding& query, const GoalPool& pool,
                               const RetrievalConfig& cfg);

std::vector<double> softmax(std::span<const double> scores);

/// First index of the maximum.
std::size_t argmax(std::span<const double> values);

RetrievalResult retrieve(const Prompt& prompt, const GoalPool& pool, const RetrievalConfig& cfg);

/// Pool file layout (little-endian): "VLFE", u32 version = 1, u32 dim,
/// u32 count, then per entry u16 id length + id, u16 descriptor length +
/// descriptor, dim x f32.
void write_pool(const GoalPool& pool, const std::filesystem::path& path);
GoalPool read_pool(const std::filesystem::path& path);

std::vector<char> encode_pool(const GoalPool& pool);
GoalPool decode_pool(std::span<const char> bytes);

GoalPool make_descriptor_pool(const std::vector<std::string>& descriptors, std::size_t dim);

}  // namespace vlfly
