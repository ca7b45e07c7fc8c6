#include "vlfly/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vlfly/error.hpp"

namespace vlfly {

namespace {

constexpr char kPoolMagic[4] = {'V', 'L', 'F', 'E'};
constexpr std::uint32_t kPoolVersion = 1;
constexpr double kPoolNormTol = 1e-4;

double l2_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

}  // namespace

Embedding::Embedding(std::vector<float> values, double norm_tol) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::DimensionMismatch, "embedding has zero dimension");
  for (float x : values_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NormViolation, "embedding has non-finite value");
  }
  const double n = l2_norm(values_);
  if (std::abs(n - 1.0) > norm_tol) {
    throw Error(ErrorCode::NormViolation, "embedding norm " + std::to_string(n) + " is not 1");
  }
}

double Embedding::norm() const { return l2_norm(values_); }

double dot(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding dims " + std::to_string(a.dim()) + " vs " +
                                                  std::to_string(b.dim()));
  }
  double s = 0.0;
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    s += static_cast<double>(av[i]) * static_cast<double>(bv[i]);
  }
  return s;
}

Embedding embed_text(const TokenSeq& tokens, std::size_t dim) {
  if (dim < 8) throw Error(ErrorCode::InvalidArgument, "embedding dim must be >= 8");
  if (tokens.ids.empty()) throw Error(ErrorCode::EmptyTokenSequence, "no tokens to embed");
  std::vector<double> acc(dim, 0.0);
  for (std::uint64_t h : tokens.ids) {
    const double sign = (h >> 63) == 0 ? 1.0 : -1.0;
    acc[h % dim] += sign;
  }
  double n2 = 0.0;
  for (double a : acc) n2 += a * a;
  if (n2 == 0.0) {
    std::string joined;
    for (const auto& t : tokens.tokens) joined += (joined.empty() ? "" : " ") + t;
    throw Error(ErrorCode::ZeroVector, "hashed tokens cancel to zero: [" + joined + "]");
  }
  const double inv = 1.0 / std::sqrt(n2);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
  return Embedding(std::move(out));
}

Embedding embed_descriptor(const std::string& descriptor, std::size_t dim) {
  return embed_text(tokenize(descriptor), dim);
}

std::vector<double> score_pool(const Embedding& query, const GoalPool& pool,
                               const RetrievalConfig& cfg) {
  if (pool.empty()) throw Error(ErrorCode::InvalidArgument, "goal pool is empty");
  if (!(cfg.logit_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "logit_scale must be positive");
  std::vector<double> scores;
  scores.reserve(pool.size());
  for (const auto& entry : pool) scores.push_back(cfg.logit_scale * dot(query, entry.embedding));
  return scores;
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "softmax of empty scores");
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - m);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(
      std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

RetrievalResult retrieve(const Prompt& prompt, const GoalPool& pool, const RetrievalConfig& cfg) {
  if (pool.empty()) throw Error(ErrorCode::InvalidArgument, "goal pool is empty");
  const Embedding query = embed_text(tokenize(prompt.text), pool.front().embedding.dim());
  RetrievalResult r;
  r.scores = score_pool(query, pool, cfg);
  r.probs = softmax(r.scores);
  r.best_index = argmax(r.scores);
  r.best_id = pool[r.best_index].id;
  return r;
}

GoalPool make_descriptor_pool(const std::vector<std::string>& descriptors, std::size_t dim) {
  GoalPool pool;
  for (const auto& d : descriptors) pool.push_back(GoalPoolEntry{d, d, embed_descriptor(d, dim), {}});
  return pool;
}

// ---------------------------------------------------------------------------
// binary pool file

namespace {

template <typename T>
void put_le(std::vector<char>& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

void put_string(std::vector<char>& out, const std::string& s, const char* what) {
  if (s.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, std::string(what) + " longer than 65535 bytes");
  put_le(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(const char* what) {
    const auto len = get<std::uint16_t>(what);
    need(len, what);
    std::string s(bytes_.data() + pos_, len);
    pos_ += len;
    return s;
  }

  std::span<const char> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::TruncatedFile, std::string("file ends inside ") + what + " at byte " +
                                                std::to_string(pos_));
    }
  }

  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<char> encode_pool(const GoalPool& pool) {
  const std::uint32_t dim = pool.empty() ? 0 : static_cast<std::uint32_t>(pool.front().embedding.dim());
  std::vector<char> out(std::begin(kPoolMagic), std::end(kPoolMagic));
  put_le(out, kPoolVersion);
  put_le(out, dim);
  put_le(out, static_cast<std::uint32_t>(pool.size()));
  for (const auto& e : pool) {
    if (e.embedding.dim() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "entry '" + e.id + "' has dim " +
                                                    std::to_string(e.embedding.dim()));
    }
    put_string(out, e.id, "id");
    put_string(out, e.descriptor, "descriptor");
    for (float x : e.embedding.values()) put_le(out, std::bit_cast<std::uint32_t>(x));
  }
  return out;
}

GoalPool decode_pool(std::span<const char> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), std::begin(kPoolMagic))) {
    throw Error(ErrorCode::BadMagic, "pool file does not start with VLFE");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kPoolVersion) {
    throw Error(ErrorCode::VersionUnsupported, "pool version " + std::to_string(version));
  }
  const auto dim = r.get<std::uint32_t>("dim");
  const auto count = r.get<std::uint32_t>("count");
  if (dim == 0 && count > 0) throw Error(ErrorCode::DimensionMismatch, "pool dim is 0");

  GoalPool pool;
  for (std::uint32_t i = 0; i < count; ++i) {
    GoalPoolEntry e;
    e.id = r.get_string("entry id");
    e.descriptor = r.get_string("entry descriptor");
    std::vector<float> values(dim);
    for (auto& v : values) v = std::bit_cast<float>(r.get<std::uint32_t>("embedding"));
    try {
      e.embedding = Embedding(std::move(values), kPoolNormTol);
    } catch (const Error& err) {
      throw Error(ErrorCode::NormViolation, "entry '" + e.id + "': " + err.what());
    }
    for (const auto& prev : pool) {
      if (prev.id == e.id) throw Error(ErrorCode::ParseError, "duplicate entry id '" + e.id + "'");
    }
    pool.push_back(std::move(e));
  }
  if (!r.at_end()) throw Error(ErrorCode::ParseError, "trailing bytes after last pool entry");
  return pool;
}

void write_pool(const GoalPool& pool, const std::filesystem::path& path) {
  const auto bytes = encode_pool(pool);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write pool " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

GoalPool read_pool(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open pool " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pool(bytes);
}

}  // namespace vlfly
