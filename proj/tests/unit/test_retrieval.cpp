#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "vlfly/instruction.hpp"
#include "vlfly/retrieval.hpp"
#include "vlfly/rng.hpp"

using namespace vlfly;

namespace {

// Reference signed feature hasher written from the definition, sharing
// nothing with the library beyond the standard library.
std::vector<double> reference_embed(const std::string& text, std::size_t d) {
  std::vector<double> acc(d, 0.0);
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : word) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    acc[h % d] += (h >> 63) ? -1.0 : 1.0;
    word.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  double n = 0.0;
  for (double v : acc) n += v * v;
  n = std::sqrt(n);
  for (double& v : acc) v /= n;
  return acc;
}

double reference_cos(const std::string& a, const std::string& b, std::size_t d) {
  const auto x = reference_embed(a, d), y = reference_embed(b, d);
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += x[i] * y[i];
  return s;
}

Embedding one_hot(std::size_t d, std::size_t k, float sign = 1.0f) {
  std::vector<float> v(d, 0.0f);
  v[k] = sign;
  return Embedding(std::move(v));
}

GoalPoolEntry entry(const std::string& id, Embedding e) { return {id, id, std::move(e), {}}; }

}  // namespace

TEST_CASE("embedder matches the reference implementation") {
  for (const std::string text : {"a photo of a blue backpack", "blue backpack", "pink toy", "apriltag",
                                 "Fly where a student can keep textbooks"}) {
    const Embedding e = embed_text(tokenize(text), 64);
    const auto ref = reference_embed(text, 64);
    REQUIRE(e.dim() == 64);
    for (std::size_t i = 0; i < 64; ++i) CHECK(e.values()[i] == doctest::Approx(ref[i]).epsilon(1e-7));
    CHECK(std::abs(e.norm() - 1.0) < 1e-6);
  }
}

TEST_CASE("embedding similarity orderings") {
  const auto prompt = embed_text(tokenize("a photo of a blue backpack"), 64);
  const double to_backpack = dot(prompt, embed_descriptor("blue backpack", 64));
  const double to_chair = dot(prompt, embed_descriptor("wooden chair", 64));
  CHECK(to_backpack > to_chair);
  CHECK(reference_cos("a photo of a blue backpack", "blue backpack", 64) >
        reference_cos("a photo of a blue backpack", "wooden chair", 64));
  CHECK(dot(embed_descriptor("pink toy", 64), embed_descriptor("apriltag", 64)) < 1.0);
  CHECK(reference_cos("pink toy", "apriltag", 64) < 1.0);
  const auto same = embed_text(tokenize("blue backpack"), 64);
  CHECK(dot(same, same) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(embed_descriptor("blue backpack", 64) == embed_text(tokenize("blue backpack"), 64));
}

TEST_CASE("default items are separable by the hash embedder") {
  // every template prompt prefers its own item over all others
  const auto& items = default_items();
  for (const auto& item : items) {
    const std::string prompt = "a photo of a " + item;
    for (const auto& other : items) {
      if (other == item) continue;
      CHECK(reference_cos(prompt, item, 64) > reference_cos(prompt, other, 64));
    }
  }
}

TEST_CASE("single token embeds as a signed one-hot") {
  const auto t = tokenize("apriltag");
  const Embedding e = embed_text(t, 64);
  const std::size_t k = t.ids[0] % 64;
  for (std::size_t i = 0; i < 64; ++i) CHECK(e.values()[i] == (i == k ? ((t.ids[0] >> 63) ? -1.0f : 1.0f) : 0.0f));
}

TEST_CASE("embedding errors") {
  // a token and its sign-flipped twin cancel: search for a colliding pair
  CHECK(test::error_code_of([] { embed_descriptor("", 64); }) == ErrorCode::EmptyTokenSequence);
  std::optional<std::pair<std::string, std::string>> cancel;
  for (int i = 0; i < 5000 && !cancel; ++i) {
    for (int j = i + 1; j < 5000 && !cancel; ++j) {
      const auto a = fnv1a64("w" + std::to_string(i)), b = fnv1a64("w" + std::to_string(j));
      if (a % 8 == b % 8 && (a >> 63) != (b >> 63)) cancel = {{"w" + std::to_string(i), "w" + std::to_string(j)}};
    }
  }
  REQUIRE(cancel);
  CHECK(test::error_code_of([&] { embed_text(tokenize(cancel->first + " " + cancel->second), 8); }) ==
        ErrorCode::ZeroVector);
  CHECK(test::error_code_of([] { Embedding({0.5f, 0.0f}); }) == ErrorCode::NormViolation);
}

TEST_CASE("scaled dot product closed forms") {
  const RetrievalConfig cfg;  // logit scale 100
  const Embedding t = one_hot(64, 3);
  const std::vector<float> half = [] {
    std::vector<float> v(64, 0.0f);
    v[3] = 0.5f;
    v[7] = std::sqrt(0.75f);
    return v;
  }();
  const GoalPool pool = {entry("same", t), entry("orth", one_hot(64, 9)), entry("half", Embedding(half))};
  const auto s = score_pool(t, pool, cfg);
  CHECK(std::abs(s[0] - 100.0) <= 1e-12);
  CHECK(s[1] == 0.0);
  CHECK(std::abs(s[2] - 50.0) <= 1e-12);
  RetrievalConfig other{3.5, 64};
  CHECK(score_pool(t, {pool[1]}, other)[0] == 0.0);
  CHECK(test::error_code_of([&] { score_pool(one_hot(32, 1), pool, cfg); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("softmax closed forms and stability") {
  auto p = softmax(std::vector<double>{0, 0, 0});
  for (double v : p) CHECK(std::abs(v - 1.0 / 3.0) <= 1e-12);
  p = softmax(std::vector<double>{std::log(2.0), 0.0});
  CHECK(std::abs(p[0] - 2.0 / 3.0) <= 1e-12);
  CHECK(std::abs(p[1] - 1.0 / 3.0) <= 1e-12);
  p = softmax(std::vector<double>{1000.0, 0.0});
  CHECK(std::isfinite(p[0]));
  CHECK(std::abs(p[0] - 1.0) <= 1e-12);
  CHECK(p[1] >= 0.0);
  CHECK(p[1] < 1e-300);
}

TEST_CASE("softmax properties on random scores") {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> s(static_cast<std::size_t>(rng.uniform_int(1, 12)));
    for (double& v : s) v = rng.uniform(-1000, 1000);
    const auto p = softmax(s);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(argmax(p) == argmax(s));
    // shifting every score changes nothing
    auto shifted = s;
    for (double& v : shifted) v += 123.25;
    const auto q = softmax(shifted);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(std::abs(p[k] - q[k]) <= 1e-12);
  }
}

TEST_CASE("retrieval picks the described goal") {
  const GoalPool pool = make_descriptor_pool({"blue backpack", "pink toy", "apriltag"}, 64);
  const RetrievalConfig cfg;
  const auto r = retrieve({"a photo of a blue backpack", PromptSource::Template, "blue backpack"}, pool, cfg);
  CHECK(r.best_id == "blue backpack");
  CHECK(r.best_index == 0);
  double sum = 0.0;
  for (double p : r.probs) sum += p;
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("retrieval edge cases") {
  const RetrievalConfig cfg;
  const GoalPool one = make_descriptor_pool({"pink toy"}, 64);
  const auto r = retrieve({"anything at all", PromptSource::Passthrough, {}}, one, cfg);
  CHECK(r.best_index == 0);
  CHECK(r.probs == std::vector<double>{1.0});
  GoalPool tied = {entry("a", one_hot(64, 1)), entry("b", one_hot(64, 1))};
  const auto t = retrieve({"x", PromptSource::Passthrough, {}}, tied, cfg);
  CHECK(t.best_index == 0);
  CHECK(test::error_code_of([&] { retrieve({"x", PromptSource::Passthrough, {}}, GoalPool{}, cfg); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("logit scale and permutation behaviour") {
  const GoalPool pool = make_descriptor_pool({"blue backpack", "pink toy", "apriltag", "red ball"}, 64);
  const Prompt prompt{"a photo of a pink toy", PromptSource::Template, "pink toy"};
  double prev_max = 0.0;
  std::size_t best = 0;
  for (double scale : {0.5, 1.0, 10.0, 100.0, 1000.0}) {
    const auto r = retrieve(prompt, pool, {scale, 64});
    if (scale == 0.5) best = r.best_index;
    CHECK(r.best_index == best);
    const double m = *std::max_element(r.probs.begin(), r.probs.end());
    CHECK(m >= prev_max);
    prev_max = m;
  }
  const GoalPool reversed(pool.rbegin(), pool.rend());
  const auto a = retrieve(prompt, pool, {});
  const auto b = retrieve(prompt, reversed, {});
  CHECK(a.best_id == b.best_id);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(a.scores[i] == b.scores[pool.size() - 1 - i]);
    CHECK(a.probs[i] == b.probs[pool.size() - 1 - i]);
  }
}

TEST_CASE("pool file round trip is bit exact") {
  GoalPool pool = make_descriptor_pool({"blue backpack", "pink toy", "apriltag"}, 64);
  const auto path = std::filesystem::temp_directory_path() / "vlfly_pool_roundtrip.bin";
  write_pool(pool, path);
  const GoalPool back = read_pool(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id == pool[i].id);
    CHECK(back[i].descriptor == pool[i].descriptor);
    CHECK(std::memcmp(back[i].embedding.values().data(), pool[i].embedding.values().data(), 64 * sizeof(float)) == 0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("pool file layout") {
  const GoalPool pool = {entry("ab", one_hot(8, 2, -1.0f))};
  const auto bytes = encode_pool(pool);
  // magic, version, dim, count, id, descriptor, 8 floats
  REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 2 + 2 + 2 + 2 + 8 * 4);
  CHECK(std::string(bytes.data(), 4) == "VLFE");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 8);
  CHECK(bytes[12] == 1);
  CHECK(bytes[16] == 2);
  CHECK(std::string(&bytes[18], 2) == "ab");
  float f;
  std::memcpy(&f, &bytes[24 + 2 * 4], 4);
  CHECK(f == -1.0f);
}

TEST_CASE("corrupt pool files raise specific errors") {
  const GoalPool pool = make_descriptor_pool({"blue backpack", "pink toy", "apriltag"}, 64);
  const auto good = encode_pool(pool);

  auto bad = good;
  bad[0] = 'X';
  CHECK(test::error_code_of([&] { decode_pool(bad); }) == ErrorCode::BadMagic);

  bad = good;
  bad[4] = 2;
  CHECK(test::error_code_of([&] { decode_pool(bad); }) == ErrorCode::VersionUnsupported);

  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, std::size_t{17}, good.size() - 1}) {
    std::vector<char> t(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK(test::error_code_of([&] { decode_pool(t); }) == ErrorCode::TruncatedFile);
  }

  // halve every value of the second entry
  bad = good;
  const std::size_t second = 16 + (2 + 13 + 2 + 13 + 64 * 4) + 2 + 8 + 2 + 8;
  for (std::size_t k = 0; k < 64; ++k) {
    float v;
    std::memcpy(&v, &bad[second + 4 * k], 4);
    v *= 0.5f;
    std::memcpy(&bad[second + 4 * k], &v, 4);
  }
  try {
    decode_pool(bad);
    FAIL("expected norm violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NormViolation);
    CHECK(std::string(e.what()).find("pink toy") != std::string::npos);
  }

  bad = good;
  bad[8] = 0;
  CHECK(test::error_code_of([&] { decode_pool(bad); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("structured error lines are json") {
  const Error e(ErrorCode::BadMagic, "pool.bin: \"XYZW\"");
  CHECK(e.structured() == R"({"detail":"pool.bin: \"XYZW\"","error":"bad-magic"})");
}
