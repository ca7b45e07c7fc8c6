#pragma once

#include <cstring>
#include <string>

#include "vlfly/error.hpp"
#include "vlfly/world.hpp"

namespace test {

inline vlfly::Scenario empty_arena(double size, vlfly::Pose spawn = {}) {
  vlfly::Scenario s;
  s.bounds = {{-size / 2, -size / 2}, {size / 2, size / 2}};
  s.spawn = spawn;
  return s;
}

inline vlfly::Scenario empty_arena(vlfly::Rect bounds, vlfly::Pose spawn) {
  vlfly::Scenario s;
  s.bounds = bounds;
  s.spawn = spawn;
  return s;
}

inline std::uint64_t bits(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

template <typename F>
vlfly::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const vlfly::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a vlfly::Error");
}

}  // namespace test
