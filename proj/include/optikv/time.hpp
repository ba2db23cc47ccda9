#pragma once

#include <chrono>
#include <cstdint>

namespace optikv {

using Millis = std::int64_t;

// Distinguished epsilon meaning "no synchronization assumption"; this is
// also its wire encoding.
inline constexpr Millis kEpsilonInfinity = -1;

inline bool epsilon_finite(Millis epsilon) { return epsilon >= 0; }

class ClockSource {
 public:
  virtual ~ClockSource() = default;
  virtual Millis now_ms() = 0;
};

class SystemClock final : public ClockSource {
 public:
  Millis now_ms() override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch())
        .count();
  }
};

}  // namespace optikv
