#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "optikv/time.hpp"
#include "optikv/wire.hpp"

namespace optikv {

/// What a protocol participant needs from its host: message egress, timers,
/// and a clock. Implemented over the simulator and over TCP; all protocol
/// logic is written against this.
class NodeEnv {
 public:
  virtual ~NodeEnv() = default;
  virtual const std::string& id() const = 0;
  virtual void send(const std::string& to, Message m) = 0;
  virtual std::uint64_t set_timer(Millis delay, std::function<void()> fn) = 0;
  virtual void cancel_timer(std::uint64_t id) = 0;
  virtual Millis now_ms() = 0;
};

}  // namespace optikv
