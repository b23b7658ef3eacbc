#pragma once

#include <stdexcept>
#include <string>

namespace cooplsvi {

/// Raised when the multi-agent message exchange is driven out of order or
/// with inconsistent state (as opposed to plain bad arguments).
class protocol_error : public std::runtime_error {
 public:
  explicit protocol_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cooplsvi
