#pragma once

#include <stdexcept>
#include <string>

namespace smalldev {

// A request that cannot be carried out at all in double precision
// (e.g. sampling atoms whose magnitude overflows the exponent range).
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// The quantity asked for is a divergent series or integral.
class DivergenceError : public std::domain_error {
 public:
  explicit DivergenceError(const std::string& what) : std::domain_error(what) {}
};

// Parameters are legal but outside the range this evaluation mode can
// handle; the message names the alternative.
class ModeError : public std::invalid_argument {
 public:
  explicit ModeError(const std::string& what) : std::invalid_argument(what) {}
};

// Not enough data to produce the requested statistic.
class InsufficientDataError : public std::runtime_error {
 public:
  explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

// Raised from long-running loops when a cancellation token fires.
class CancelledError : public std::runtime_error {
 public:
  explicit CancelledError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace smalldev
