#pragma once

#include <stdexcept>
#include <string>

namespace scl {

enum class errc {
  dimension_mismatch,
  non_finite,
  invalid_argument,
  not_on_boundary,
  missing_oracle,
  config,
  io,
  runtime_abort,
};

// All recoverable failures carry a code plus a human-readable message that
// names the offending field/point/value.
class Error : public std::runtime_error {
public:
  Error(errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, std::string msg) { throw Error(code, std::move(msg)); }

// const char* overload keeps success paths free of string construction
inline void require(bool cond, errc code, const char* msg) {
  if (!cond) fail(code, msg);
}

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace scl
