#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace epiwave {

// Bad input: a precondition on user-supplied data does not hold.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed. `detail` is a small JSON document with the
// quantities needed to diagnose it (last residual, offending node, ...).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::string detail = "{}")
      : std::runtime_error(what), detail_(std::move(detail)) {}
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace epiwave
