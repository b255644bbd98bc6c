#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace ptqm {

enum class ErrorKind {
  invalid_argument,
  bracket,
  unsupported_regime,
  numerical_failure,
  not_pt_eigenfunction,
  inconsistency,
  c_undefined,
  degenerate,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library. `value` carries a payload where the
// failure has one: the last secant iterate for numerical_failure, the
// coalesced eigenvalue for degenerate.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::optional<std::complex<double>> value = std::nullopt)
      : std::runtime_error(what), kind_(kind), value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::optional<std::complex<double>>& value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  std::optional<std::complex<double>> value_;
};

}  // namespace ptqm
