#pragma once
#include <stdexcept>
#include <string>

namespace dtams {

enum class ErrorKind {
  invalid_argument,
  shape_mismatch,
  degenerate_state,
  empty_interval,
  out_of_range,
  malformed_header,
  state_count_mismatch,
  non_invertible,
  non_finite,
  divergence,
  payload_overflow,
  insufficient_symbols,
  fingerprint_mismatch,
  io,
};

const char* kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind_(k) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dtams
