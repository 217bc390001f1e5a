#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crossway {

// A value is outside the mathematical domain of an operation (non-finite
// state, exponent out of range, zero rank offset, ...).
struct domain_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A named input field failed validation. `field` is a dotted path such as
// "controller.alpha" or "gnss_heading" so callers can surface it verbatim.
struct validation_error : std::invalid_argument {
  validation_error(std::string field_path, const std::string& what)
      : std::invalid_argument("field " + field_path + ": " + what),
        field(std::move(field_path)) {}
  std::string field;
};

// The operation was invoked on an object wired up in a way that can never
// work (empty neighbor set, disconnected graph without an override, ...).
struct configuration_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raw bytes could not be parsed. `byte_offset` points at the first byte the
// parser could not make sense of.
struct decode_error : std::runtime_error {
  decode_error(std::size_t offset, const std::string& what)
      : std::runtime_error("decode error at byte " + std::to_string(offset) +
                           ": " + what),
        byte_offset(offset) {}
  std::size_t byte_offset;
};

// Not enough samples to compute the requested statistic.
struct insufficient_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A diagnostic was requested in a mode where it is not mathematically valid.
struct diagnostic_invalid_error : std::logic_error {
  using std::logic_error::logic_error;
};

// A peer broke the wire protocol (status before subscription, ...). The
// session carrying the offending message must be closed.
struct protocol_violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The run itself failed: non-finite input, divergence guard, counter
// overflow, transport breakdown mid-run.
struct runtime_fault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace crossway
