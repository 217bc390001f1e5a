#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace crossway {

// Append-only structured log: one "ts_ms=... event=... k=v ..." line per
// entry. Kept machine-parseable so reports and tests can grep it; optional
// sink tees every line to a stream as it is appended (used by the server
// processes). Thread-safe.
class event_log {
 public:
  using fields_t =
      std::initializer_list<std::pair<std::string_view, std::string>>;

  void log(std::int64_t ts_ms, std::string_view event, fields_t fields = {});

  std::vector<std::string> lines() const;
  void dump(std::ostream& os) const;
  void set_sink(std::ostream* sink);

  // Parses "k=v" out of a logged line; empty if the key is absent.
  static std::string field(const std::string& line, std::string_view key);

 private:
  mutable std::mutex mu_;
  std::vector<std::string> lines_;
  std::ostream* sink_ = nullptr;
};

}  // namespace crossway
