#include "crossway/event_log.hpp"

#include <ostream>

namespace crossway {

void event_log::log(std::int64_t ts_ms, std::string_view event,
                    fields_t fields) {
  std::string line = "ts_ms=" + std::to_string(ts_ms) + " event=";
  line += event;
  for (const auto& [k, v] : fields) {
    line += ' ';
    line += k;
    line += '=';
    line += v;
  }
  std::lock_guard lock(mu_);
  lines_.push_back(line);
  if (sink_ != nullptr) {
    *sink_ << line << '\n';
    sink_->flush();
  }
}

std::vector<std::string> event_log::lines() const {
  std::lock_guard lock(mu_);
  return lines_;
}

void event_log::dump(std::ostream& os) const {
  for (const auto& line : lines()) {
    os << line << '\n';
  }
}

void event_log::set_sink(std::ostream* sink) {
  std::lock_guard lock(mu_);
  sink_ = sink;
}

std::string event_log::field(const std::string& line, std::string_view key) {
  const std::string needle = std::string(key) + "=";
  std::size_t pos = 0;
  while (true) {
    pos = line.find(needle, pos);
    if (pos == std::string::npos) return {};
    if (pos == 0 || line[pos - 1] == ' ') break;
    pos += needle.size();
  }
  const std::size_t start = pos + needle.size();
  const std::size_t end = line.find(' ', start);
  return line.substr(start, end == std::string::npos ? end : end - start);
}

}  // namespace crossway
