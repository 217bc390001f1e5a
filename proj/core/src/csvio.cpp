#include "crossway/csvio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "crossway/errors.hpp"

namespace crossway {

namespace {

double parse_double(const std::string& text, const std::string& where) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw validation_error(where, "not a number: '" + text + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& text, const std::string& where) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const long long value = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw validation_error(where, "not an integer: '" + text + "'");
  }
  return static_cast<std::int64_t>(value);
}

std::string line_field(const std::string& label, std::size_t line_no) {
  return label + " line " + std::to_string(line_no);
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw runtime_fault("cannot open for writing: " + path);
  return out;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw runtime_fault("cannot open for reading: " + path);
  return in;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  // Shortest representation that parses back to the exact same double.
  char buffer[40];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

void write_trajectory_csv(std::ostream& out,
                          const std::vector<trajectory_row>& rows) {
  out << kTrajectoryHeader << '\n';
  for (const auto& row : rows) {
    out << format_double(row.t_s) << ',' << row.vehicle_id << ','
        << format_double(row.p_m) << ',' << format_double(row.v_mps) << ','
        << format_double(row.u_mps2) << ',' << format_double(row.e_pred_m)
        << ',' << (row.in_ca ? 1 : 0) << ',' << row.global_seq_used << '\n';
  }
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<trajectory_row>& rows) {
  auto out = open_for_write(path);
  write_trajectory_csv(out, rows);
}

std::vector<trajectory_row> read_trajectory_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) {
    throw validation_error("trajectory header", "empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) {
    throw validation_error("trajectory header",
                           "expected '" + std::string(kTrajectoryHeader) +
                               "', got '" + line + "'");
  }
  std::vector<trajectory_row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    const std::string where = line_field("trajectory", line_no);
    if (fields.size() != 8) {
      throw validation_error(where, "expected 8 columns, got " +
                                        std::to_string(fields.size()));
    }
    trajectory_row row;
    row.t_s = parse_double(fields[0], where);
    row.vehicle_id = fields[1];
    row.p_m = parse_double(fields[2], where);
    row.v_mps = parse_double(fields[3], where);
    row.u_mps2 = parse_double(fields[4], where);
    row.e_pred_m = fields[5] == "nan"
                       ? std::nan("")
                       : parse_double(fields[5], where);
    if (fields[6] != "0" && fields[6] != "1") {
      throw validation_error(where, "in_ca must be 0 or 1");
    }
    row.in_ca = fields[6] == "1";
    row.global_seq_used = parse_int(fields[7], where);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<trajectory_row> read_trajectory_csv(const std::string& path) {
  auto in = open_for_read(path);
  return read_trajectory_csv(in);
}

void write_delay_csv(std::ostream& out, const std::vector<delay_row>& rows) {
  out << kDelayHeader << '\n';
  for (const auto& row : rows) {
    out << row.timestamp_ms << ',' << row.vehicle_id << ','
        << to_string(row.kind) << ',' << format_double(row.value_ms) << '\n';
  }
}

void write_delay_csv(const std::string& path,
                     const std::vector<delay_row>& rows) {
  auto out = open_for_write(path);
  write_delay_csv(out, rows);
}

std::vector<delay_row> read_delay_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) {
    throw validation_error("delay header", "empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDelayHeader) {
    throw validation_error("delay header",
                           "expected '" + std::string(kDelayHeader) +
                               "', got '" + line + "'");
  }
  std::vector<delay_row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    const std::string where = line_field("delay", line_no);
    if (fields.size() != 4) {
      throw validation_error(where, "expected 4 columns, got " +
                                        std::to_string(fields.size()));
    }
    delay_row row;
    row.timestamp_ms = parse_int(fields[0], where);
    row.vehicle_id = fields[1];
    const auto kind = delay_kind_from_string(fields[2]);
    if (!kind) throw validation_error(where, "unknown kind '" + fields[2] + "'");
    row.kind = *kind;
    row.value_ms = parse_double(fields[3], where);
    if (row.value_ms < 0) {
      throw validation_error(where, "value_ms must be >= 0");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<delay_row> read_delay_csv(const std::string& path) {
  auto in = open_for_read(path);
  return read_delay_csv(in);
}

}  // namespace crossway
