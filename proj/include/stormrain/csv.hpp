#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stormrain/error.hpp"

namespace stormrain {

// Minimal CSV support for the plain comma-separated formats used by the
// pipeline: no quoting, no embedded commas, one header line. Parse errors
// carry the 1-based line number.

class CsvReader {
 public:
  explicit CsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open '" + path + "'");
    if (!std::getline(in_, line_)) throw DataError("'" + path + "' is empty");
    strip_cr(line_);
    header_ = split(line_);
    line_no_ = 1;
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::string& path() const { return path_; }
  std::size_t line_number() const { return line_no_; }

  // Requires the header to be exactly `expected` (order included).
  void require_header(const std::vector<std::string>& expected) const {
    if (header_ != expected) {
      std::string want;
      for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
      throw DataError("'" + path_ + "': expected header '" + want + "'");
    }
  }

  bool next(std::vector<std::string>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      strip_cr(line_);
      if (line_.empty()) continue;
      fields = split(line_);
      if (fields.size() != header_.size()) {
        fail("expected " + std::to_string(header_.size()) + " fields, got " +
             std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  double to_double(const std::string& field) const {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0') {
      fail("not a number: '" + field + "'");
    }
    return v;
  }

  long long to_int(const std::string& field) const {
    char* end = nullptr;
    const long long v = std::strtoll(field.c_str(), &end, 10);
    if (end == field.c_str() || *end != '\0') {
      fail("not an integer: '" + field + "'");
    }
    return v;
  }

 private:
  static void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }

  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(',', start);
      if (pos == std::string::npos) {
        out.push_back(line.substr(start));
        break;
      }
      out.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    return out;
  }

  std::string path_;
  std::ifstream in_;
  std::string line_;
  std::vector<std::string> header_;
  std::size_t line_no_ = 0;
};

// Shortest decimal string that parses back to exactly the same double; keeps
// rerun artifacts byte-identical without padding every value to 17 digits.
inline std::string format_double(double v) {
  char buf[64];
  const std::to_chars_result r = std::to_chars(buf, buf + sizeof(buf), v);
  if (r.ec != std::errc{}) throw DataError("cannot format a double");
  return std::string(buf, r.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write '" + path + "'");
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
    width_ = header.size();
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) {
      throw std::invalid_argument("csv row width mismatch");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t width_ = 0;
};

}  // namespace stormrain
