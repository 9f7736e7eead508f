#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace snakelab {

// Shortest stable decimal form: round-trips doubles, '.' separator, no locale.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // Prefer a shorter representation when it round-trips to the same bits.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, x);
    double back = 0.0;
    std::sscanf(shorter, "%lf", &back);
    if (back == x) return shorter;
  }
  return buf;
}

// RAII FILE* with error checks; keeps CSV writers terse.
class CsvFile {
 public:
  explicit CsvFile(const std::string& path) : f_(std::fopen(path.c_str(), "wb")) {
    if (!f_) throw std::runtime_error("cannot open for write: " + path);
  }
  ~CsvFile() {
    if (f_) std::fclose(f_);
  }
  CsvFile(const CsvFile&) = delete;
  CsvFile& operator=(const CsvFile&) = delete;

  void raw(const std::string& s) { std::fwrite(s.data(), 1, s.size(), f_); }
  std::FILE* handle() { return f_; }

 private:
  std::FILE* f_;
};

}  // namespace snakelab
