#pragma once

#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dipolar/dynamics.hpp"
#include "dipolar/error.hpp"

namespace dipolar {

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated table with optional leading `#` comment lines.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void comment(const std::string& line) { comments_.push_back(line); }

  void add_row(const std::vector<double>& values) {
    if (values.size() != header_.size()) throw InvalidInput("CSV row width does not match header");
    std::string row;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) row += ',';
      row += format_double(values[i]);
    }
    rows_.push_back(std::move(row));
  }

  std::size_t rows() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    for (const auto& c : comments_) out += "# " + c + "\n";
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += '\n';
    for (const auto& r : rows_) out += r + '\n';
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> comments_;
  std::vector<std::string> rows_;
};

/// Trajectory columns: t, Re/Im C0, Re/Im C1, Re/Im C2, F, theta, |cos(theta/2)|.
inline CsvTable trajectory_table(const Trajectory& tr) {
  CsvTable t({"t", "re_c0", "im_c0", "re_c1", "im_c1", "re_c2", "im_c2", "fidelity", "theta", "abs_cos_half_theta"});
  for (std::size_t i = 0; i < tr.size(); ++i)
    t.add_row({tr.times[i], tr.c0[i].real(), tr.c0[i].imag(), tr.c1[i].real(), tr.c1[i].imag(), tr.c2[i].real(),
               tr.c2[i].imag(), tr.fidelity[i], tr.theta.empty() ? 0.0 : tr.theta[i],
               tr.cos_half.empty() ? 1.0 : std::abs(tr.cos_half[i])});
  return t;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace dipolar
