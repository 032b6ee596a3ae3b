#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "vhj/domain.hpp"

namespace vhj::csv {

/// Fixed-precision formatting shared by every artifact so reruns are byte-identical.
inline std::string num(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }

/// Comma-separated rows with a header, '.' decimals and LF line endings.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw InvalidArgument("csv row width does not match header");
    rows_.push_back(std::move(row));
  }

  std::size_t rows() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

  void write(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << str();
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Header cells for node coordinates: "x" or "x,y".
inline std::vector<std::string> coordinate_header(const Grid& g) {
  if (g.dimension() == 1) return {"x"};
  return {"x", "y"};
}

inline void append_coordinates(std::vector<std::string>& row, const Grid& g, std::size_t k) {
  for (int a = 0; a < g.dimension(); ++a) row.push_back(num(g.coord(k, a)));
}

}  // namespace vhj::csv
