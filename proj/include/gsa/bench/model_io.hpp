#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gsa/bench/text.hpp"
#include "gsa/models.hpp"

namespace gsa::bench {

class model_format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class model_version_error : public model_format_error {
 public:
  using model_format_error::model_format_error;
};

inline constexpr std::string_view model_magic = "gsa-model v1";

inline void save_model(const linear_model& m, std::ostream& out) {
  out << model_magic << '\n'
      << to_string(m.kind) << ' ' << m.n_rows() << ' ' << m.n_features() << ' '
      << (m.has_bias ? 1 : 0) << '\n';
  char buf[40];
  for (const auto& row : m.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing model");
}

inline linear_model load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw model_format_error("empty model file");
  if (line.rfind("gsa-model ", 0) != 0) {
    throw model_format_error("not a gsa-model file");
  }
  if (trim(line) != model_magic) {
    throw model_version_error("unsupported model version '" + line.substr(10) +
                              "', expected v1");
  }
  if (!std::getline(in, line)) throw model_format_error("missing shape line");
  std::istringstream shape(line);
  std::string kind_s;
  std::size_t L = 0, p = 0;
  int bias = -1;
  if (!(shape >> kind_s >> L >> p >> bias) || (bias != 0 && bias != 1)) {
    throw model_format_error("malformed shape line '" + line + "'");
  }
  const auto kind = parse_model_kind(kind_s);
  const std::size_t want_rows = kind == model_kind::softmax ? L : 1;
  if (L != want_rows || (kind == model_kind::softmax && L < 2)) {
    throw model_format_error("shape mismatch: " + kind_s + " with " +
                             std::to_string(L) + " rows");
  }
  linear_model m(kind, kind == model_kind::softmax ? L : 2, p, bias == 1);
  for (std::size_t l = 0; l < L; ++l) {
    if (!std::getline(in, line)) {
      throw model_format_error("shape mismatch: expected " + std::to_string(L) +
                               " weight rows");
    }
    std::istringstream row(line);
    std::string tok;
    std::size_t j = 0;
    while (row >> tok) {
      if (j >= p) {
        throw model_format_error("shape mismatch: row " + std::to_string(l) +
                                 " has more than " + std::to_string(p) + " values");
      }
      auto v = parse_real(tok);
      if (!v) throw model_format_error("malformed number '" + tok + "'");
      m.rows[l][j++] = *v;
    }
    if (j != p) {
      throw model_format_error("shape mismatch: row " + std::to_string(l) +
                               " has " + std::to_string(j) + " values, expected " +
                               std::to_string(p));
    }
  }
  while (std::getline(in, line)) {
    if (!trim(line).empty()) throw model_format_error("trailing data after model");
  }
  return m;
}

inline void save_model(const linear_model& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  save_model(m, out);
}

inline linear_model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_model(in);
}

}  // namespace gsa::bench
