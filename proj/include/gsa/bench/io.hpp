#pragma once

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gsa/data.hpp"

namespace gsa::bench {

class unsupported_compression : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Whole file as text; `.gz` is inflated, `.bz2` is refused.
inline std::string read_text_file(const std::filesystem::path& path) {
  const auto name = path.string();
  if (ends_with(name, ".bz2")) {
    throw unsupported_compression(
        name + ": bzip2 input is not supported; decompress it first "
               "(e.g. bunzip2 -k " + name + ")");
  }
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error(name + ": no such file");
  }
  if (ends_with(name, ".gz")) {
    gzFile f = gzopen(name.c_str(), "rb");
    if (!f) throw std::runtime_error(name + ": cannot open");
    std::string out;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    int err = 0;
    const char* msg = gzerror(f, &err);
    const std::string what = msg ? msg : "";
    gzclose(f);
    if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) {
      throw std::runtime_error(name + ": gzip error: " + what);
    }
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(name + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline dataset load_libsvm_file(const std::filesystem::path& path,
                                const parse_options& opts = {}) {
  std::istringstream in(read_text_file(path));
  return parse_libsvm(in, opts);
}

inline std::pair<dataset, dataset> load_libsvm_pair(
    const std::filesystem::path& train, const std::filesystem::path& test,
    const parse_options& opts = {}) {
  std::istringstream tr(read_text_file(train)), te(read_text_file(test));
  return parse_libsvm_pair(tr, te, opts);
}

}  // namespace gsa::bench
