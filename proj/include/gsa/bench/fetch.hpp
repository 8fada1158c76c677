#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <openssl/evp.h>
#include <zlib.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsa/bench/io.hpp"

namespace gsa::bench {

namespace fs = std::filesystem;

class fetch_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class checksum_mismatch : public fetch_error {
 public:
  using fetch_error::fetch_error;
};

struct dataset_entry {
  std::string name;
  std::string url;
  std::string test_url;       // empty when the dataset ships no test file
  std::string sha256;         // of the decompressed file; empty if unknown
  std::string test_sha256;
  std::size_t default_passes = 5;
  std::vector<std::size_t> eval_passes;  // report columns
  bool official_test = false;  // evaluate on test_url instead of a split
  bool large = false;          // only with --full
};

inline const std::vector<dataset_entry>& default_registry() {
  static const std::vector<dataset_entry> reg = [] {
    const std::string b = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/";
    const std::string m = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/multiclass/";
    const std::vector<std::size_t> p5{1, 2, 5}, p10{1, 2, 10};
    std::vector<dataset_entry> r;
    auto add = [&](std::string name, std::string url, std::string test,
                   std::size_t passes, std::vector<std::size_t> eval,
                   bool official, bool large) {
      dataset_entry e;
      e.name = std::move(name);
      e.url = std::move(url);
      e.test_url = std::move(test);
      e.default_passes = passes;
      e.eval_passes = std::move(eval);
      e.official_test = official;
      e.large = large;
      r.push_back(std::move(e));
    };
    add("w1a", b + "w1a", b + "w1a.t", 5, p5, true, false);
    add("mnist.scale", m + "mnist.scale.bz2", m + "mnist.scale.t.bz2", 5, p5, false, true);
    add("news20.scale", m + "news20.scale.bz2", m + "news20.t.scale.bz2", 5, p5, true, true);
    add("aloi.scale", m + "aloi.scale.bz2", "", 5, p5, false, true);
    add("a9a", b + "a9a", b + "a9a.t", 5, p5, false, false);
    add("breast-cancer_scale", b + "breast-cancer_scale", "", 5, p5, false, false);
    add("gisette_scale", b + "gisette_scale.bz2", b + "gisette_scale.t.bz2", 5, p5, false, false);
    add("madelon", b + "madelon", b + "madelon.t", 20, {1, 5, 20}, false, false);
    add("cod-rna", b + "cod-rna", b + "cod-rna.t", 5, p5, false, false);
    add("url", b + "url_combined.bz2", "", 5, p5, false, true);
    add("letter.scale", m + "letter.scale", m + "letter.scale.t", 10, p10, false, false);
    add("dna.scale", m + "dna.scale", m + "dna.scale.t", 10, p10, false, false);
    add("sector.scale", m + "sector/sector.scale.bz2", m + "sector/sector.t.scale.bz2", 10, p10, false, true);
    add("usps", m + "usps.bz2", m + "usps.t.bz2", 5, p5, false, false);
    add("protein", m + "protein.bz2", m + "protein.t.bz2", 5, p5, false, false);
    add("rcv1.multiclass", m + "rcv1/rcv1_train.multiclass.bz2",
        m + "rcv1/rcv1_test.multiclass.bz2", 5, p5, false, true);
    return r;
  }();
  return reg;
}

inline const dataset_entry* find_entry(const std::vector<dataset_entry>& reg,
                                       std::string_view name) {
  for (const auto& e : reg) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

/// GSA_CACHE_DIR, else $XDG_CACHE_HOME/gsa-bench, else ~/.cache/gsa-bench.
inline fs::path default_cache_dir() {
  if (const char* d = std::getenv("GSA_CACHE_DIR"); d && *d) return d;
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) {
    return fs::path(x) / "gsa-bench";
  }
  if (const char* h = std::getenv("HOME"); h && *h) {
    return fs::path(h) / ".cache" / "gsa-bench";
  }
  return fs::path(".gsa-cache");
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string read_binary(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw fetch_error("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_binary(const fs::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw fetch_error("cannot write " + p.string());
}

inline std::string gunzip(std::string_view gz) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw fetch_error("zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(gz.data()));
  zs.avail_in = static_cast<uInt>(gz.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw fetch_error("corrupt gzip stream");
    }
    out.append(buf, sizeof buf - zs.avail_out);
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw fetch_error("truncated gzip stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

struct url_parts {
  std::string scheme_host_port;  // what httplib::Client takes
  std::string host;
  std::string path;
  bool https = false;
};

inline url_parts split_url(const std::string& url) {
  const auto sep = url.find("://");
  if (sep == std::string::npos) throw fetch_error("bad url " + url);
  url_parts u;
  const std::string scheme = url.substr(0, sep);
  if (scheme != "http" && scheme != "https") {
    throw fetch_error("unsupported scheme in " + url);
  }
  u.https = scheme == "https";
  const auto slash = url.find('/', sep + 3);
  u.scheme_host_port = url.substr(0, slash);
  std::string hp = url.substr(sep + 3, slash == std::string::npos
                                           ? std::string::npos
                                           : slash - sep - 3);
  u.host = hp.substr(0, hp.find(':'));
  u.path = slash == std::string::npos ? "/" : url.substr(slash);
  return u;
}

/// Host and port from an HTTPS_PROXY / HTTP_PROXY style value.
inline std::optional<std::pair<std::string, int>> parse_proxy(std::string v) {
  if (v.empty()) return std::nullopt;
  if (auto s = v.find("://"); s != std::string::npos) v = v.substr(s + 3);
  if (auto at = v.rfind('@'); at != std::string::npos) v = v.substr(at + 1);
  if (auto sl = v.find('/'); sl != std::string::npos) v = v.substr(0, sl);
  int port = 80;
  if (auto c = v.rfind(':'); c != std::string::npos) {
    port = std::atoi(v.c_str() + c + 1);
    v = v.substr(0, c);
  }
  if (v.empty() || port <= 0) return std::nullopt;
  return std::make_pair(v, port);
}

inline bool no_proxy_for(const std::string& host) {
  if (host == "localhost" || host == "127.0.0.1" || host == "::1") return true;
  const char* np = std::getenv("NO_PROXY");
  if (!np) np = std::getenv("no_proxy");
  if (!np) return false;
  std::string_view list = np;
  while (!list.empty()) {
    const auto comma = list.find(',');
    auto item = trim(list.substr(0, comma));
    if (!item.empty() && item.front() == '.') item.remove_prefix(1);
    if (item == "*") return true;
    if (!item.empty() && host.size() >= item.size() &&
        host.compare(host.size() - item.size(), item.size(), item) == 0 &&
        (host.size() == item.size() || host[host.size() - item.size() - 1] == '.')) {
      return true;
    }
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
  }
  return false;
}

inline std::optional<std::pair<std::string, int>> proxy_for(const url_parts& u) {
  if (no_proxy_for(u.host)) return std::nullopt;
  static const char* const https_vars[] = {"HTTPS_PROXY", "https_proxy"};
  static const char* const http_vars[] = {"HTTP_PROXY", "http_proxy"};
  for (const char* var : u.https ? https_vars : http_vars) {
    if (const char* v = std::getenv(var); v && *v) return parse_proxy(v);
  }
  return std::nullopt;
}

struct fetch_options {
  fs::path cache_dir = default_cache_dir();
  bool allow_network = true;
  bool full = false;  // permit entries marked large
  int timeout_seconds = 60;
};

/// Counts requests made by http_get; tests use it to prove cache hits.
inline std::size_t& network_request_count() {
  static std::size_t n = 0;
  return n;
}

inline std::string http_get(const std::string& url, int timeout_seconds) {
  const auto u = split_url(url);
  httplib::Client cli(u.scheme_host_port);
  cli.set_follow_location(true);
  cli.set_connection_timeout(timeout_seconds, 0);
  cli.set_read_timeout(timeout_seconds, 0);
  if (auto p = proxy_for(u)) cli.set_proxy(p->first, p->second);
  ++network_request_count();
  auto res = cli.Get(u.path);
  if (!res) {
    throw fetch_error("network failure fetching " + url + ": " +
                      httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw fetch_error("HTTP " + std::to_string(res->status) + " fetching " + url);
  }
  return std::move(res->body);
}

/// Cache file name for a URL: basename with any .gz suffix removed.
inline std::string cached_name(const std::string& url) {
  std::string base = url.substr(url.rfind('/') + 1);
  if (ends_with(base, ".gz")) base.resize(base.size() - 3);
  return base;
}

/// Returns the verified local copy of `url`, downloading it if absent.
/// Checksums cover the decompressed bytes. With no registry checksum the
/// first copy's digest is pinned in a `.sha256` sidecar and enforced after.
inline fs::path fetch_file(const std::string& url, const std::string& expected_sha,
                           const fs::path& dir, const fetch_options& opts) {
  std::string name = cached_name(url);
  const bool bz2 = ends_with(name, ".bz2");
  if (bz2) name.resize(name.size() - 4);
  const fs::path target = dir / name;
  const fs::path sidecar = dir / (name + ".sha256");

  auto verify = [&](const std::string& digest, bool downloaded) {
    std::string want = expected_sha;
    if (want.empty() && fs::exists(sidecar)) want = std::string(trim(read_binary(sidecar)));
    if (!want.empty() && digest != want) {
      if (downloaded) fs::remove(target);
      throw checksum_mismatch("checksum mismatch for " + target.string() +
                              ": expected " + want + ", got " + digest);
    }
    if (!fs::exists(sidecar)) write_binary(sidecar, digest + "\n");
  };

  if (fs::exists(target)) {
    verify(sha256_hex(read_binary(target)), false);
    return target;
  }
  if (!opts.allow_network) {
    throw fetch_error(target.string() + " is not cached and network access is off");
  }
  if (bz2) {
    throw unsupported_compression(
        url + " is bzip2-compressed, which is not supported; download it "
              "manually, decompress it and place it at " + target.string());
  }
  std::string body = http_get(url, opts.timeout_seconds);
  if (ends_with(url, ".gz")) body = gunzip(body);
  const std::string digest = sha256_hex(body);
  fs::create_directories(dir);
  const fs::path tmp = dir / (name + ".part");
  write_binary(tmp, body);
  fs::rename(tmp, target);
  verify(digest, true);
  return target;
}

struct fetched_paths {
  fs::path train;
  std::optional<fs::path> test;
};

inline fetched_paths fetch_dataset(const dataset_entry& e, const fetch_options& opts,
                                   bool include_test = true) {
  if (e.large && !opts.full) {
    throw fetch_error(e.name + " is a large dataset; pass --full to use it");
  }
  const fs::path dir = opts.cache_dir / e.name;
  fetched_paths out;
  out.train = fetch_file(e.url, e.sha256, dir, opts);
  if (include_test && !e.test_url.empty()) {
    out.test = fetch_file(e.test_url, e.test_sha256, dir, opts);
  }
  return out;
}

}  // namespace gsa::bench
