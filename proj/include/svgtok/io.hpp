#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "svgtok/error.hpp"

namespace svgtok {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::Io, "read failed: " + path.string());
  return ss.str();
}

/// Writes to a sibling temp file, then renames over `path`, so readers never
/// see a partial file.
class AtomicWriter {
 public:
  explicit AtomicWriter(fs::path path) : path_(std::move(path)) {
    tmp_ = path_;
    tmp_ += ".tmp." + std::to_string(reinterpret_cast<std::uintptr_t>(this) ^
                                     static_cast<std::uintptr_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(Errc::Io, "cannot write " + path_.string());
  }
  AtomicWriter(const AtomicWriter&) = delete;
  AtomicWriter& operator=(const AtomicWriter&) = delete;
  ~AtomicWriter() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return out_; }
  void write(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

  void commit() {
    out_.flush();
    out_.close();
    if (out_.fail()) throw Error(Errc::Io, "write failed: " + path_.string());
    std::error_code ec;
    fs::rename(tmp_, path_, ec);
    if (ec) throw Error(Errc::Io, "cannot rename onto " + path_.string() + ": " + ec.message());
    committed_ = true;
  }

 private:
  fs::path path_, tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

inline void write_file_atomic(const fs::path& path, std::string_view content) {
  AtomicWriter w(path);
  w.write(content);
  w.commit();
}

struct InputFile {
  fs::path path;
  std::string name;  // relative to the directory argument, else the file name
};

/// Expands inputs: files as given, directories recursively to their *.svg
/// files (sorted), and "@list" to the paths listed one per line.
inline std::vector<InputFile> collect_inputs(const std::vector<std::string>& args) {
  std::vector<InputFile> out;
  auto add_file = [&](const fs::path& p) { out.push_back({p, p.filename().string()}); };
  for (const auto& a : args) {
    if (!a.empty() && a[0] == '@') {
      std::istringstream lines(read_file(a.substr(1)));
      std::string line;
      while (std::getline(lines, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) add_file(line);
      }
      continue;
    }
    fs::path p(a);
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> found;
      for (auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".svg") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      for (auto& f : found) out.push_back({f, fs::relative(f, p).generic_string()});
    } else if (fs::exists(p, ec)) {
      add_file(p);
    } else {
      throw Error(Errc::Io, "no such input " + a);
    }
  }
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace svgtok
