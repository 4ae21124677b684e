#ifndef LEXFORGE_IO_HPP
#define LEXFORGE_IO_HPP

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lexforge/error.hpp"

namespace lexforge::io {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  return data;
}

// Lines without their terminator; a trailing "\r" is dropped as well.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < data.size()) {
    std::size_t end = data.find('\n', start);
    if (end == std::string::npos) end = data.size();
    std::string line = data.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

// Writes `contents` to `path`; on failure the partial file is removed.
inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (out) {
      out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
      out.flush();
      if (out) return;
    }
  }
  std::error_code ec;
  std::filesystem::remove(path, ec);
  throw Error(ErrorKind::kIoError, "cannot write " + path.string());
}

}  // namespace lexforge::io

#endif  // LEXFORGE_IO_HPP
