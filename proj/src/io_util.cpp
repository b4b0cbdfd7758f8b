#include "dmp/io_util.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dmp/error.hpp"

namespace dmp {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::filesystem::path temp_sibling(const std::string& path) {
  std::filesystem::path p(path);
  auto dir = p.parent_path();
  if (dir.empty()) dir = ".";
  return dir / (p.filename().string() + ".tmp");
}

}  // namespace

void atomic_write(const std::string& path, const std::string& contents) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << contents;
    if (!os) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void atomic_write_binary(const std::string& path, const std::vector<char>& contents) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dmp
