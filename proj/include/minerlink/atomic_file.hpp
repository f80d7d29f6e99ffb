#pragma once

#include <filesystem>
#include <string_view>

namespace minerlink {

/// Writes `content` to a sibling temp file, flushes it, then renames it over
/// `path`, so readers see the old file or the complete new one.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Exclusive advisory lock on `<dir>/.minerlink.lock`, held for the object's
/// lifetime. Throws ConfigError when another process holds it.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace minerlink
