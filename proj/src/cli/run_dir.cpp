// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/cli/run_dir.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "icodiff/errors.hpp"

namespace icodiff {

namespace fs = std::filesystem;

std::string prepare_run_dir(const std::string& dir, bool force) {
  std::error_code ec;
  const fs::file_status st = fs::status(dir, ec);
  if (fs::exists(st)) {
    if (!fs::is_directory(st))
      throw IoError("output path " + dir + " exists and is not a directory");
    if (!fs::is_empty(dir, ec) && !force)
      throw IoError("output directory " + dir +
                    " is not empty; pass --force to reuse it");
  } else {
    fs::create_directories(dir, ec);
    if (ec)
      throw IoError("cannot create output directory " + dir + ": " +
                    ec.message());
  }
  return dir;
}

RunLock::RunLock(const std::string& dir) : path_(dir + "/.lock") {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw StateError("another run holds " + path_ +
                     " (remove the file if that run is gone)");
  ::close(fd);
}

RunLock::~RunLock() { std::remove(path_.c_str()); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("short write to " + path);
}

}  // namespace icodiff
