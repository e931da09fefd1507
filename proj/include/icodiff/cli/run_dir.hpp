// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace icodiff {

// Creates `dir` (and parents). An existing non-empty directory is refused
// with IoError unless `force`; a path that exists as a file is always
// refused. Returns the directory path unchanged.
std::string prepare_run_dir(const std::string& dir, bool force);

// Exclusive advisory lock: creates `<dir>/.lock` with O_EXCL, removing it on
// destruction. A second lock on the same directory throws StateError naming
// the stale-file remedy.
class RunLock {
 public:
  explicit RunLock(const std::string& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
};

// Overwrites `path` atomically enough for config logs (write then rename is
// overkill here; plain truncate-write with error checking).
void write_text_file(const std::string& path, const std::string& text);

}  // namespace icodiff
