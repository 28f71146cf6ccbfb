#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace visret {

// Writes content to a temp file in the destination directory, then renames
// it into place. Readers never observe a partially written artifact.
void atomic_write(const std::filesystem::path& dest, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Calls fn(line_number, line) for every line of the file; line numbers are
// 1-based and blank lines are skipped. Throws DataError if unreadable.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(size_t, const std::string&)>& fn);

// Static partition of [0, n) across at most `threads` workers. threads <= 1
// runs inline. Each index is handled exactly once; callers writing to
// per-index slots get thread-count-independent results.
void parallel_for(size_t n, int threads,
                  const std::function<void(size_t)>& fn);

}  // namespace visret
