#pragma once

// Line-oriented append-only files that are fsync'ed before returning.

#include <string>
#include <string_view>
#include <vector>

namespace mediator::detail {

struct LineFile {
    std::vector<std::string> lines;  // complete, newline-terminated lines
    std::string partial_tail;        // bytes after the last newline, if any
};

// Missing file reads as empty.
LineFile read_line_file(const std::string& path);

// Appends `line` plus a newline and fsyncs. Throws std::system_error.
void append_line_durable(const std::string& path, std::string_view line);

// Truncates the file to `size` bytes (used to drop a torn final line).
void truncate_file(const std::string& path, std::size_t size);

}  // namespace mediator::detail
