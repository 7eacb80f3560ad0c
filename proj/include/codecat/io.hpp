#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

namespace codecat {

// Writes through a sibling temporary file and renames it over `path`, so a
// reader never sees a half-written artifact.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer,
                       bool binary = false);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace codecat

namespace codecat {

// FNV-1a 64, as lowercase hex; used to fingerprint input files.
std::string content_fingerprint(std::string_view bytes);

}  // namespace codecat
