#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hjbpinn {

/// Shortest decimal form that reads back to the same double.
std::string fmt_double(double v);

/// Writes via a temporary file and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace hjbpinn
