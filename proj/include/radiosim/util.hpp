// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace radiosim
{

inline constexpr std::string_view kVersion = "0.3.0";

[[nodiscard]] std::string sha256_hex(std::string_view bytes);
[[nodiscard]] std::string base64_encode(std::span<const unsigned char> bytes);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
/// 32 hex chars from a random 128-bit value.
[[nodiscard]] std::string random_id();
/// UTC, ISO-8601 with milliseconds.
[[nodiscard]] std::string utc_timestamp();
/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double v);

} // namespace radiosim
