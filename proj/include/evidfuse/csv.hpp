#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace evidfuse {

// Minimal numeric-CSV helpers; fields never contain commas or quotes.
std::vector<std::string> split_csv_line(const std::string& line);

double parse_double_field(const std::string& field, const std::string& context);
long parse_long_field(const std::string& field, const std::string& context);

// Shortest round-trip formatting so written files are byte-stable and
// re-read values are bit-identical.
std::string format_double(double v);

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::vector<std::string>& header);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

} // namespace evidfuse
