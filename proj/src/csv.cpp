#include "evidfuse/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "evidfuse/errors.hpp"

namespace evidfuse {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_double_field(const std::string& field, const std::string& context) {
    double value = 0.0;
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw parse_error("bad numeric field '" + field + "' in " + context);
    }
    return value;
}

long parse_long_field(const std::string& field, const std::string& context) {
    long value = 0;
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw parse_error("bad integer field '" + field + "' in " + context);
    }
    return value;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw numeric_error("failed to format double");
    return std::string(buf, ptr);
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty CSV file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = split_csv_line(line);

    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
        if (rows.back().size() != header.size()) {
            throw parse_error("row " + std::to_string(rows.size()) + " of " + path.string() +
                              " has " + std::to_string(rows.back().size()) + " fields, expected " +
                              std::to_string(header.size()));
        }
    }
    return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << content;
    if (!out) throw io_error("short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace evidfuse
