#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spikeprune {

// CSV conventions used by every report: comma delimiter, '\n' line endings,
// one header row, '.' decimal separator, doubles at full round-trip precision.

std::string format_double(double v);  // shortest %.17g form, locale-free

std::string csv_join(const std::vector<std::string>& fields);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace spikeprune
