#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace raydiff {

/// Decimal with 17 significant digits: round-trips every IEEE double.
std::string format_double(double v);

/// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Minimal CSV builder; numeric cells use format_double.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(const std::string& v);
    void end_row();

    const std::string& str() const { return buf_; }

  private:
    std::string buf_;
    std::size_t columns_;
    std::size_t in_row_ = 0;
};

}  // namespace raydiff
