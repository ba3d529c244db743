#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace mepo::data {

/// Minimal reader for the comma-separated, header-first files used by the
/// pipeline. Fields are not quoted. Errors name file, line and column.
class CsvReader
{
public:
    CsvReader(const std::filesystem::path& path, const std::vector<std::string>& required_columns);

    /// Advances to the next non-empty record; false at end of file.
    bool next();

    std::string_view field(std::size_t column) const;
    std::string text(std::size_t column) const { return std::string(field(column)); }
    double number(std::size_t column) const;

    std::size_t line() const { return line_; }
    const std::string& file() const { return file_; }

    [[noreturn]] void error(std::size_t column, const std::string& msg) const;

private:
    std::string file_;
    std::ifstream in_;
    std::string buffer_;
    std::vector<std::string_view> fields_;
    std::vector<std::size_t> mapping_;
    std::size_t line_ = 0;
};

class CsvWriter
{
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& operator<<(const std::string& s);
    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(std::size_t v);
    CsvWriter& operator<<(int v);
    void end_row();
    void close();

private:
    void sep();

    std::ofstream out_;
    std::string path_;
    bool first_ = true;
};

} // namespace mepo::data
