#include "data/csv.hpp"

#include "util/errors.hpp"
#include "util/format.hpp"

#include <charconv>
#include <cmath>

namespace mepo::data {

namespace {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) {
            f.remove_prefix(1);
        }
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) {
            f.remove_suffix(1);
        }
    }
    return out;
}

} // namespace

CsvReader::CsvReader(const std::filesystem::path& path, const std::vector<std::string>& required_columns)
    : file_(path.string())
    , in_(path)
{
    if (!in_) {
        fail(ErrorKind::Io, "cannot open " + file_);
    }
    if (!std::getline(in_, buffer_)) {
        fail(ErrorKind::Schema, file_ + ":1: missing header row");
    }
    line_ = 1;
    if (buffer_.size() >= 3 && buffer_.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        buffer_.erase(0, 3);
    }
    auto header = split(buffer_);
    for (const auto& col : required_columns) {
        std::size_t idx = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == col) {
                idx = i;
                break;
            }
        }
        if (idx == header.size()) {
            fail(ErrorKind::Schema, file_ + ":1: missing required column '" + col + "'");
        }
        mapping_.push_back(idx);
    }
}

bool CsvReader::next()
{
    while (std::getline(in_, buffer_)) {
        ++line_;
        if (buffer_.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        fields_ = split(buffer_);
        for (std::size_t c = 0; c < mapping_.size(); ++c) {
            if (mapping_[c] >= fields_.size()) {
                fail(ErrorKind::Schema, file_ + ":" + std::to_string(line_) + ":" + std::to_string(mapping_[c] + 1) +
                                            ": missing field");
            }
        }
        return true;
    }
    return false;
}

std::string_view CsvReader::field(std::size_t column) const { return fields_[mapping_.at(column)]; }

double CsvReader::number(std::size_t column) const
{
    auto f = field(column);
    double v = 0.0;
    auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        error(column, "expected a finite number, got '" + std::string(f) + "'");
    }
    return v;
}

void CsvReader::error(std::size_t column, const std::string& msg) const
{
    fail(ErrorKind::Schema, file_ + ":" + std::to_string(line_) + ":" + std::to_string(mapping_.at(column) + 1) +
                                ": " + msg);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary)
    , path_(path.string())
{
    if (!out_) {
        fail(ErrorKind::Io, "cannot write " + path_);
    }
    for (const auto& h : header) {
        *this << h;
    }
    end_row();
}

void CsvWriter::sep()
{
    if (!first_) {
        out_ << ',';
    }
    first_ = false;
}

CsvWriter& CsvWriter::operator<<(const std::string& s)
{
    sep();
    out_ << s;
    return *this;
}

CsvWriter& CsvWriter::operator<<(double v)
{
    sep();
    out_ << fmt_double(v);
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::size_t v)
{
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::operator<<(int v)
{
    sep();
    out_ << v;
    return *this;
}

void CsvWriter::end_row()
{
    out_ << '\n';
    first_ = true;
}

void CsvWriter::close()
{
    out_.close();
    if (!out_) {
        fail(ErrorKind::Io, "error writing " + path_);
    }
}

} // namespace mepo::data
