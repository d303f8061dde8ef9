#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace lonecast {

// Minimal RFC-4180-ish CSV support: header row, comma separator, double
// quotes around fields containing comma/quote/newline. Numbers are written
// with shortest round-trip formatting so write-then-read is lossless.

std::string csv_escape(const std::string& field);
std::string format_double(double v);

// Splits one CSV record (already stripped of the line terminator).
std::vector<std::string> csv_split(const std::string& line);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void write_row(const std::vector<std::string>& fields);
    void close();

private:
    std::ofstream out_;
    size_t n_cols_;
    std::string path_;
};

class CsvReader {
public:
    explicit CsvReader(const std::string& path);

    bool is_open() const { return in_.is_open(); }
    const std::vector<std::string>& header() const { return header_; }
    // Column index for a header name; throws ParseError if absent.
    size_t col(const std::string& name) const;
    std::optional<size_t> find_col(const std::string& name) const;

    // Reads the next record; false at end of file. Blank lines are skipped.
    bool next(std::vector<std::string>& fields);
    size_t line_number() const { return line_; }
    const std::string& path() const { return path_; }

    // Field accessors with located errors.
    double as_double(const std::vector<std::string>& f, size_t c) const;
    long as_long(const std::vector<std::string>& f, size_t c) const;

private:
    bool read_record(std::string& record);

    std::ifstream in_;
    std::string path_;
    std::vector<std::string> header_;
    size_t line_ = 0;
};

} // namespace lonecast
