#include "lonecast/csv.hpp"

#include <charconv>
#include <algorithm>
#include <cstring>

#include "lonecast/error.hpp"

namespace lonecast {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c == '\r') {
            // tolerate CRLF
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), n_cols_(header.size()), path_(path) {
    if (!out_) throw IoError("cannot open for writing: " + path);
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << csv_escape(header[i]);
    }
    out_ << '\n';
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
    if (fields.size() != n_cols_)
        throw IoError("row width " + std::to_string(fields.size()) + " != header width " +
                      std::to_string(n_cols_) + " in " + path_);
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << csv_escape(fields[i]);
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw IoError("write failed: " + path_);
}

CsvReader::CsvReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) return; // caller checks is_open(); a missing stream file means an empty stream
    std::string line;
    if (read_record(line)) header_ = csv_split(line);
}

// Pulls one logical record, rejoining physical lines while a quoted field
// is still open. Escaped quotes ("") keep the parity count even, so odd
// parity means the record continues on the next line.
bool CsvReader::read_record(std::string& record) {
    if (!std::getline(in_, record)) return false;
    ++line_;
    auto quotes = [](const std::string& s) {
        return std::count(s.begin(), s.end(), '"');
    };
    long parity = quotes(record);
    std::string more;
    while ((parity % 2) != 0 && std::getline(in_, more)) {
        ++line_;
        record += '\n';
        record += more;
        parity += quotes(more);
    }
    return true;
}

size_t CsvReader::col(const std::string& name) const {
    for (size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return i;
    throw ParseError(path_, 1, name, "missing column in header");
}

std::optional<size_t> CsvReader::find_col(const std::string& name) const {
    for (size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return i;
    return std::nullopt;
}

bool CsvReader::next(std::vector<std::string>& fields) {
    std::string line;
    while (read_record(line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        fields = csv_split(line);
        if (fields.size() != header_.size())
            throw ParseError(path_, line_, "*",
                             "expected " + std::to_string(header_.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        return true;
    }
    return false;
}

double CsvReader::as_double(const std::vector<std::string>& f, size_t c) const {
    const std::string& s = f[c];
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(path_, line_, header_[c], "not a number: '" + s + "'");
    return v;
}

long CsvReader::as_long(const std::vector<std::string>& f, size_t c) const {
    const std::string& s = f[c];
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(path_, line_, header_[c], "not an integer: '" + s + "'");
    return v;
}

} // namespace lonecast
