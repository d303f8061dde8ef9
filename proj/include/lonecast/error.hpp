#pragma once

#include <stdexcept>
#include <string>

namespace lonecast {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A row or value in an input file could not be parsed.
class ParseError : public Error {
public:
    ParseError(std::string file, size_t line, std::string field, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": field '" + field + "': " + what),
          file_(std::move(file)), line_(line), field_(std::move(field)) {}

    const std::string& file() const { return file_; }
    size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::string file_;
    size_t line_;
    std::string field_;
};

// A value violates a domain invariant (bounds, presence rules, uniqueness).
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Signal shorter than the minimum a detector can work with.
class TooShort : public Error {
public:
    using Error::Error;
};

// Too few beats survived cleaning to compute a statistic.
class InsufficientBeats : public Error {
public:
    using Error::Error;
};

// A precondition on data quantity (span, count) is not met.
class InsufficientData : public Error {
public:
    using Error::Error;
};

// Training labels contain a single class.
class DegenerateLabels : public Error {
public:
    using Error::Error;
};

// A model violates its structural invariants (e.g. zero node cover).
class CorruptModel : public Error {
public:
    using Error::Error;
};

} // namespace lonecast
