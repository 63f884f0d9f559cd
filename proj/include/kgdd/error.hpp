#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgdd {

// Root of the library's exception hierarchy. The CLI maps ConfigError to exit
// code 1, DataError to 2 and anything else to 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Fusion policy that cannot be applied to the data it is validated against.
class PolicyError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DataError : public Error {
public:
    using Error::Error;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class RowError : public DataError {
public:
    RowError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValueError : public DataError {
public:
    ValueError(std::size_t line, std::size_t column, const std::string& what)
        : DataError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                    ": " + what),
          line_(line),
          column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t offset, const std::string& what)
        : DataError("byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class ReferentialError : public DataError {
public:
    using DataError::DataError;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

class SelfPairError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace kgdd
