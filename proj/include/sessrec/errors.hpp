#pragma once

#include <stdexcept>
#include <string>

namespace sessrec {

// I/O failures: missing files, unwritable outputs.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input text; message carries the offending line number.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Semantically invalid data: degenerate corpora, empty splits, shape mismatches.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Unknown item identifiers at the query boundary.
struct LookupError : std::runtime_error {
    explicit LookupError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sessrec
