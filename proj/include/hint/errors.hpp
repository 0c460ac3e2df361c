#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hint {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a DocumentGraph precondition.
class ValidationError : public Error {
public:
    ValidationError(std::string doc_id, long long offending_id, const std::string& what)
        : Error("document '" + doc_id + "': " + what),
          doc_id_(std::move(doc_id)), offending_id_(offending_id) {}

    const std::string& doc_id() const noexcept { return doc_id_; }
    // -1 when the failure is not tied to a single id.
    long long offending_id() const noexcept { return offending_id_; }

private:
    std::string doc_id_;
    long long offending_id_;
};

// Malformed serialized input. location is a field path ("tokens[2].id"),
// a byte offset ("byte 17") or a line ("line 4").
class ParseError : public Error {
public:
    ParseError(std::string location, const std::string& what)
        : Error(location + ": " + what), location_(std::move(location)) {}

    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Tree/graph mismatch, unaligned trees, shape mismatches.
class StructureError : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

} // namespace hint
