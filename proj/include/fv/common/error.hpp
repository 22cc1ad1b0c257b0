#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fv {

// Base for everything the toolkit throws on purpose. The category string is
// stable and machine-readable; the CLI maps it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& msg)
      : std::runtime_error(msg), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

// Caller passed an argument that violates a precondition.
class ParamError : public Error {
 public:
  explicit ParamError(const std::string& msg) : Error("param", msg) {}
};

// Spatial shapes that cannot be combined (kernel larger than input, depth
// that does not divide the image, mismatched template sizes).
class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& msg) : Error("geometry", msg) {}
};

// Non-finite values or degenerate statistics where finite ones are required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

// Input files whose content is inconsistent (bad mask values, unknown
// manifest columns, truncated images).
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data", msg) {}
};

// Binary container damage. Carries the byte offset where parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, std::size_t byte_offset)
      : Error("format", msg + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Well-formed container written by an incompatible producer.
class VersionError : public Error {
 public:
  explicit VersionError(const std::string& msg) : Error("version", msg) {}
};

// Finger localisation failed on an input presentation.
class SegmentationError : public Error {
 public:
  explicit SegmentationError(const std::string& msg) : Error("segmentation", msg) {}
};

// Identity split or session role assignment is contradictory.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& msg) : Error("protocol", msg) {}
};

}  // namespace fv
