#pragma once

#include <stdexcept>
#include <string>

namespace prgc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class OverlappingSpans : public Error {
public:
  explicit OverlappingSpans(const std::string& msg) : Error(msg) {}
};

class SentenceTooLong : public Error {
public:
  explicit SentenceTooLong(const std::string& msg) : Error(msg) {}
};

class DimensionMismatch : public Error {
public:
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

class LengthMismatch : public Error {
public:
  explicit LengthMismatch(const std::string& msg) : Error(msg) {}
};

class ShapeMismatch : public Error {
public:
  explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};

class MissingRelation : public Error {
public:
  explicit MissingRelation(const std::string& msg) : Error(msg) {}
};

class MissingIntermediates : public Error {
public:
  explicit MissingIntermediates(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

/// Raised per record when an entity string cannot be located in the sentence.
/// Loaders catch it, log the record and move on; it never aborts a run.
class UnresolvableEntity : public Error {
public:
  explicit UnresolvableEntity(const std::string& msg) : Error(msg) {}
};

class InfeasibleConfig : public Error {
public:
  explicit InfeasibleConfig(const std::string& msg) : Error(msg) {}
};

/// Single-sequence tagging cannot represent a subject that overlaps its object.
class SooUnsupported : public Error {
public:
  explicit SooUnsupported(const std::string& msg) : Error(msg) {}
};

class DivergedLoss : public Error {
public:
  explicit DivergedLoss(const std::string& msg) : Error(msg) {}
};

class IdMismatch : public Error {
public:
  explicit IdMismatch(const std::string& msg) : Error(msg) {}
};

class CheckpointError : public Error {
public:
  explicit CheckpointError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace prgc
