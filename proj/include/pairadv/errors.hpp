#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace pairadv {

// Root of every error the library throws. category() is the stable,
// machine-parsable name the CLI prints.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::string field)
      : Error("ValidationError", "invalid field: " + field), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ParseError : public Error {
 public:
  enum class Reason { NoTag, BadPayload };

  ParseError(Reason reason, std::string payload = {})
      : Error("ParseError", reason == Reason::NoTag ? "no <answer> tag"
                                                    : "bad answer payload: '" + payload + "'"),
        reason_(reason),
        payload_(std::move(payload)) {}

  Reason reason() const noexcept { return reason_; }
  const std::string& payload() const noexcept { return payload_; }

 private:
  Reason reason_;
  std::string payload_;
};

class KindMismatch : public Error {
 public:
  explicit KindMismatch(const std::string& what) : Error("KindMismatch", what) {}
};

class IdMismatch : public Error {
 public:
  IdMismatch(const std::string& expected, const std::string& got)
      : Error("IdMismatch", "trajectory for '" + got + "' passed with example '" + expected + "'") {}
};

class NegativeGap : public Error {
 public:
  explicit NegativeGap(double gap) : Error("NegativeGap", "true gap must be >= 0, got " + std::to_string(gap)) {}
};

class GroupTooSmall : public Error {
 public:
  explicit GroupTooSmall(std::size_t g)
      : Error("GroupTooSmall", "group size must be >= 2, got " + std::to_string(g)) {}
};

class BrokenSkewSymmetry : public Error {
 public:
  BrokenSkewSymmetry(std::size_t i, std::size_t j)
      : Error("BrokenSkewSymmetry",
              "entries (" + std::to_string(i) + "," + std::to_string(j) + ") violate d_ij = -d_ji") {}
};

class BadSequence : public Error {
 public:
  explicit BadSequence(const std::string& what) : Error("BadSequence", what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("ShapeMismatch", what) {}
};

class EmptyBallot : public Error {
 public:
  EmptyBallot() : Error("EmptyBallot", "majority vote over zero judgments") {}
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("SchemaError", "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

class JudgeError : public Error {
 public:
  enum class Reason { Transport, Parse };

  JudgeError(Reason reason, const std::string& what, std::string raw = {})
      : Error("JudgeError", what), reason_(reason), raw_(std::move(raw)) {}

  Reason reason() const noexcept { return reason_; }
  // Raw completion text, kept for audit when the reply did not parse.
  const std::string& raw() const noexcept { return raw_; }

 private:
  Reason reason_;
  std::string raw_;
};

}  // namespace pairadv
