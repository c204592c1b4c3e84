#pragma once

#include <stdexcept>
#include <string>

namespace vmic {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Source/microphone geometry outside the model's domain (r < d/2, gain
// ceiling exceeded) or microphone parameters outside their bounds. Carries
// the offending field name so callers can report it in machine-readable
// form.
class ValidityError : public Error {
public:
  ValidityError(std::string field, const std::string& what)
    : Error(what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class RangeError : public Error {
public:
  using Error::Error;
};

// Ideal integrator evaluated at f = 0.
class SingularityError : public Error {
public:
  using Error::Error;
};

// Malformed or unsupported audio file. `chunk()` names the RIFF chunk that
// failed to parse ("RIFF", "WAVE", "fmt ", "data").
class FormatError : public Error {
public:
  FormatError(std::string chunk, const std::string& what)
    : Error(what), chunk_(std::move(chunk)) {}

  const std::string& chunk() const noexcept { return chunk_; }

private:
  std::string chunk_;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Scene configuration problem. `line()` is 1-based, 0 when unknown.
class ConfigError : public Error {
public:
  ConfigError(std::string field, int line, const std::string& what)
    : Error(what), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

private:
  std::string field_;
  int line_;
};

// Sample stream inconsistencies, e.g. a source whose sampling rate differs
// from the engine's.
class StreamError : public Error {
public:
  using Error::Error;
};

class BandSilenceError : public Error {
public:
  using Error::Error;
};

} // namespace vmic
