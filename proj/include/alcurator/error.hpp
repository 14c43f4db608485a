//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_ERROR_HPP_
#define ALCURATOR_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alcurator {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not line-specific.
class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line,
             const std::string &detail = {})
      : Error((line == 0 ? what : what + ", line " + std::to_string(line)) +
              (detail.empty() ? "" : ": " + detail)),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Inconsistent or missing data (unknown ids, unlabeled molecules, bad sizes).
class DataError : public Error {
public:
  using Error::Error;
};

/// Kernel matrix could not be factorized even after the jitter ladder.
class IllConditionedError : public Error {
public:
  IllConditionedError(const std::string &what, double jitter)
      : Error(what), jitter_(jitter) {}

  double attempted_jitter() const noexcept { return jitter_; }

private:
  double jitter_;
};

/// Invalid experiment configuration; `key()` names the offending field.
class ConfigError : public Error {
public:
  ConfigError(const std::string &key, const std::string &what)
      : Error(key + ": " + what), key_(key) {}

  const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Labeling failed in a way that leaves the run resumable.
class OracleError : public Error {
public:
  using Error::Error;
};

}  // namespace alcurator

#endif  // ALCURATOR_ERROR_HPP_
