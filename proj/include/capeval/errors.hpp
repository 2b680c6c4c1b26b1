#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace capeval {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class EmptySentence : public Error {
public:
  explicit EmptySentence(const std::string& raw)
      : Error("sentence is empty after tokenization: \"" + raw + "\"") {}
};

class MissingMetric : public Error {
public:
  MissingMetric(const std::string& metric, const std::string& context)
      : Error("missing metric " + metric + " for " + context), metric_(metric) {}
  const std::string& metric() const { return metric_; }

private:
  std::string metric_;
};

/// Malformed input. `line()` is 1-based, 0 when not line-oriented.
class FormatError : public Error {
public:
  FormatError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class DuplicateToken : public Error {
public:
  DuplicateToken(const std::string& token, std::size_t line)
      : Error("duplicate token \"" + token + "\" (line " + std::to_string(line) + ")"),
        token_(token) {}
  const std::string& token() const { return token_; }

private:
  std::string token_;
};

class ValueError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class KeyMismatch : public Error {
public:
  using Error::Error;
};

class ZeroVector : public Error {
public:
  ZeroVector() : Error("cosine of a zero vector is undefined") {}
};

/// No token of the sentence is in the embedding vocabulary.
class AllOovError : public Error {
public:
  explicit AllOovError(std::vector<std::string> tokens);
  const std::vector<std::string>& tokens() const { return tokens_; }

private:
  std::vector<std::string> tokens_;
};

}  // namespace capeval
