#pragma once

#include <stdexcept>
#include <string>

namespace tempme {

// Base of every error the library throws. `kind()` is a stable machine-readable
// tag used by the CLI when it reports failures as JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class IngestError : public Error {
 public:
  IngestError(std::size_t line, const std::string& message)
      : Error("ingest", "line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& m) : Error("schema", m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};
struct InvariantError : Error {
  explicit InvariantError(const std::string& m) : Error("invariant", m) {}
};
struct RefusalError : Error {
  explicit RefusalError(const std::string& m) : Error("refused", m) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};
struct ProtocolError : Error {
  explicit ProtocolError(const std::string& m) : Error("protocol", m) {}
};
struct DependencyError : Error {
  explicit DependencyError(const std::string& m) : Error("dependency", m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

}  // namespace tempme
