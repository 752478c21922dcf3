#pragma once

#include <stdexcept>
#include <string>

namespace scnn {

/// Base of every error raised by the library. `kind()` is a short stable tag
/// used by the CLI for its machine-parsable error prefix.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};
struct InvalidInput : Error {
    explicit InvalidInput(const std::string& w) : Error("invalid-input", w) {}
};
struct ContractError : Error {
    explicit ContractError(const std::string& w) : Error("contract", w) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error("numeric", w) {}
};
struct DataError : Error {
    explicit DataError(const std::string& w) : Error("data", w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& w) : Error("format", w) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error("parse", w) {}
};

} // namespace scnn
