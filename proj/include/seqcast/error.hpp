#ifndef SEQCAST_ERROR_HPP
#define SEQCAST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace seqcast {

/// Broad failure categories; the C API and the CLI map these onto
/// stable process exit codes.
enum class ErrorKind {
    usage,        // bad argument or option value
    shape,        // tensor dimension mismatch
    value,        // out-of-domain parameter (e.g. dropout rate >= 1)
    data,         // malformed or unusable input data
    io,           // filesystem problem
    format,       // checkpoint / serialized artifact problem
    divergence,   // non-finite number produced during training or inference
    consistency,  // cache or state used out of order
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace seqcast

#endif // SEQCAST_ERROR_HPP
