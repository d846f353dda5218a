#pragma once

#include <stdexcept>
#include <string>

namespace fleetrank {

// Error taxonomy shared across the library. Callers catch the base Error
// or a specific subclass depending on how much they care.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data; carries the offending line when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, long line = -1)
        : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A remote peer did not answer within the configured deadline.
class TimeoutError : public Error {
public:
    using Error::Error;
};

// A remote peer answered, but not in the agreed wire format.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// The transport layer failed outright (connect refused, socket error).
class TransportError : public Error {
public:
    using Error::Error;
};

// The endpoint kept returning non-success statuses until retries ran out.
class EndpointError : public Error {
public:
    using Error::Error;
};

// Every reranker in the fleet failed for one query.
class FleetExhaustedError : public Error {
public:
    using Error::Error;
};

} // namespace fleetrank
