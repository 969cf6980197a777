#pragma once

#include <stdexcept>
#include <string>

namespace biometaphor {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid domain value or violated invariant (construction-time rejection).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Unusable configuration, including missing credential env vars.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Network-level failure (timeout, unreachable host) after retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// The remote service answered but with a non-success status.
class BackendError : public Error {
public:
    BackendError(int status, const std::string& body_excerpt)
        : Error("backend error, status " + std::to_string(status) + ": " + body_excerpt),
          status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

/// A scripted fixture has no entry for the requested key.
class FixtureMissError : public Error {
public:
    using Error::Error;
};

/// Malformed encoded payload (base64, image container).
class DecodeError : public Error {
public:
    using Error::Error;
};

/// A chain step was requested before its prerequisites were produced.
class SequencingError : public Error {
public:
    using Error::Error;
};

/// A step response failed validation beyond the repair budget.
class StepError : public Error {
public:
    StepError(int step_id, const std::string& what, std::string raw_response)
        : Error("step " + std::to_string(step_id) + " failed: " + what),
          step_id_(step_id),
          raw_response_(std::move(raw_response)) {}
    int step_id() const { return step_id_; }
    const std::string& raw_response() const { return raw_response_; }

private:
    int step_id_;
    std::string raw_response_;
};

}  // namespace biometaphor
