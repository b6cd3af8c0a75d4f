#pragma once

#include <stdexcept>
#include <string>

namespace detailcap::gateway {

/// Base of every failure raised by a backend. Retryable failures are retried
/// by ResilientBackend; everything else propagates on first occurrence.
class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool retryable() const { return false; }
  virtual const char* kind() const { return "GatewayError"; }
};

class BackendUnreachable : public GatewayError {
 public:
  using GatewayError::GatewayError;
  bool retryable() const override { return true; }
  const char* kind() const override { return "BackendUnreachable"; }
};

/// Retried once by ResilientBackend, then fatal.
class EmptyResponse : public GatewayError {
 public:
  using GatewayError::GatewayError;
  bool retryable() const override { return true; }
  const char* kind() const override { return "EmptyResponse"; }
};

class ImageDecodeError : public GatewayError {
 public:
  using GatewayError::GatewayError;
  const char* kind() const override { return "ImageDecodeError"; }
};

/// The backend cannot echo log-probabilities of supplied text.
class ScoringUnsupported : public GatewayError {
 public:
  using GatewayError::GatewayError;
  const char* kind() const override { return "ScoringUnsupported"; }
};

/// Malformed or non-2xx response that retrying will not fix.
class ProtocolError : public GatewayError {
 public:
  using GatewayError::GatewayError;
  const char* kind() const override { return "ProtocolError"; }
};

/// Caller broke an operation precondition; raised before any dispatch.
class PreconditionViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace detailcap::gateway
