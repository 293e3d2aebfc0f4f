#pragma once

#include <stdexcept>
#include <string>

namespace visloop {

// Root of every error the library throws. Each module documents which of the
// subclasses below its operations can raise.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VISLOOP_DEFINE_ERROR(Name)            \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

// Precondition violated by the caller.
VISLOOP_DEFINE_ERROR(UsageError);
// Malformed document or record (trace JSON, dataset line, rule table).
VISLOOP_DEFINE_ERROR(SchemaError);
// Well-formed data whose fields break a type invariant.
VISLOOP_DEFINE_ERROR(InvariantError);
VISLOOP_DEFINE_ERROR(TemplateError);
VISLOOP_DEFINE_ERROR(MissingImage);

// model-client
VISLOOP_DEFINE_ERROR(AuthError);
VISLOOP_DEFINE_ERROR(TransportError);
VISLOOP_DEFINE_ERROR(EmptyResponse);
VISLOOP_DEFINE_ERROR(ScriptExhausted);

class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body)
      : Error("provider returned HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

// sandbox-supervisor
VISLOOP_DEFINE_ERROR(SpawnError);
VISLOOP_DEFINE_ERROR(HandshakeTimeout);
VISLOOP_DEFINE_ERROR(ProtocolError);
VISLOOP_DEFINE_ERROR(KernelCrashed);

#undef VISLOOP_DEFINE_ERROR

}  // namespace visloop
