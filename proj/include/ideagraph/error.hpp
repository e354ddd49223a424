#pragma once

#include <stdexcept>
#include <string>

namespace ideagraph {

enum class ErrorCategory {
  io,
  validation,
  precondition,
  contract,
  structured_output,
  backend,
  protocol,
  retrieval,
  generation,
  dependency,
  usage,
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::io: return "io";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::precondition: return "precondition";
    case ErrorCategory::contract: return "contract";
    case ErrorCategory::structured_output: return "structured-output";
    case ErrorCategory::backend: return "backend";
    case ErrorCategory::protocol: return "protocol";
    case ErrorCategory::retrieval: return "retrieval";
    case ErrorCategory::generation: return "generation";
    case ErrorCategory::dependency: return "dependency";
    case ErrorCategory::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define IDEAGRAPH_DEFINE_ERROR(Name, Cat)                               \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorCategory::Cat, what) {} \
  };

IDEAGRAPH_DEFINE_ERROR(IoError, io)
IDEAGRAPH_DEFINE_ERROR(ValidationError, validation)
IDEAGRAPH_DEFINE_ERROR(PreconditionError, precondition)
IDEAGRAPH_DEFINE_ERROR(ContractError, contract)
IDEAGRAPH_DEFINE_ERROR(BackendError, backend)
IDEAGRAPH_DEFINE_ERROR(ProtocolError, protocol)
IDEAGRAPH_DEFINE_ERROR(RetrievalError, retrieval)
IDEAGRAPH_DEFINE_ERROR(GenerationError, generation)
IDEAGRAPH_DEFINE_ERROR(DependencyError, dependency)
IDEAGRAPH_DEFINE_ERROR(UsageError, usage)

#undef IDEAGRAPH_DEFINE_ERROR

// Schema still violated after the repair budget was spent.
class StructuredOutputError : public Error {
 public:
  StructuredOutputError(const std::string& what, std::string last_raw)
      : Error(ErrorCategory::structured_output, what), last_raw_(std::move(last_raw)) {}

  const std::string& last_raw_response() const noexcept { return last_raw_; }

 private:
  std::string last_raw_;
};

}  // namespace ideagraph
