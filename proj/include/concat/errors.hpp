#pragma once

#include <stdexcept>
#include <string>

namespace concat {

// Base class for every error this library raises.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// normalize_answer could not extract a decision-relevant answer.
class NoAnswerFound : public Error {
  public:
    explicit NoAnswerFound(const std::string& msg) : Error(msg) {}
};

// The syntax provider could not build a parse tree.
class ParseFailure : public Error {
  public:
    explicit ParseFailure(const std::string& msg) : Error(msg) {}
};

// An aggregate operation received an empty input it cannot define a value on.
class EmptyInput : public Error {
  public:
    explicit EmptyInput(const std::string& msg) : Error(msg) {}
};

// A generation result carried no token probabilities and no fallback is configured.
class MissingLogprobs : public Error {
  public:
    explicit MissingLogprobs(const std::string& msg) : Error(msg) {}
};

// The HTTP backend could not reach the endpoint.
class TransportError : public Error {
  public:
    explicit TransportError(const std::string& msg) : Error(msg) {}
};

// The endpoint answered with a non-success status.
class EndpointError : public Error {
  public:
    EndpointError(int status, const std::string& msg)
        : Error("endpoint returned status " + std::to_string(status) + ": " + msg),
          status_(status) {}
    int status() const { return status_; }

  private:
    int status_;
};

// The endpoint answered 200 but the body did not have the expected shape.
class MalformedResponse : public Error {
  public:
    explicit MalformedResponse(const std::string& msg) : Error(msg) {}
};

// exact_euc was evaluated where the Bayesian normalizer vanishes.
class DegenerateBelief : public Error {
  public:
    explicit DegenerateBelief(const std::string& msg) : Error(msg) {}
};

// roc_auc needs at least one positive and one negative label.
class DegenerateLabels : public Error {
  public:
    explicit DegenerateLabels(const std::string& msg) : Error(msg) {}
};

// efficiency is undefined at zero latency.
class ZeroLatency : public Error {
  public:
    explicit ZeroLatency(const std::string& msg) : Error(msg) {}
};

// A dataset, config, or results file violates its schema.
class SchemaError : public Error {
  public:
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

}  // namespace concat
