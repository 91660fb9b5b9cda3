#pragma once

#include <stdexcept>
#include <string>

namespace air {

// Raised when an input file or directory cannot be read at all.
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Template rendering failed (unknown template, unbound placeholder).
struct TemplateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A tagged field could not be extracted from a model response.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Provider call failed. `retryable` drives the gateway retry loop.
struct TransportError : std::runtime_error {
    int status;
    bool retryable;
    TransportError(const std::string& msg, int status_code = 0, bool can_retry = false)
        : std::runtime_error(msg), status(status_code), retryable(can_retry) {}
};

// Scripted mock had no matching entry for a call.
struct MockScriptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A stage exceeded its configured call budget.
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace air
