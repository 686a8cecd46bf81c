#pragma once

#include <stdexcept>
#include <string>

namespace aw {

struct EncodingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KeyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DecryptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParameterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IssueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChainDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SessionClosed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstablishError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AttestationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Protocol abort: carries one of the enumerated cause strings that form the
// stable scenario interface (file_digest_mismatch, search_omission, ...).
struct AbortError : std::runtime_error {
    explicit AbortError(std::string cause_tag, const std::string& detail = "")
        : std::runtime_error(detail.empty() ? cause_tag : cause_tag + ": " + detail),
          cause(std::move(cause_tag)) {}
    std::string cause;
};

} // namespace aw
