#pragma once

#include <stdexcept>
#include <string>

namespace slidereg {

// Error taxonomy. Callers that need to branch on the failure class (the CLI
// exit-code mapping, the pipeline's flag-and-continue policy) switch on kind.
enum class errc {
    argument,     // bad parameter value
    format,       // malformed file content
    io,           // filesystem failure
    schema,       // CSV/config schema violation
    singular,     // non-invertible transform
    degenerate,   // input lacks the structure the algorithm needs
    empty_mask,   // mask with no foreground
    empty_eval,   // nothing left to score
    overlap,      // no in-domain pixels for a similarity measure
    generation,   // synthetic case could not be produced
    fit_failure,  // no acceptable model found
};

class error : public std::runtime_error {
public:
    error(errc kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    errc kind() const noexcept { return kind_; }

private:
    errc kind_;
};

[[noreturn]] inline void fail(errc kind, const std::string& msg) { throw error(kind, msg); }

inline void require(bool cond, errc kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

} // namespace slidereg
