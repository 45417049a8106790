#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>

namespace capsearch {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument or parameter constraint violation.
struct InvalidParameter : Error {
    using Error::Error;
};

// Malformed input file (CSV table, sidecar metadata, config-space JSON).
struct ParseError : Error {
    using Error::Error;
};

// A measurement was requested past the censoring cap of a table cell whose
// true runtime is unknown beyond the cap.
struct CensoringError : Error {
    std::int64_t config_id;
    std::int64_t instance_id;
    double limit;
    double cap;
    CensoringError(std::int64_t i, std::int64_t j, double lim, double cap_s)
        : Error("measurement limit " + std::to_string(lim) + "s exceeds table cap " +
                std::to_string(cap_s) + "s on censored cell (config " + std::to_string(i) +
                ", instance " + std::to_string(j) + ")"),
          config_id(i), instance_id(j), limit(lim), cap(cap_s) {}
};

// Child process could not be spawned, killed, or reaped.
struct SubprocessError : Error {
    using Error::Error;
};

// Phase-count safety cap hit before the search terminated.
struct MaxPhasesExceeded : Error {
    using Error::Error;
};

}  // namespace capsearch
