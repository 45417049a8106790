#pragma once
#include <cstdint>
#include <string>

#include "capsearch/errors.hpp"

namespace capsearch {

enum class StoppingRule { Fixed, Bernstein, Ebg };

// Policy for table cells at the censoring cap: Strict refuses measurements
// that would need information past the cap, Clamp truncates with a warning.
enum class Censoring { Strict, Clamp };

inline const char* to_string(StoppingRule r) {
    switch (r) {
        case StoppingRule::Fixed: return "fixed";
        case StoppingRule::Bernstein: return "bernstein";
        case StoppingRule::Ebg: return "ebg";
    }
    return "?";
}

inline StoppingRule stopping_rule_from_string(const std::string& s) {
    if (s == "fixed") return StoppingRule::Fixed;
    if (s == "bernstein") return StoppingRule::Bernstein;
    if (s == "ebg") return StoppingRule::Ebg;
    throw InvalidParameter("unknown stopping rule '" + s + "' (expected fixed|bernstein|ebg)");
}

inline const char* to_string(Censoring c) {
    return c == Censoring::Strict ? "strict" : "clamp";
}

inline Censoring censoring_from_string(const std::string& s) {
    if (s == "strict") return Censoring::Strict;
    if (s == "clamp") return Censoring::Clamp;
    throw InvalidParameter("unknown censoring policy '" + s + "' (expected strict|clamp)");
}

struct SearchParams {
    double epsilon = 0.2;      // precision, in (0, 1/3)
    double delta = 0.2;        // quantile parameter, in (0, 1)
    double zeta = 0.1;         // failure probability, in (0, 1)
    double kappa0 = 1.0;       // minimum runtime, seconds
    double multiplier = 2.0;   // per-phase growth factor for theta, > 1
    std::uint64_t seed = 0;
    StoppingRule rule = StoppingRule::Fixed;
    // A/B switch: advance the geometric grid index one step per sample (the
    // literal pseudocode) instead of looping until j <= floor(beta^l).
    bool ebg_single_step_grid = false;

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0 / 3.0))
            throw InvalidParameter("epsilon must be in (0, 1/3), got " + std::to_string(epsilon));
        if (!(delta > 0.0 && delta < 1.0))
            throw InvalidParameter("delta must be in (0, 1), got " + std::to_string(delta));
        if (!(zeta > 0.0 && zeta < 1.0))
            throw InvalidParameter("zeta must be in (0, 1), got " + std::to_string(zeta));
        if (!(kappa0 > 0.0))
            throw InvalidParameter("kappa0 must be > 0, got " + std::to_string(kappa0));
        if (!(multiplier > 1.0))
            throw InvalidParameter("multiplier must be > 1, got " + std::to_string(multiplier));
    }
};

}  // namespace capsearch
