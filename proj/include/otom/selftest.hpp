#pragma once

// Quick invariant suite behind `otom selftest`.

#include <cstdint>
#include <string>
#include <vector>

namespace otom {

struct SelftestCheck {
    std::string name;
    double worst = 0.0;  // largest observed violation
    double tolerance = 0.0;
    bool passed = false;
};

/// Deterministic in the seed; a few seconds on one core.
std::vector<SelftestCheck> run_selftest(std::uint64_t seed);

}  // namespace otom
