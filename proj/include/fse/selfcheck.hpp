#pragma once

#include <cstdint>
#include <ostream>
#include <string>

namespace fse {

struct CheckOutcome {
    bool passed = true;
    std::string report;
};

/// Randomized sweep of the join/meet/combined energy bounds plus the
/// inclusion/energy consistency identities. `samples` triples per dimension.
CheckOutcome run_property_sweep(std::size_t samples, std::uint64_t seed);

/// Finite-difference verification of the encoder + energies + both losses on
/// small instances, plus a corrupted-gradient self-test of the checker.
CheckOutcome run_gradient_checks(int draws, std::uint64_t seed);

}  // namespace fse
