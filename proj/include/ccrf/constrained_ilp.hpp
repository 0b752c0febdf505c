#pragma once

#include <cstdint>
#include <vector>

#include "ccrf/constraints.hpp"
#include "ccrf/trellis.hpp"

namespace ccrf {

/// Lowest admissible path score for a relative threshold tau in [0, 1]:
/// tau * z when z >= 0, otherwise z - (1 - tau) * |z|. Both forms equal z at
/// tau = 1.
double score_floor(double z_star, double tau);

/// Minimum-violation-cost decoding under a score floor relative to the best
/// unconstrained path.
class ConstrainedProblem {
public:
    /// Throws std::invalid_argument when tau is outside [0, 1] or the system
    /// was built for another sequence length or alphabet.
    ConstrainedProblem(Trellis trellis, ConstraintSystem system, double tau);

    const Trellis& trellis() const noexcept { return trellis_; }
    const ConstraintSystem& system() const noexcept { return system_; }
    double tau() const noexcept { return tau_; }
    /// Score of the Viterbi path.
    double z_star() const noexcept { return z_star_; }
    double floor() const noexcept { return score_floor(z_star_, tau_); }

private:
    Trellis trellis_;
    ConstraintSystem system_;
    double tau_;
    double z_star_;
};

struct ConstrainedSolution {
    PathAssignment path;
    std::vector<std::uint8_t> sigma;
    double total_cost = 0.0;
    double score = 0.0;
};

struct UnconstrainedSolution {
    PathAssignment path;
    double score = 0.0;
};

/// Longest start-to-end path by branch and bound over label prefixes, with the
/// same tie-break as viterbi. Kept separate from viterbi so the two can be
/// checked against each other.
UnconstrainedSolution solve_unconstrained(const Trellis& trellis);

/// Exact search: among paths with score >= floor, minimize the violation cost;
/// ties go to the higher score, then canonical order. Throws cap_exceeded when
/// m^n > cap and infeasible_error when no path reaches the floor.
ConstrainedSolution solve_min_violation(const ConstrainedProblem& problem,
                                        std::uint64_t cap = kDefaultPathCap);

}  // namespace ccrf
