#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccrf/constraints.hpp"
#include "ccrf/trellis.hpp"

namespace ccrf {

struct DualEvaluation {
    double value = 0.0;
    PathAssignment path;
};

/// L(lambda) = max_e (M - H^T lambda) . e + lambda^T b, one multiplier per row of
/// the system in group order. The maximizer is found by Viterbi on the
/// penalized weights. Throws std::invalid_argument for negative or
/// wrongly-sized multipliers.
DualEvaluation dual_value(const Trellis& trellis, const ConstraintSystem& system, std::span<const double> lambda);

/// H . e - b, per row. Its negation is a subgradient of L at any lambda whose
/// maximizer is `path`.
std::vector<double> subgradient(const ConstraintSystem& system, const PathAssignment& path);

/// Default step rule, 1 / (k + 1).
double harmonic_step(std::size_t k);

struct DualOptions {
    std::size_t max_iterations = 200;
    /// Stop once best_dual has not dropped by more than `tolerance` for this
    /// many consecutive iterations.
    std::size_t stall_iterations = 50;
    double tolerance = 1e-6;
    std::function<double(std::size_t)> step = harmonic_step;
};

struct DualIterate {
    std::size_t k = 0;
    double dual = 0.0;
    double subgradient_norm = 0.0;
    bool feasible = false;
    double theta = 0.0;
};

enum class DualStatus {
    /// A feasible maximizer with lambda^T (H e - b) within tolerance of zero.
    certified,
    stalled,
    iteration_limit,
};

struct DualResult {
    /// Best feasible path seen, or the maximizer at best_dual when none was feasible.
    PathAssignment path;
    bool primal_feasible = false;
    /// True score M . e of `path`.
    double primal_score = 0.0;
    double best_dual = 0.0;
    DualStatus status = DualStatus::iteration_limit;
    std::vector<double> lambda;
    std::vector<DualIterate> history;

    /// best_dual - primal_score, when a feasible path was recovered.
    std::optional<double> gap() const {
        if (!primal_feasible) return std::nullopt;
        return best_dual - primal_score;
    }
};

/// Projected subgradient descent on L from lambda = 0.
DualResult solve_dual(const Trellis& trellis, const ConstraintSystem& system, const DualOptions& options = {});

const char* status_name(DualStatus status);

/// CSV with columns k, L(lambda_k), ||g_k||, feasible, theta_k.
void write_trace_csv(std::ostream& out, std::span<const DualIterate> history);
/// The header line and one data line of that CSV, without line terminators.
std::string trace_csv_header();
std::string trace_csv_row(const DualIterate& it);

}  // namespace ccrf
