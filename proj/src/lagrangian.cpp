#include "ccrf/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "ccrf/error.hpp"

namespace ccrf {

DualEvaluation dual_value(const Trellis& trellis, const ConstraintSystem& system, std::span<const double> lambda) {
    if (lambda.size() != system.num_rows()) {
        throw std::invalid_argument("dual_value: expected " + std::to_string(system.num_rows()) +
                                    " multipliers, got " + std::to_string(lambda.size()));
    }
    if (system.length() != trellis.length() || !(system.alphabet() == trellis.alphabet())) {
        throw std::invalid_argument("dual_value: constraint system does not match the trellis");
    }
    std::vector<double> w(trellis.weights().begin(), trellis.weights().end());
    double offset = 0.0;
    std::size_t r = 0;
    for (const auto* row : system.rows()) {
        const double l = lambda[r++];
        if (!(l >= 0.0)) throw std::invalid_argument("dual_value: multipliers must be >= 0");
        if (l == 0.0) continue;
        for (const auto& term : row->terms) w[term.edge] -= l * term.coefficient;
        offset += l * row->constant;
    }
    const Trellis penalized(trellis.alphabet(), trellis.length(), std::move(w));
    PathAssignment path = viterbi(penalized);
    return {path_score(penalized, path) + offset, std::move(path)};
}

std::vector<double> subgradient(const ConstraintSystem& system, const PathAssignment& path) {
    if (path.length() != system.length() || path.num_labels() != system.alphabet().size()) {
        throw data_error("subgradient: path dimensions do not match the constraint system");
    }
    const auto edges = path.edges();
    std::vector<double> g;
    g.reserve(system.num_rows());
    for (const auto* row : system.rows()) g.push_back(row->value(edges));
    return g;
}

double harmonic_step(std::size_t k) { return 1.0 / (static_cast<double>(k) + 1.0); }

DualResult solve_dual(const Trellis& trellis, const ConstraintSystem& system, const DualOptions& options) {
    if (options.max_iterations == 0) throw std::invalid_argument("solve_dual: max_iterations must be >= 1");
    DualResult result;
    result.lambda.assign(system.num_rows(), 0.0);
    result.best_dual = std::numeric_limits<double>::infinity();
    result.status = DualStatus::iteration_limit;

    std::optional<PathAssignment> best_feasible;
    double best_feasible_score = -std::numeric_limits<double>::infinity();
    PathAssignment at_best_dual;
    std::size_t stall = 0;

    for (std::size_t k = 0; k < options.max_iterations; ++k) {
        DualEvaluation eval = dual_value(trellis, system, result.lambda);
        const std::vector<double> g = subgradient(system, eval.path);

        double norm2 = 0.0;
        double slackness = 0.0;
        bool feasible = true;
        for (std::size_t r = 0; r < g.size(); ++r) {
            norm2 += g[r] * g[r];
            slackness += result.lambda[r] * g[r];
            if (g[r] > 0.0) feasible = false;
        }
        const double norm = std::sqrt(norm2);

        if (eval.value < result.best_dual - options.tolerance) {
            stall = 0;
        } else {
            ++stall;
        }
        if (eval.value < result.best_dual) {
            result.best_dual = eval.value;
            at_best_dual = eval.path;
        }
        if (feasible) {
            const double score = path_score(trellis, eval.path);
            if (!best_feasible || score > best_feasible_score) {
                best_feasible = eval.path;
                best_feasible_score = score;
            }
        }

        DualIterate it{k, eval.value, norm, feasible, 0.0};
        // Feasible with complementary slackness: L equals the primal score up to tolerance.
        if (feasible && -slackness <= options.tolerance) {
            result.history.push_back(it);
            result.status = DualStatus::certified;
            break;
        }
        if (stall >= options.stall_iterations) {
            result.history.push_back(it);
            result.status = DualStatus::stalled;
            break;
        }

        it.theta = options.step(k);
        result.history.push_back(it);
        if (k + 1 == options.max_iterations) break;
        for (std::size_t r = 0; r < g.size(); ++r) {
            result.lambda[r] = std::max(0.0, result.lambda[r] + it.theta * g[r] / norm);
        }
    }

    if (best_feasible) {
        result.path = *best_feasible;
        result.primal_feasible = true;
        result.primal_score = best_feasible_score;
    } else {
        result.path = at_best_dual;
        result.primal_score = path_score(trellis, at_best_dual);
    }
    return result;
}

const char* status_name(DualStatus status) {
    switch (status) {
        case DualStatus::certified: return "certified";
        case DualStatus::stalled: return "stalled";
        case DualStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

std::string trace_csv_header() { return "k,L(lambda_k),||g_k||,feasible,theta_k"; }

std::string trace_csv_row(const DualIterate& it) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%s,%.17g", it.k, it.dual, it.subgradient_norm,
                  it.feasible ? "true" : "false", it.theta);
    return buf;
}

void write_trace_csv(std::ostream& out, std::span<const DualIterate> history) {
    out << trace_csv_header() << '\n';
    for (const auto& it : history) out << trace_csv_row(it) << '\n';
}

}  // namespace ccrf
