#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccrf/trellis.hpp"

namespace ccrf {

enum class TemplateKind { adjacency, precedence, state_change, begin_end, presence_precedence };

std::string_view kind_name(TemplateKind kind);
TemplateKind parse_kind(std::string_view name);

/// A relational constraint over label names. `d` is used by state_change only.
///
///   adjacency(A,B)            every A that is not the last label is immediately followed by B
///   precedence(A,B)           every A that is not the last label has a B somewhere after it
///   state_change(A,D,B)       every D is immediately preceded by A and immediately followed by B
///   begin_end(A,B)            a sequence starting with A ends with B
///   presence_precedence(A,B)  no B occurs before an A
struct ConstraintTemplate {
    TemplateKind kind = TemplateKind::adjacency;
    std::string a;
    std::string b;
    std::string d;

    /// Stable textual form, e.g. "state_change(A,D,B)"; used as the final sort key.
    std::string id() const;

    friend bool operator==(const ConstraintTemplate&, const ConstraintTemplate&) = default;
};

/// Throws std::invalid_argument for unknown labels or precedence(A,A).
void validate(const ConstraintTemplate& templ, const LabelAlphabet& alphabet);

/// Direct evaluation of the template on a label sequence.
bool template_holds(const ConstraintTemplate& templ, std::span<const std::string> labels);
/// Whether the premise of the template is present in the sequence; a sequence
/// only counts toward mining statistics when it is.
bool antecedent_fires(const ConstraintTemplate& templ, std::span<const std::string> labels);
/// Positions whose gold labels the template speaks about.
std::vector<std::size_t> governed_positions(const ConstraintTemplate& templ,
                                            std::span<const std::string> labels);

struct RowTerm {
    std::size_t edge = 0;
    std::size_t t = 0;  // step of `edge`, cached for evaluation
    int coefficient = 0;

    friend bool operator==(const RowTerm&, const RowTerm&) = default;
};

/// coefficients . e - constant <= 0 when satisfied.
struct LinearRow {
    std::vector<RowTerm> terms;  // sorted by edge, no zero coefficients
    int constant = 0;

    /// coefficients . e - constant for the given path.
    int value(const PathAssignment& path) const;
    /// Same, given the path's edge indices indexed by step.
    int value(std::span<const std::size_t> path_edges) const;
    std::size_t last_step() const;

    friend bool operator==(const LinearRow&, const LinearRow&) = default;
};

struct Encoding {
    std::vector<LinearRow> rows;
    /// True when the sequence is too short for the template to say anything.
    bool vacuous = false;
};

Encoding encode(const ConstraintTemplate& templ, std::size_t n, const LabelAlphabet& alphabet);

/// A template with the cost of violating it.
struct WeightedConstraint {
    ConstraintTemplate templ;
    double cost = 0.0;

    friend bool operator==(const WeightedConstraint&, const WeightedConstraint&) = default;
};

struct ConstraintGroup {
    ConstraintTemplate templ;
    std::vector<LinearRow> rows;
    double cost = 0.0;
};

/// Constraints instantiated for one sequence length. Every group shares one
/// violation indicator across its rows.
class ConstraintSystem {
public:
    ConstraintSystem(LabelAlphabet alphabet, std::size_t n) : alphabet_(std::move(alphabet)), n_(n) {}

    static ConstraintSystem build(const LabelAlphabet& alphabet, std::size_t n,
                                  std::span<const WeightedConstraint> constraints);

    void add(const ConstraintTemplate& templ, double cost);

    const LabelAlphabet& alphabet() const noexcept { return alphabet_; }
    std::size_t length() const noexcept { return n_; }
    const std::vector<ConstraintGroup>& groups() const noexcept { return groups_; }
    std::size_t num_rows() const noexcept { return num_rows_; }
    bool empty() const noexcept { return num_rows_ == 0; }

    /// All rows in group order, the row space of the Lagrangian multipliers.
    std::vector<const LinearRow*> rows() const;

private:
    LabelAlphabet alphabet_;
    std::size_t n_;
    std::vector<ConstraintGroup> groups_;
    std::size_t num_rows_ = 0;
};

/// sigma_c = 1 iff some row of group c is violated by the path.
std::vector<std::uint8_t> check_violation(const ConstraintSystem& system, const PathAssignment& path);

/// c^T sigma, summed in group order.
double violation_total(const ConstraintSystem& system, std::span<const std::uint8_t> sigma);

/// -log((violated + 1) / (satisfied + violated + 2)); add-one smoothed.
double violation_cost(std::size_t satisfied, std::size_t violated);

struct MiningOptions {
    std::size_t min_support = 1;
    double max_violation_rate = 0.1;
    /// Labels that may play the D role of state_change.
    std::vector<std::string> separators;
};

struct MinedConstraint {
    ConstraintTemplate templ;
    std::size_t support = 0;
    std::size_t violations = 0;
    double violation_rate = 0.0;
    double cost = 0.0;
};

/// Frequency-based template mining over gold label sequences, sorted by
/// ascending violation rate, descending support, then template id.
std::vector<MinedConstraint> mine(std::span<const std::vector<std::string>> corpus,
                                  const MiningOptions& options = {});

void write_constraints(std::ostream& out, std::span<const WeightedConstraint> constraints);
std::vector<WeightedConstraint> read_constraints(std::istream& in);

}  // namespace ccrf
