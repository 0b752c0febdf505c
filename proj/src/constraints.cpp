#include "ccrf/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "ccrf/error.hpp"

namespace ccrf {

namespace {

constexpr std::string_view kKindNames[] = {"adjacency", "precedence", "state_change", "begin_end",
                                           "presence_precedence"};

bool has_d(TemplateKind kind) { return kind == TemplateKind::state_change; }

/// Accumulates integer coefficients keyed by edge index.
class RowBuilder {
public:
    RowBuilder(std::size_t n, std::size_t m) : n_(n), m_(m) {}

    void add(std::size_t t, int from, int to, int coefficient) {
        coefficients_[edge_index(Edge{t, from, to}, n_, m_)] += coefficient;
    }

    /// Every edge of step t that enters `label`.
    void add_entering(std::size_t t, int label, int coefficient, int skip_from = kAnyNode) {
        if (t == 0) {
            if (skip_from != kStartNode) add(0, kStartNode, label, coefficient);
            return;
        }
        for (int y = 0; y < static_cast<int>(m_); ++y) {
            if (y != skip_from) add(t, y, label, coefficient);
        }
    }

    /// Every edge of step t that leaves `label`.
    void add_leaving(std::size_t t, int label, int coefficient, int skip_to = kAnyNode) {
        if (t == n_) {
            if (skip_to != kEndNode) add(n_, label, kEndNode, coefficient);
            return;
        }
        for (int y = 0; y < static_cast<int>(m_); ++y) {
            if (y != skip_to) add(t, label, y, coefficient);
        }
    }

    /// Appends the finished row unless it has no terms.
    void emit(std::vector<LinearRow>& rows, int constant) {
        LinearRow row;
        row.constant = constant;
        for (auto [edge, c] : coefficients_) {
            if (c != 0) row.terms.push_back(RowTerm{edge, edge_at(edge, n_, m_).t, c});
        }
        coefficients_.clear();
        if (!row.terms.empty()) rows.push_back(std::move(row));
    }

    static constexpr int kAnyNode = -100;

private:
    std::size_t n_;
    std::size_t m_;
    std::map<std::size_t, int> coefficients_;
};

}  // namespace

std::string_view kind_name(TemplateKind kind) { return kKindNames[static_cast<int>(kind)]; }

TemplateKind parse_kind(std::string_view name) {
    for (int k = 0; k < 5; ++k) {
        if (kKindNames[k] == name) return static_cast<TemplateKind>(k);
    }
    throw data_error("unknown constraint kind '" + std::string(name) + "'");
}

std::string ConstraintTemplate::id() const {
    std::string out(kind_name(kind));
    out += '(' + a + ',';
    if (has_d(kind)) out += d + ',';
    out += b + ')';
    return out;
}

void validate(const ConstraintTemplate& templ, const LabelAlphabet& alphabet) {
    auto check = [&](const std::string& label, const char* role) {
        if (!alphabet.find(label)) {
            throw std::invalid_argument(templ.id() + ": " + role + " label '" + label + "' is not in the alphabet");
        }
    };
    check(templ.a, "A");
    check(templ.b, "B");
    if (has_d(templ.kind)) check(templ.d, "D");
    if (templ.kind == TemplateKind::precedence && templ.a == templ.b) {
        throw std::invalid_argument(templ.id() + ": self-precedence is vacuous");
    }
}

bool template_holds(const ConstraintTemplate& templ, std::span<const std::string> y) {
    const std::size_t n = y.size();
    if (n == 0) return true;
    switch (templ.kind) {
        case TemplateKind::adjacency:
            for (std::size_t i = 0; i + 1 < n; ++i) {
                if (y[i] == templ.a && y[i + 1] != templ.b) return false;
            }
            return true;
        case TemplateKind::precedence: {
            // Scan backwards remembering whether a B lies strictly ahead.
            bool b_ahead = false;
            for (std::size_t i = n; i-- > 0;) {
                if (i + 1 < n && y[i] == templ.a && !b_ahead) return false;
                if (y[i] == templ.b) b_ahead = true;
            }
            return true;
        }
        case TemplateKind::state_change:
            for (std::size_t i = 0; i < n; ++i) {
                if (y[i] != templ.d) continue;
                if (i == 0 || i + 1 == n || y[i - 1] != templ.a || y[i + 1] != templ.b) return false;
            }
            return true;
        case TemplateKind::begin_end:
            return y.front() != templ.a || y.back() == templ.b;
        case TemplateKind::presence_precedence: {
            bool seen_b = false;
            for (const auto& label : y) {
                if (label == templ.a && seen_b) return false;
                if (label == templ.b) seen_b = true;
            }
            return true;
        }
    }
    return true;
}

bool antecedent_fires(const ConstraintTemplate& templ, std::span<const std::string> y) {
    const std::size_t n = y.size();
    if (n == 0) return false;
    auto contains = [&](const std::string& label) { return std::find(y.begin(), y.end(), label) != y.end(); };
    switch (templ.kind) {
        case TemplateKind::adjacency:
        case TemplateKind::precedence:
            return std::find(y.begin(), y.end() - 1, templ.a) != y.end() - 1;
        case TemplateKind::state_change:
            return contains(templ.d);
        case TemplateKind::begin_end:
            return y.front() == templ.a;
        case TemplateKind::presence_precedence:
            return contains(templ.a) && contains(templ.b);
    }
    return false;
}

std::vector<std::size_t> governed_positions(const ConstraintTemplate& templ, std::span<const std::string> y) {
    const std::size_t n = y.size();
    std::vector<bool> mark(n, false);
    if (antecedent_fires(templ, y)) {
        switch (templ.kind) {
            case TemplateKind::adjacency:
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    if (y[i] == templ.a) mark[i] = mark[i + 1] = true;
                }
                break;
            case TemplateKind::precedence: {
                bool after_a = false;
                for (std::size_t i = 0; i < n; ++i) {
                    if ((y[i] == templ.a && i + 1 < n) || (after_a && y[i] == templ.b)) mark[i] = true;
                    if (y[i] == templ.a) after_a = true;
                }
                break;
            }
            case TemplateKind::state_change:
                for (std::size_t i = 0; i < n; ++i) {
                    if (y[i] != templ.d) continue;
                    mark[i] = true;
                    if (i > 0) mark[i - 1] = true;
                    if (i + 1 < n) mark[i + 1] = true;
                }
                break;
            case TemplateKind::begin_end:
                mark.front() = mark.back() = true;
                break;
            case TemplateKind::presence_precedence:
                for (std::size_t i = 0; i < n; ++i) mark[i] = y[i] == templ.a || y[i] == templ.b;
                break;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (mark[i]) out.push_back(i);
    }
    return out;
}

int LinearRow::value(std::span<const std::size_t> path_edges) const {
    int v = -constant;
    for (const auto& term : terms) {
        if (path_edges[term.t] == term.edge) v += term.coefficient;
    }
    return v;
}

int LinearRow::value(const PathAssignment& path) const {
    const auto edges = path.edges();
    return value(std::span<const std::size_t>(edges));
}

std::size_t LinearRow::last_step() const {
    std::size_t t = 0;
    for (const auto& term : terms) t = std::max(t, term.t);
    return t;
}

Encoding encode(const ConstraintTemplate& templ, std::size_t n, const LabelAlphabet& alphabet) {
    if (n == 0) throw std::invalid_argument("encode: sequence length must be >= 1");
    validate(templ, alphabet);
    const int a = alphabet.index_of(templ.a);
    const int b = alphabet.index_of(templ.b);
    const std::size_t m = alphabet.size();
    RowBuilder row(n, m);
    Encoding out;

    switch (templ.kind) {
        case TemplateKind::adjacency:
            for (std::size_t t = 1; t < n; ++t) {
                row.add_entering(t - 1, a, +1);
                row.add(t, a, b, -1);
                row.emit(out.rows, 0);
            }
            break;
        case TemplateKind::precedence:
            for (std::size_t t = 1; t < n; ++t) {
                row.add_entering(t - 1, a, +1);
                for (std::size_t s = t + 1; s <= n; ++s) row.add_leaving(s, b, -1);
                row.emit(out.rows, 0);
            }
            break;
        case TemplateKind::state_change: {
            const int d = alphabet.index_of(templ.d);
            for (std::size_t t = 1; t <= n; ++t) {
                row.add_entering(t - 1, d, +1, a);
                row.emit(out.rows, 0);
                row.add_leaving(t, d, +1, b);
                row.emit(out.rows, 0);
            }
            break;
        }
        case TemplateKind::begin_end:
            row.add(0, kStartNode, a, +1);
            row.add(n, b, kEndNode, -1);
            row.emit(out.rows, 0);
            break;
        case TemplateKind::presence_precedence:
            for (std::size_t t = 2; t <= n; ++t) {
                for (std::size_t t_before = 1; t_before < t; ++t_before) {
                    row.add_entering(t - 1, a, +1);
                    row.add_entering(t_before - 1, b, +1);
                    row.emit(out.rows, 1);
                }
            }
            break;
    }
    out.vacuous = out.rows.empty();
    return out;
}

ConstraintSystem ConstraintSystem::build(const LabelAlphabet& alphabet, std::size_t n,
                                         std::span<const WeightedConstraint> constraints) {
    ConstraintSystem system(alphabet, n);
    for (const auto& c : constraints) system.add(c.templ, c.cost);
    return system;
}

void ConstraintSystem::add(const ConstraintTemplate& templ, double cost) {
    if (!(cost >= 0.0) || !std::isfinite(cost)) {
        throw std::invalid_argument(templ.id() + ": violation cost must be finite and >= 0");
    }
    Encoding enc = encode(templ, n_, alphabet_);
    num_rows_ += enc.rows.size();
    groups_.push_back(ConstraintGroup{templ, std::move(enc.rows), cost});
}

std::vector<const LinearRow*> ConstraintSystem::rows() const {
    std::vector<const LinearRow*> out;
    out.reserve(num_rows_);
    for (const auto& g : groups_) {
        for (const auto& r : g.rows) out.push_back(&r);
    }
    return out;
}

std::vector<std::uint8_t> check_violation(const ConstraintSystem& system, const PathAssignment& path) {
    if (path.length() != system.length() || path.num_labels() != system.alphabet().size()) {
        throw data_error("path dimensions do not match the constraint system");
    }
    const auto edges = path.edges();
    std::vector<std::uint8_t> sigma;
    sigma.reserve(system.groups().size());
    for (const auto& g : system.groups()) {
        bool violated = std::any_of(g.rows.begin(), g.rows.end(),
                                    [&](const LinearRow& r) { return r.value(edges) > 0; });
        sigma.push_back(violated ? 1 : 0);
    }
    return sigma;
}

double violation_total(const ConstraintSystem& system, std::span<const std::uint8_t> sigma) {
    double total = 0.0;
    for (std::size_t c = 0; c < sigma.size(); ++c) {
        if (sigma[c]) total += system.groups()[c].cost;
    }
    return total;
}

double violation_cost(std::size_t satisfied, std::size_t violated) {
    if (satisfied + violated == 0) throw std::invalid_argument("violation_cost: no observations");
    constexpr double alpha = 1.0;
    return -std::log((static_cast<double>(violated) + alpha) /
                     (static_cast<double>(satisfied + violated) + 2.0 * alpha));
}

std::vector<MinedConstraint> mine(std::span<const std::vector<std::string>> corpus, const MiningOptions& options) {
    std::vector<std::string> labels;
    for (const auto& seq : corpus) {
        for (const auto& l : seq) {
            if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
        }
    }

    std::vector<ConstraintTemplate> candidates;
    for (const auto& a : labels) {
        for (const auto& b : labels) {
            candidates.push_back({TemplateKind::adjacency, a, b, {}});
            if (a != b) candidates.push_back({TemplateKind::precedence, a, b, {}});
            candidates.push_back({TemplateKind::begin_end, a, b, {}});
            candidates.push_back({TemplateKind::presence_precedence, a, b, {}});
            for (const auto& d : options.separators) {
                if (std::find(labels.begin(), labels.end(), d) != labels.end()) {
                    candidates.push_back({TemplateKind::state_change, a, b, d});
                }
            }
        }
    }

    std::vector<MinedConstraint> out;
    for (auto& templ : candidates) {
        MinedConstraint mc;
        for (const auto& seq : corpus) {
            if (!antecedent_fires(templ, seq)) continue;
            ++mc.support;
            if (!template_holds(templ, seq)) ++mc.violations;
        }
        if (mc.support == 0 || mc.support < options.min_support) continue;
        mc.violation_rate = static_cast<double>(mc.violations) / static_cast<double>(mc.support);
        if (mc.violation_rate > options.max_violation_rate) continue;
        mc.cost = violation_cost(mc.support - mc.violations, mc.violations);
        mc.templ = std::move(templ);
        out.push_back(std::move(mc));
    }

    std::sort(out.begin(), out.end(), [](const MinedConstraint& x, const MinedConstraint& y) {
        // Exact rational comparison of violations/support.
        const auto lhs = x.violations * y.support;
        const auto rhs = y.violations * x.support;
        if (lhs != rhs) return lhs < rhs;
        if (x.support != y.support) return x.support > y.support;
        return x.templ.id() < y.templ.id();
    });
    return out;
}

void write_constraints(std::ostream& out, std::span<const WeightedConstraint> constraints) {
    out << "# kind\tA\tB\t[D]\tcost\n";
    char buf[40];
    for (const auto& c : constraints) {
        std::snprintf(buf, sizeof buf, "%.17g", c.cost);
        out << kind_name(c.templ.kind) << '\t' << c.templ.a << '\t' << c.templ.b;
        if (has_d(c.templ.kind)) out << '\t' << c.templ.d;
        out << '\t' << buf << '\n';
    }
}

std::vector<WeightedConstraint> read_constraints(std::istream& in) {
    std::vector<WeightedConstraint> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (true) {
            auto tab = line.find('\t', pos);
            f.push_back(line.substr(pos, tab - pos));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        const std::string where = "constraints: line " + std::to_string(line_no) + ": ";
        WeightedConstraint c;
        try {
            c.templ.kind = parse_kind(f[0]);
        } catch (const data_error& e) {
            throw data_error(where + e.what());
        }
        const std::size_t expected = has_d(c.templ.kind) ? 5 : 4;
        if (f.size() != expected) {
            throw data_error(where + "expected " + std::to_string(expected) + " fields, got " + std::to_string(f.size()));
        }
        c.templ.a = f[1];
        c.templ.b = f[2];
        if (has_d(c.templ.kind)) c.templ.d = f[3];
        if (c.templ.a.empty() || c.templ.b.empty() || (has_d(c.templ.kind) && c.templ.d.empty())) {
            throw data_error(where + "empty label");
        }
        try {
            std::size_t used = 0;
            c.cost = std::stod(f.back(), &used);
            if (used != f.back().size()) throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
            throw data_error(where + "bad cost '" + f.back() + "'");
        }
        if (!(c.cost >= 0.0) || !std::isfinite(c.cost)) throw data_error(where + "cost must be finite and >= 0");
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace ccrf
