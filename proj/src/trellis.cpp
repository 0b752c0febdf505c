#include "ccrf/trellis.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "ccrf/error.hpp"

namespace ccrf {

LabelAlphabet::LabelAlphabet(std::vector<std::string> labels, std::string start_label,
                             std::string end_label)
    : labels_(std::move(labels)), start_(std::move(start_label)), end_(std::move(end_label)) {
    if (labels_.empty()) {
        throw std::invalid_argument("label alphabet must contain at least one label");
    }
    if (start_ == end_) {
        throw std::invalid_argument("start and end labels must differ: " + start_);
    }
    std::unordered_set<std::string> seen;
    for (const auto& label : labels_) {
        if (label == start_ || label == end_) {
            throw std::invalid_argument("label '" + label + "' collides with a start/end label");
        }
        if (!seen.insert(label).second) {
            throw std::invalid_argument("duplicate label '" + label + "'");
        }
    }
}

const std::string& LabelAlphabet::label(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= labels_.size()) {
        throw std::out_of_range("label id " + std::to_string(id) + " out of range");
    }
    return labels_[static_cast<std::size_t>(id)];
}

const std::string& LabelAlphabet::node_name(int node) const {
    if (node == kStartNode) return start_;
    if (node == kEndNode) return end_;
    return label(node);
}

std::optional<int> LabelAlphabet::find(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == label) return static_cast<int>(i);
    }
    return std::nullopt;
}

std::optional<int> LabelAlphabet::find_node(std::string_view name) const {
    if (name == start_) return kStartNode;
    if (name == end_) return kEndNode;
    return find(name);
}

int LabelAlphabet::index_of(std::string_view label) const {
    if (auto id = find(label)) return *id;
    throw data_error("unknown label '" + std::string(label) + "'");
}

std::size_t edge_space_size(std::size_t n, std::size_t m) {
    return (n - 1) * m * m + 2 * m;
}

std::size_t edge_index(const Edge& edge, std::size_t n, std::size_t m) {
    const auto real = [m](int node) { return node >= 0 && static_cast<std::size_t>(node) < m; };
    if (n == 0) throw std::invalid_argument("edge_index: sequence length must be >= 1");
    if (edge.t > n) {
        throw std::invalid_argument("edge_index: t=" + std::to_string(edge.t) +
                                    " exceeds sequence length " + std::to_string(n));
    }
    if (edge.t == 0) {
        if (edge.from != kStartNode) {
            throw std::invalid_argument("edge_index: from_label at t=0 must be the start label");
        }
        if (!real(edge.to)) throw std::invalid_argument("edge_index: to_label at t=0 must be a real label");
        return static_cast<std::size_t>(edge.to);
    }
    if (edge.t == n) {
        if (!real(edge.from)) {
            throw std::invalid_argument("edge_index: from_label at t=n must be a real label");
        }
        if (edge.to != kEndNode) throw std::invalid_argument("edge_index: to_label at t=n must be the end label");
        return m + (n - 1) * m * m + static_cast<std::size_t>(edge.from);
    }
    if (!real(edge.from)) {
        throw std::invalid_argument("edge_index: from_label at t=" + std::to_string(edge.t) +
                                    " must be a real label");
    }
    if (!real(edge.to)) {
        throw std::invalid_argument("edge_index: to_label at t=" + std::to_string(edge.t) +
                                    " must be a real label");
    }
    return m + (edge.t - 1) * m * m + static_cast<std::size_t>(edge.from) * m +
           static_cast<std::size_t>(edge.to);
}

std::size_t edge_index(std::size_t t, std::string_view from_label, std::string_view to_label,
                       std::size_t n, const LabelAlphabet& alphabet) {
    auto from = alphabet.find_node(from_label);
    if (!from) throw std::invalid_argument("edge_index: unknown from_label '" + std::string(from_label) + "'");
    auto to = alphabet.find_node(to_label);
    if (!to) throw std::invalid_argument("edge_index: unknown to_label '" + std::string(to_label) + "'");
    return edge_index(Edge{t, *from, *to}, n, alphabet.size());
}

Edge edge_at(std::size_t index, std::size_t n, std::size_t m) {
    if (index >= edge_space_size(n, m)) {
        throw std::out_of_range("edge index " + std::to_string(index) + " out of range");
    }
    if (index < m) return Edge{0, kStartNode, static_cast<int>(index)};
    const std::size_t inner = (n - 1) * m * m;
    const std::size_t rest = index - m;
    if (rest >= inner) return Edge{n, static_cast<int>(rest - inner), kEndNode};
    return Edge{rest / (m * m) + 1, static_cast<int>((rest / m) % m), static_cast<int>(rest % m)};
}

Trellis::Trellis(LabelAlphabet alphabet, std::size_t n)
    : Trellis(alphabet, n, std::vector<double>(n == 0 ? 0 : edge_space_size(n, alphabet.size()), 0.0)) {}

Trellis::Trellis(LabelAlphabet alphabet, std::size_t n, std::vector<double> weights)
    : alphabet_(std::move(alphabet)), n_(n), weights_(std::move(weights)) {
    if (n_ == 0) throw std::invalid_argument("trellis length must be >= 1");
    const std::size_t expected = edge_space_size(n_, alphabet_.size());
    if (weights_.size() != expected) {
        throw data_error("trellis weight vector has " + std::to_string(weights_.size()) +
                         " entries, expected " + std::to_string(expected));
    }
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (!std::isfinite(weights_[i])) {
            throw data_error("trellis weight " + std::to_string(i) + " is not finite");
        }
    }
}

PathAssignment::PathAssignment(std::vector<int> labels, std::size_t num_labels)
    : labels_(std::move(labels)), m_(num_labels) {
    if (labels_.empty()) throw std::invalid_argument("path must cover at least one position");
    for (int y : labels_) {
        if (y < 0 || static_cast<std::size_t>(y) >= m_) {
            throw std::invalid_argument("path label id " + std::to_string(y) + " out of range");
        }
    }
}

PathAssignment PathAssignment::from_indicator(std::span<const std::uint8_t> e, std::size_t n,
                                              std::size_t m) {
    if (n == 0 || e.size() != edge_space_size(n, m)) {
        throw data_error("indicator vector has wrong dimension");
    }
    std::size_t ones = 0;
    for (auto v : e) {
        if (v > 1) throw data_error("indicator vector must be binary");
        ones += v;
    }
    if (ones != n + 1) {
        throw data_error("indicator selects " + std::to_string(ones) + " edges, expected " +
                         std::to_string(n + 1));
    }
    std::vector<int> labels(n, -1);
    int current = kStartNode;
    for (std::size_t t = 0; t <= n; ++t) {
        int next = -1;
        if (t == n) {
            if (!e[edge_index(Edge{n, current, kEndNode}, n, m)]) {
                throw data_error("path does not reach the end label");
            }
            break;
        }
        for (std::size_t y = 0; y < m; ++y) {
            if (e[edge_index(Edge{t, current, static_cast<int>(y)}, n, m)]) {
                if (next != -1) throw data_error("path branches at t=" + std::to_string(t));
                next = static_cast<int>(y);
            }
        }
        if (next == -1) throw data_error("flow not conserved at t=" + std::to_string(t));
        labels[t] = next;
        current = next;
    }
    return PathAssignment(std::move(labels), m);
}

std::vector<std::size_t> PathAssignment::edges() const {
    const std::size_t n = labels_.size();
    std::vector<std::size_t> out;
    out.reserve(n + 1);
    int prev = kStartNode;
    for (std::size_t t = 0; t < n; ++t) {
        out.push_back(edge_index(Edge{t, prev, labels_[t]}, n, m_));
        prev = labels_[t];
    }
    out.push_back(edge_index(Edge{n, prev, kEndNode}, n, m_));
    return out;
}

std::vector<std::uint8_t> PathAssignment::indicator() const {
    std::vector<std::uint8_t> e(edge_space_size(labels_.size(), m_), 0);
    for (auto idx : edges()) e[idx] = 1;
    return e;
}

std::vector<std::string> PathAssignment::label_names(const LabelAlphabet& alphabet) const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (int y : labels_) out.push_back(alphabet.label(y));
    return out;
}

bool canonical_less(const PathAssignment& a, const PathAssignment& b) {
    const auto& x = a.labels();
    const auto& y = b.labels();
    if (x.size() != y.size()) return x.size() < y.size();
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] != y[i]) return x[i] < y[i];
    }
    return false;
}

double path_score(const Trellis& trellis, const PathAssignment& path) {
    if (path.length() != trellis.length() || path.num_labels() != trellis.num_labels()) {
        throw data_error("path dimensions do not match the trellis");
    }
    const auto w = trellis.weights();
    double score = 0.0;
    for (auto idx : path.edges()) score += w[idx];
    return score;
}

PathAssignment viterbi(const Trellis& trellis) {
    const std::size_t n = trellis.length();
    const std::size_t m = trellis.num_labels();
    std::vector<double> delta(m);
    std::vector<double> next(m);
    std::vector<int> back((n - 1) * m, 0);

    for (std::size_t y = 0; y < m; ++y) delta[y] = trellis.start_weight(static_cast<int>(y));
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t to = 0; to < m; ++to) {
            // Strict '>' keeps the lowest predecessor id among ties.
            double best = delta[0] + trellis.inner_weight(t, 0, static_cast<int>(to));
            int arg = 0;
            for (std::size_t from = 1; from < m; ++from) {
                double s = delta[from] + trellis.inner_weight(t, static_cast<int>(from), static_cast<int>(to));
                if (s > best) {
                    best = s;
                    arg = static_cast<int>(from);
                }
            }
            next[to] = best;
            back[(t - 1) * m + to] = arg;
        }
        std::swap(delta, next);
    }

    int last = 0;
    double best = delta[0] + trellis.end_weight(0);
    for (std::size_t y = 1; y < m; ++y) {
        double s = delta[y] + trellis.end_weight(static_cast<int>(y));
        if (s > best) {
            best = s;
            last = static_cast<int>(y);
        }
    }

    std::vector<int> labels(n);
    labels[n - 1] = last;
    for (std::size_t t = n - 1; t > 0; --t) {
        labels[t - 1] = back[(t - 1) * m + static_cast<std::size_t>(labels[t])];
    }
    return PathAssignment(std::move(labels), m);
}

PathEnumeration::iterator::iterator(std::size_t n, std::size_t m)
    : labels_(n, 0), m_(m), current_(labels_, m), done_(n == 0 || m == 0) {}

PathEnumeration::iterator& PathEnumeration::iterator::operator++() {
    // Odometer with position 0 fastest, which walks paths in canonical order.
    for (auto& y : labels_) {
        if (static_cast<std::size_t>(++y) < m_) {
            current_ = PathAssignment(labels_, m_);
            return *this;
        }
        y = 0;
    }
    done_ = true;
    return *this;
}

double path_count(std::size_t n, std::size_t m) {
    return std::pow(static_cast<double>(m), static_cast<double>(n));
}

PathEnumeration enumerate_paths(const Trellis& trellis, std::uint64_t cap) {
    const double count = path_count(trellis.length(), trellis.num_labels());
    if (count > static_cast<double>(cap)) {
        std::ostringstream msg;
        msg << "refusing to enumerate m^n = " << std::fixed << std::setprecision(0) << count << " paths (cap "
            << cap << ")";
        throw cap_exceeded(msg.str(), count);
    }
    return PathEnumeration(trellis.length(), trellis.num_labels());
}

void write_trellis(std::ostream& out, const Trellis& trellis) {
    const std::size_t n = trellis.length();
    const std::size_t m = trellis.num_labels();
    const auto& alphabet = trellis.alphabet();
    out << "n=" << n << " m=" << m << '\n';
    const auto w = trellis.weights();
    char buf[40];
    for (std::size_t i = 0; i < w.size(); ++i) {
        const Edge e = edge_at(i, n, m);
        std::snprintf(buf, sizeof buf, "%.17g", w[i]);
        out << e.t << '\t' << alphabet.node_name(e.from) << '\t' << alphabet.node_name(e.to) << '\t'
            << buf << '\n';
    }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        auto tab = line.find('\t', pos);
        fields.push_back(line.substr(pos, tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
    }
    return fields;
}

}  // namespace

Trellis read_trellis(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw data_error("trellis: missing header");
    std::size_t n = 0, m = 0;
    if (std::sscanf(line.c_str(), "n=%zu m=%zu", &n, &m) != 2 || n == 0 || m == 0) {
        throw data_error("trellis: malformed header '" + line + "'");
    }

    struct Row {
        std::size_t t;
        std::string from, to;
        double w;
    };
    std::vector<Row> rows;
    const std::size_t size = edge_space_size(n, m);
    rows.reserve(size);
    std::size_t line_no = 1;
    while (rows.size() < size && std::getline(in, line)) {
        ++line_no;
        auto f = split_tabs(line);
        if (f.size() != 4) throw data_error("trellis: line " + std::to_string(line_no) + ": expected 4 fields");
        try {
            std::size_t used = 0;
            Row r{std::stoul(f[0]), f[1], f[2], std::stod(f[3], &used)};
            if (used != f[3].size()) throw std::invalid_argument("trailing characters");
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw data_error("trellis: line " + std::to_string(line_no) + ": bad number");
        }
    }
    if (rows.size() != size) throw data_error("trellis: truncated edge list");

    // Step-0 rows list every real label in id order; they define the alphabet.
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < m; ++i) labels.push_back(rows[i].to);
    LabelAlphabet alphabet(std::move(labels), rows[0].from, rows[size - 1].to);

    std::vector<double> weights(size);
    for (std::size_t i = 0; i < size; ++i) {
        std::size_t idx = 0;
        try {
            idx = edge_index(rows[i].t, rows[i].from, rows[i].to, n, alphabet);
        } catch (const std::invalid_argument& e) {
            throw data_error(std::string("trellis: ") + e.what());
        }
        if (idx != i) throw data_error("trellis: edges out of canonical order at entry " + std::to_string(i));
        weights[i] = rows[i].w;
    }
    return Trellis(std::move(alphabet), n, std::move(weights));
}

}  // namespace ccrf
