#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccrf {

/// Label ids used for the two synthetic trellis nodes. Real labels are 0..m-1.
inline constexpr int kStartNode = -1;
inline constexpr int kEndNode = -2;

inline constexpr std::uint64_t kDefaultPathCap = 1'000'000;

/// The label set plus the synthetic start and end labels.
class LabelAlphabet {
public:
    explicit LabelAlphabet(std::vector<std::string> labels,
                           std::string start_label = "<START>",
                           std::string end_label = "<END>");

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(int id) const;
    const std::string& start_label() const noexcept { return start_; }
    const std::string& end_label() const noexcept { return end_; }

    /// Name of a trellis node: a real label, or the start/end label for kStartNode/kEndNode.
    const std::string& node_name(int node) const;
    /// Inverse of node_name.
    std::optional<int> find_node(std::string_view name) const;
    std::optional<int> find(std::string_view label) const;
    /// Like find, but throws data_error for unknown labels.
    int index_of(std::string_view label) const;

    friend bool operator==(const LabelAlphabet&, const LabelAlphabet&) = default;

private:
    std::vector<std::string> labels_;
    std::string start_;
    std::string end_;
};

/// One trellis edge: at step t it joins the node of position t-1 to the node of
/// position t. Step 0 leaves the start node, step n enters the end node.
struct Edge {
    std::size_t t = 0;
    int from = kStartNode;
    int to = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// (n-1)m^2 + 2m.
std::size_t edge_space_size(std::size_t n, std::size_t m);

/// Flat index of an edge, ordered by t, then from, then to. Throws
/// std::invalid_argument naming the offending component.
std::size_t edge_index(const Edge& edge, std::size_t n, std::size_t m);
std::size_t edge_index(std::size_t t, std::string_view from_label, std::string_view to_label,
                       std::size_t n, const LabelAlphabet& alphabet);
Edge edge_at(std::size_t index, std::size_t n, std::size_t m);

/// Log-domain edge weights of a length-n chain.
class Trellis {
public:
    Trellis(LabelAlphabet alphabet, std::size_t n);
    Trellis(LabelAlphabet alphabet, std::size_t n, std::vector<double> weights);

    const LabelAlphabet& alphabet() const noexcept { return alphabet_; }
    std::size_t length() const noexcept { return n_; }
    std::size_t num_labels() const noexcept { return alphabet_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }

    double weight(std::size_t t, int from, int to) const {
        return weights_[edge_index(Edge{t, from, to}, n_, num_labels())];
    }
    double start_weight(int to) const { return weights_[static_cast<std::size_t>(to)]; }
    double end_weight(int from) const {
        return weights_[num_labels() + (n_ - 1) * num_labels() * num_labels() +
                        static_cast<std::size_t>(from)];
    }
    /// Weight of the step-t edge between two real labels, 1 <= t <= n-1.
    double inner_weight(std::size_t t, int from, int to) const {
        const std::size_t m = num_labels();
        return weights_[m + (t - 1) * m * m + static_cast<std::size_t>(from) * m +
                        static_cast<std::size_t>(to)];
    }

private:
    LabelAlphabet alphabet_;
    std::size_t n_;
    std::vector<double> weights_;
};

/// A single start-to-end path, held as its label sequence.
class PathAssignment {
public:
    PathAssignment() = default;
    /// Throws std::invalid_argument if the sequence is empty or a label is out of range.
    PathAssignment(std::vector<int> labels, std::size_t num_labels);

    /// Rebuilds a path from its edge indicator vector; throws data_error when
    /// flow conservation or the single-source/single-sink rules fail.
    static PathAssignment from_indicator(std::span<const std::uint8_t> e, std::size_t n,
                                         std::size_t m);

    std::size_t length() const noexcept { return labels_.size(); }
    std::size_t num_labels() const noexcept { return m_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    int operator[](std::size_t i) const { return labels_[i]; }

    /// The n+1 edge indices of the path, in increasing t.
    std::vector<std::size_t> edges() const;
    std::vector<std::uint8_t> indicator() const;
    std::vector<std::string> label_names(const LabelAlphabet& alphabet) const;

    friend bool operator==(const PathAssignment&, const PathAssignment&) = default;

private:
    std::vector<int> labels_;
    std::size_t m_ = 0;
};

/// Tie-break order shared by every decoder: compare label ids from the last
/// position backwards, lower id first.
bool canonical_less(const PathAssignment& a, const PathAssignment& b);

/// Sum of the path's edge weights, accumulated in increasing t.
double path_score(const Trellis& trellis, const PathAssignment& path);

PathAssignment viterbi(const Trellis& trellis);

/// Every path of an n-step, m-label trellis in canonical order.
class PathEnumeration {
public:
    class iterator {
    public:
        using iterator_category = std::input_iterator_tag;
        using value_type = PathAssignment;
        using difference_type = std::ptrdiff_t;
        using pointer = const PathAssignment*;
        using reference = const PathAssignment&;

        iterator() = default;
        reference operator*() const { return current_; }
        pointer operator->() const { return &current_; }
        iterator& operator++();
        void operator++(int) { ++*this; }
        friend bool operator==(const iterator& a, const iterator& b) { return a.done_ == b.done_; }

    private:
        friend class PathEnumeration;
        iterator(std::size_t n, std::size_t m);

        std::vector<int> labels_;
        std::size_t m_ = 0;
        PathAssignment current_;
        bool done_ = true;
    };

    PathEnumeration(std::size_t n, std::size_t m) : n_(n), m_(m) {}
    iterator begin() const { return iterator(n_, m_); }
    iterator end() const { return iterator(); }

private:
    std::size_t n_;
    std::size_t m_;
};

/// m^n as a double, so oversized spaces do not overflow.
double path_count(std::size_t n, std::size_t m);

/// Throws cap_exceeded when m^n > cap.
PathEnumeration enumerate_paths(const Trellis& trellis, std::uint64_t cap = kDefaultPathCap);

void write_trellis(std::ostream& out, const Trellis& trellis);
Trellis read_trellis(std::istream& in);

}  // namespace ccrf
