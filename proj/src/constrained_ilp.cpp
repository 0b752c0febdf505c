#include "ccrf/constrained_ilp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "ccrf/error.hpp"

namespace ccrf {

double score_floor(double z_star, double tau) {
    if (z_star >= 0.0) return tau * z_star;
    return z_star - (1.0 - tau) * std::abs(z_star);
}

ConstrainedProblem::ConstrainedProblem(Trellis trellis, ConstraintSystem system, double tau)
    : trellis_(std::move(trellis)), system_(std::move(system)), tau_(tau) {
    if (!(tau_ >= 0.0 && tau_ <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
    if (system_.length() != trellis_.length() || !(system_.alphabet() == trellis_.alphabet())) {
        throw std::invalid_argument("constraint system does not match the trellis");
    }
    z_star_ = path_score(trellis_, viterbi(trellis_));
}

namespace {

constexpr double kNoFloor = -std::numeric_limits<double>::infinity();

double slack(double x) { return 1e-9 * (1.0 + std::abs(x)); }

/// Depth-first search over label prefixes. Rows are checked as soon as every
/// edge they mention is fixed; violated groups add their cost at that point.
class PrefixSearch {
public:
    PrefixSearch(const Trellis& trellis, const ConstraintSystem* system, double floor)
        : trellis_(trellis), system_(system), floor_(floor), n_(trellis.length()), m_(trellis.num_labels()),
          labels_(n_), edges_(n_ + 1) {
        // suffix_[i*m + y]: best weight of steps i+1..n given label y at position i.
        suffix_.assign(n_ * m_, 0.0);
        for (std::size_t y = 0; y < m_; ++y) suffix_[(n_ - 1) * m_ + y] = trellis.end_weight(static_cast<int>(y));
        for (std::size_t i = n_ - 1; i-- > 0;) {
            for (std::size_t y = 0; y < m_; ++y) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t z = 0; z < m_; ++z) {
                    best = std::max(best, trellis.inner_weight(i + 1, static_cast<int>(y), static_cast<int>(z)) +
                                              suffix_[(i + 1) * m_ + z]);
                }
                suffix_[i * m_ + y] = best;
            }
        }
        if (system_) {
            rows_at_.resize(n_);
            const auto& groups = system_->groups();
            for (std::size_t g = 0; g < groups.size(); ++g) {
                for (const auto& row : groups[g].rows) {
                    rows_at_[std::min(row.last_step(), n_ - 1)].push_back({&row, g});
                }
            }
            violated_.assign(groups.size(), 0);
        }
    }

    void seed(const PathAssignment& path) {
        Candidate c;
        c.path = path;
        c.score = path_score(trellis_, path);
        c.sigma = system_ ? check_violation(*system_, path) : std::vector<std::uint8_t>{};
        c.cost = system_ ? violation_total(*system_, c.sigma) : 0.0;
        if (c.score >= floor_) consider(std::move(c));
    }

    void run() { descend(0, kStartNode, 0.0, 0.0); }

    double best_possible() const {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < m_; ++y) best = std::max(best, trellis_.start_weight(static_cast<int>(y)) + suffix_[y]);
        return best;
    }

    struct Candidate {
        PathAssignment path;
        std::vector<std::uint8_t> sigma;
        double cost = 0.0;
        double score = 0.0;
    };

    const std::optional<Candidate>& incumbent() const { return incumbent_; }

private:
    struct RowRef {
        const LinearRow* row;
        std::size_t group;
    };

    void consider(Candidate c) {
        if (!incumbent_ || c.cost < incumbent_->cost ||
            (c.cost == incumbent_->cost &&
             (c.score > incumbent_->score ||
              (c.score == incumbent_->score && canonical_less(c.path, incumbent_->path))))) {
            incumbent_ = std::move(c);
        }
    }

    void descend(std::size_t pos, int prev, double prefix, double partial_cost) {
        for (std::size_t y = 0; y < m_; ++y) {
            const int label = static_cast<int>(y);
            const bool last = pos + 1 == n_;
            double score = prefix + (pos == 0 ? trellis_.start_weight(label) : trellis_.inner_weight(pos, prev, label));
            if (last) score += trellis_.end_weight(label);
            const double bound = last ? score : score + suffix_[pos * m_ + y];
            if (floor_ != kNoFloor && bound < floor_ - slack(floor_)) continue;
            if (incumbent_ && partial_cost == 0.0 && incumbent_->cost == 0.0 &&
                bound < incumbent_->score - slack(incumbent_->score)) {
                continue;
            }

            labels_[pos] = label;
            edges_[pos] = edge_index(Edge{pos, prev, label}, n_, m_);
            if (last) edges_[n_] = edge_index(Edge{n_, label, kEndNode}, n_, m_);

            double cost = partial_cost;
            std::vector<std::size_t> newly;
            if (system_) {
                for (const auto& ref : rows_at_[pos]) {
                    if (violated_[ref.group]) continue;
                    if (ref.row->value(edges_) > 0) {
                        violated_[ref.group] = 1;
                        newly.push_back(ref.group);
                        cost += system_->groups()[ref.group].cost;
                    }
                }
            }
            const bool worse = incumbent_ && cost > incumbent_->cost + slack(incumbent_->cost);
            if (!worse) {
                if (last) {
                    if (score >= floor_) {
                        Candidate c;
                        c.path = PathAssignment(labels_, m_);
                        c.score = score;
                        if (system_) {
                            c.sigma = violated_;
                            c.cost = violation_total(*system_, c.sigma);
                        }
                        consider(std::move(c));
                    }
                } else {
                    descend(pos + 1, label, score, cost);
                }
            }
            for (auto g : newly) violated_[g] = 0;
        }
    }

    const Trellis& trellis_;
    const ConstraintSystem* system_;
    double floor_;
    std::size_t n_;
    std::size_t m_;
    std::vector<double> suffix_;
    std::vector<std::vector<RowRef>> rows_at_;
    std::vector<std::uint8_t> violated_;
    std::vector<int> labels_;
    std::vector<std::size_t> edges_;
    std::optional<Candidate> incumbent_;
};

}  // namespace

UnconstrainedSolution solve_unconstrained(const Trellis& trellis) {
    PrefixSearch search(trellis, nullptr, kNoFloor);
    search.run();
    const auto& best = *search.incumbent();
    return {best.path, best.score};
}

ConstrainedSolution solve_min_violation(const ConstrainedProblem& problem, std::uint64_t cap) {
    const Trellis& trellis = problem.trellis();
    const double count = path_count(trellis.length(), trellis.num_labels());
    if (count > static_cast<double>(cap)) {
        std::ostringstream msg;
        msg << "refusing exhaustive search over m^n = " << std::fixed << std::setprecision(0) << count
            << " paths (cap " << cap << ")";
        throw cap_exceeded(msg.str(), count);
    }
    const double floor = problem.floor();
    PrefixSearch search(trellis, &problem.system(), floor);
    search.seed(viterbi(trellis));
    search.run();
    if (!search.incumbent()) {
        std::ostringstream msg;
        msg << "no path reaches the score floor " << floor;
        throw infeasible_error(msg.str(), floor, search.best_possible());
    }
    const auto& best = *search.incumbent();
    return {best.path, best.sigma, best.cost, best.score};
}

}  // namespace ccrf
