#pragma once

#include <stdexcept>
#include <string>

namespace ccrf {

/// Malformed input data: parse failures, dimension mismatches, unknown labels.
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An exhaustive routine refused to run because the search space exceeds its cap.
class cap_exceeded : public std::runtime_error {
public:
    cap_exceeded(const std::string& what, double space_size)
        : std::runtime_error(what), space_size_(space_size) {}

    double space_size() const noexcept { return space_size_; }

private:
    double space_size_;
};

/// No label path reaches the score floor of a constrained problem.
class infeasible_error : public std::runtime_error {
public:
    infeasible_error(const std::string& what, double floor, double best_score)
        : std::runtime_error(what), floor_(floor), best_score_(best_score) {}

    double floor() const noexcept { return floor_; }
    double best_score() const noexcept { return best_score_; }

private:
    double floor_;
    double best_score_;
};

}  // namespace ccrf
