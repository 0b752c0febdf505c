#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ccrf {

struct LabelMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
    std::size_t predicted = 0;
    std::size_t gold = 0;
    std::size_t correct = 0;
};

struct AveragedMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

/// Token-level scores. per_label is sorted by label name.
struct EvaluationReport {
    std::vector<std::pair<std::string, LabelMetrics>> per_label;
    AveragedMetrics macro;
    AveragedMetrics micro;
    double accuracy = 0.0;
    std::size_t tokens = 0;

    const LabelMetrics* find(std::string_view label) const;
};

/// 2PR / (P + R), or 0 when P + R = 0.
double f_measure(double precision, double recall);

/// Throws data_error when the corpora differ in shape.
EvaluationReport evaluate(std::span<const std::vector<std::string>> gold,
                          std::span<const std::vector<std::string>> predicted);

/// Percent table with two decimals, then a `key=value` block at full precision
/// with every key prefixed by `name.`.
void write_report(std::ostream& out, std::string_view name, const EvaluationReport& report);

/// One row per decoder, in the given order, followed by each decoder's key=value block.
void write_comparison(std::ostream& out, std::span<const std::pair<std::string, EvaluationReport>> reports);

}  // namespace ccrf
