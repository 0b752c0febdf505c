#include "ccrf/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

#include "ccrf/error.hpp"

namespace ccrf {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed2(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

void write_block(std::ostream& out, std::string_view name, const EvaluationReport& r) {
    const std::string p(name);
    out << p << ".tokens=" << r.tokens << '\n';
    out << p << ".accuracy=" << full(r.accuracy) << '\n';
    out << p << ".macro.precision=" << full(r.macro.precision) << '\n';
    out << p << ".macro.recall=" << full(r.macro.recall) << '\n';
    out << p << ".macro.f=" << full(r.macro.f_measure) << '\n';
    out << p << ".micro.precision=" << full(r.micro.precision) << '\n';
    out << p << ".micro.recall=" << full(r.micro.recall) << '\n';
    out << p << ".micro.f=" << full(r.micro.f_measure) << '\n';
    for (const auto& [label, m] : r.per_label) {
        const std::string k = p + ".label." + label;
        out << k << ".precision=" << full(m.precision) << '\n';
        out << k << ".recall=" << full(m.recall) << '\n';
        out << k << ".f=" << full(m.f_measure) << '\n';
        out << k << ".predicted=" << m.predicted << '\n';
        out << k << ".gold=" << m.gold << '\n';
        out << k << ".correct=" << m.correct << '\n';
    }
}

void write_summary_row(std::ostream& out, std::string_view name, std::size_t width, const EvaluationReport& r) {
    std::string row(name);
    row.resize(std::max(width, row.size()), ' ');
    out << row;
    for (double v : {r.macro.precision, r.macro.recall, r.macro.f_measure, r.micro.precision, r.micro.recall,
                     r.micro.f_measure, r.accuracy}) {
        out << pad(fixed2(v), 10);
    }
    out << '\n';
}

void write_summary_header(std::ostream& out, std::size_t width) {
    out << std::string(width, ' ') << pad("Macro-P", 10) << pad("Macro-R", 10) << pad("Macro-F", 10)
        << pad("Micro-P", 10) << pad("Micro-R", 10) << pad("Micro-F", 10) << pad("Accuracy", 10) << '\n';
}

}  // namespace

const LabelMetrics* EvaluationReport::find(std::string_view label) const {
    for (const auto& [name, m] : per_label) {
        if (name == label) return &m;
    }
    return nullptr;
}

double f_measure(double precision, double recall) {
    const double s = precision + recall;
    return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

EvaluationReport evaluate(std::span<const std::vector<std::string>> gold,
                          std::span<const std::vector<std::string>> predicted) {
    if (gold.size() != predicted.size()) {
        throw data_error("evaluate: " + std::to_string(gold.size()) + " gold sequences but " +
                         std::to_string(predicted.size()) + " predicted");
    }
    std::map<std::string, LabelMetrics> counts;
    EvaluationReport report;
    std::size_t correct = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        if (gold[s].size() != predicted[s].size()) {
            throw data_error("evaluate: sequence " + std::to_string(s) + " has " + std::to_string(gold[s].size()) +
                             " gold labels but " + std::to_string(predicted[s].size()) + " predicted");
        }
        for (std::size_t i = 0; i < gold[s].size(); ++i) {
            ++counts[gold[s][i]].gold;
            ++counts[predicted[s][i]].predicted;
            if (gold[s][i] == predicted[s][i]) {
                ++counts[gold[s][i]].correct;
                ++correct;
            }
            ++report.tokens;
        }
    }

    std::size_t total_predicted = 0;
    std::size_t total_gold = 0;
    for (auto& [label, m] : counts) {
        m.precision = ratio(m.correct, m.predicted);
        m.recall = ratio(m.correct, m.gold);
        m.f_measure = f_measure(m.precision, m.recall);
        total_predicted += m.predicted;
        total_gold += m.gold;
        report.macro.precision += m.precision;
        report.macro.recall += m.recall;
        report.macro.f_measure += m.f_measure;
        report.per_label.emplace_back(label, m);
    }
    // Every label in the map has a nonzero gold or predicted count.
    if (!counts.empty()) {
        const auto k = static_cast<double>(counts.size());
        report.macro.precision /= k;
        report.macro.recall /= k;
        report.macro.f_measure /= k;
    }
    report.micro.precision = ratio(correct, total_predicted);
    report.micro.recall = ratio(correct, total_gold);
    report.micro.f_measure = f_measure(report.micro.precision, report.micro.recall);
    report.accuracy = ratio(correct, report.tokens);
    return report;
}

void write_report(std::ostream& out, std::string_view name, const EvaluationReport& report) {
    std::size_t width = 12;
    for (const auto& [label, m] : report.per_label) width = std::max(width, label.size() + 2);
    out << std::string(width, ' ') << pad("P", 10) << pad("R", 10) << pad("F", 10) << pad("pred", 8)
        << pad("gold", 8) << pad("correct", 8) << '\n';
    for (const auto& [label, m] : report.per_label) {
        std::string row = label;
        row.resize(width, ' ');
        out << row << pad(fixed2(m.precision), 10) << pad(fixed2(m.recall), 10) << pad(fixed2(m.f_measure), 10)
            << pad(std::to_string(m.predicted), 8) << pad(std::to_string(m.gold), 8)
            << pad(std::to_string(m.correct), 8) << '\n';
    }
    out << '\n';
    write_summary_header(out, width);
    write_summary_row(out, name, width, report);
    out << '\n';
    write_block(out, name, report);
}

void write_comparison(std::ostream& out, std::span<const std::pair<std::string, EvaluationReport>> reports) {
    std::size_t width = 12;
    for (const auto& [name, r] : reports) width = std::max(width, name.size() + 2);
    write_summary_header(out, width);
    for (const auto& [name, r] : reports) write_summary_row(out, name, width, r);
    for (const auto& [name, r] : reports) {
        out << '\n';
        write_block(out, name, r);
    }
}

}  // namespace ccrf
