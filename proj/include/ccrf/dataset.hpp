#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ccrf/constraints.hpp"
#include "ccrf/crf_model.hpp"

namespace ccrf {

/// Tokens with gold label names.
struct TaggedSequence {
    ObservationSequence x;
    std::vector<std::string> labels;

    friend bool operator==(const TaggedSequence& a, const TaggedSequence& b) {
        return a.x.tokens == b.x.tokens && a.labels == b.labels;
    }
};

struct Corpus {
    std::vector<TaggedSequence> sequences;
    /// Every gold label, in first-seen order.
    std::vector<std::string> labels;

    std::size_t size() const noexcept { return sequences.size(); }
    std::size_t token_count() const;

    /// Appends a sequence, extending `labels` with any new names.
    void add(TaggedSequence seq);

    /// Throws data_error for an empty corpus.
    LabelAlphabet alphabet() const;
    /// Gold labels as ids of `alphabet`; throws data_error for unknown labels.
    std::vector<LabeledSequence> indexed(const LabelAlphabet& alphabet) const;
    std::vector<std::vector<std::string>> gold() const;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Blank-line separated sequences of `token<TAB>label` lines. Throws
/// data_error with a line number on ragged lines, empty fields or invalid UTF-8.
Corpus load_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(std::ostream& out, const Corpus& corpus);

/// First train_count sequences and the rest, in file order.
std::pair<Corpus, Corpus> split(const Corpus& corpus, std::size_t train_count);

/// Per-label token totals of a corpus, keyed by label in first-seen order.
std::vector<std::pair<std::string, std::size_t>> label_distribution(const Corpus& corpus);

struct SyntheticSpec {
    std::vector<std::string> labels{"AUTHOR", "TITLE", "VENUE", "DATE", "PAGES"};
    std::size_t sequences = 300;
    std::size_t min_length = 4;
    std::size_t max_length = 8;
    /// Every sequence fires each planted template; with probability `noise`
    /// it violates it, otherwise it satisfies it.
    std::vector<ConstraintTemplate> planted;
    double noise = 0.05;
    /// Probability that the next label repeats the current one.
    double stickiness = 0.4;
    /// Probability that a token comes from its label's own vocabulary rather
    /// than the shared one.
    double signal = 0.55;
    std::size_t label_vocabulary = 6;
    std::size_t shared_vocabulary = 8;
    std::uint64_t seed = 1;
};

/// Reads `key=value` lines; `planted` takes `kind:A:B[:D]` entries separated by
/// commas, `labels` a comma-separated list.
SyntheticSpec read_synthetic_spec(std::istream& in);

/// Deterministic for a given spec. Throws std::invalid_argument when the
/// planted templates cannot be met within the sampling budget.
Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace ccrf
