#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ccrf/trellis.hpp"

namespace ccrf {

struct ObservationSequence {
    std::vector<std::string> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
};

/// Observation tokens with gold label ids.
struct LabeledSequence {
    ObservationSequence x;
    std::vector<int> y;
};

enum class FeatureKind { transition, state };

/// Which view of the observation window a feature tests.
enum class ObservationKind { bias, token, lower, shape, prev_token, next_token };

struct ObservationTest {
    ObservationKind kind = ObservationKind::bias;
    std::string value;

    friend bool operator==(const ObservationTest&, const ObservationTest&) = default;
};

inline constexpr int kAnyLabel = -3;

/// A binary feature: an observation test conjoined with a label (state feature)
/// or a label pair (transition feature; `from` may be kAnyLabel).
struct FeatureTemplate {
    FeatureKind kind = FeatureKind::state;
    ObservationTest observation;
    int from = kAnyLabel;
    int to = 0;
    std::string id;

    friend bool operator==(const FeatureTemplate&, const FeatureTemplate&) = default;
};

FeatureTemplate make_state_feature(const LabelAlphabet& alphabet, ObservationTest test, int label);
FeatureTemplate make_transition_feature(const LabelAlphabet& alphabet, ObservationTest test, int from,
                                        int to);
/// Parses an id produced by the two factories above.
FeatureTemplate parse_feature_id(const LabelAlphabet& alphabet, std::string_view id);

std::string token_shape(std::string_view token);

/// The observation tests that hold at position i of x.
std::array<ObservationTest, 6> observation_window(const ObservationSequence& x, std::size_t i);

class CrfModel {
public:
    CrfModel(LabelAlphabet alphabet, std::vector<FeatureTemplate> features, std::vector<double> weights);

    const LabelAlphabet& alphabet() const noexcept { return alphabet_; }
    const std::vector<FeatureTemplate>& features() const noexcept { return features_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    CrfModel with_weights(std::vector<double> weights) const;

    /// Log-potential trellis: inner edge (t, y, y') carries the transition features
    /// at position t plus the state features of y' at t; start edges carry the state
    /// features of position 0; end edges carry nothing.
    Trellis build_trellis(const ObservationSequence& x) const;
    /// Same, with an alternative weight vector over this model's features.
    Trellis build_trellis(const ObservationSequence& x, std::span<const double> weights) const;

    /// Calls fn(feature index) once per firing of a feature along the labeling.
    template <typename Fn>
    void for_each_active(const ObservationSequence& x, std::span<const int> labels, Fn&& fn) const;

private:
    const std::vector<std::size_t>* lookup(const ObservationTest& test) const;

    LabelAlphabet alphabet_;
    std::vector<FeatureTemplate> features_;
    std::vector<double> weights_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_observation_;
};

/// log of the sum over all paths of exp(path score), by the forward recursion.
double log_partition(const Trellis& trellis);

double sequence_log_probability(const CrfModel& model, const ObservationSequence& x,
                                std::span<const std::string> labels);
double sequence_log_probability(const CrfModel& model, const ObservationSequence& x,
                                std::span<const int> labels);

struct PerceptronOptions {
    std::size_t epochs = 10;
    double learning_rate = 1.0;
};

/// Averaged structured perceptron. Features are the label bigrams, and for every
/// gold (position, label) pair the conjunction of the label with each observation test.
CrfModel train_perceptron(const LabelAlphabet& alphabet, std::span<const LabeledSequence> corpus,
                          const PerceptronOptions& options = {});

void write_model(std::ostream& out, const CrfModel& model);
CrfModel read_model(std::istream& in);

// ---------------------------------------------------------------------------

template <typename Fn>
void CrfModel::for_each_active(const ObservationSequence& x, std::span<const int> labels, Fn&& fn) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (const auto& test : observation_window(x, i)) {
            const auto* hits = lookup(test);
            if (!hits) continue;
            for (std::size_t k : *hits) {
                const auto& f = features_[k];
                if (f.to != labels[i]) continue;
                if (f.kind == FeatureKind::transition) {
                    if (i == 0) continue;
                    if (f.from != kAnyLabel && f.from != labels[i - 1]) continue;
                }
                fn(k);
            }
        }
    }
}

}  // namespace ccrf
