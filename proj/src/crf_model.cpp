#include "ccrf/crf_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "ccrf/error.hpp"

namespace ccrf {

namespace {

constexpr const char* kObservationNames[] = {"bias", "w", "lw", "shape", "w-1", "w+1"};

std::string escape(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (c == '%' || c == ':' || c == '*' || c == '=' || std::isspace(c)) {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xF];
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

std::string unescape(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out += s[i];
            continue;
        }
        if (i + 2 >= s.size() || !std::isxdigit(static_cast<unsigned char>(s[i + 1])) ||
            !std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            throw data_error("bad escape in '" + std::string(s) + "'");
        }
        out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
        i += 2;
    }
    return out;
}

std::string observation_key(const ObservationTest& test) {
    std::string key(1, static_cast<char>('0' + static_cast<int>(test.kind)));
    key += test.value;
    return key;
}

std::string observation_id(const ObservationTest& test) {
    std::string id = kObservationNames[static_cast<int>(test.kind)];
    if (test.kind != ObservationKind::bias) id += "=" + escape(test.value);
    return id;
}

ObservationTest parse_observation(std::string_view s) {
    auto eq = s.find('=');
    std::string_view name = s.substr(0, eq);
    for (int k = 0; k < 6; ++k) {
        if (name != kObservationNames[k]) continue;
        auto kind = static_cast<ObservationKind>(k);
        if (kind == ObservationKind::bias) {
            if (eq != std::string_view::npos) break;
            return {kind, ""};
        }
        if (eq == std::string_view::npos) break;
        return {kind, unescape(s.substr(eq + 1))};
    }
    throw data_error("unknown observation test '" + std::string(s) + "'");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto next = s.find(sep, pos);
        out.push_back(s.substr(pos, next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

double log_sum_exp(std::span<const double> v) {
    double hi = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

}  // namespace

std::string token_shape(std::string_view token) {
    std::string shape;
    for (unsigned char c : token) {
        char cls = std::isupper(c) ? 'X' : std::islower(c) ? 'x' : std::isdigit(c) ? 'd' : static_cast<char>(c);
        if (shape.empty() || shape.back() != cls) shape += cls;
    }
    return shape;
}

std::array<ObservationTest, 6> observation_window(const ObservationSequence& x, std::size_t i) {
    const std::string& w = x.tokens[i];
    std::string lower(w);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return {ObservationTest{ObservationKind::bias, ""},
            ObservationTest{ObservationKind::token, w},
            ObservationTest{ObservationKind::lower, std::move(lower)},
            ObservationTest{ObservationKind::shape, token_shape(w)},
            ObservationTest{ObservationKind::prev_token, i == 0 ? "<BOS>" : x.tokens[i - 1]},
            ObservationTest{ObservationKind::next_token, i + 1 == x.size() ? "<EOS>" : x.tokens[i + 1]}};
}

FeatureTemplate make_state_feature(const LabelAlphabet& alphabet, ObservationTest test, int label) {
    FeatureTemplate f;
    f.kind = FeatureKind::state;
    f.to = label;
    f.id = "S:" + escape(alphabet.label(label)) + ":" + observation_id(test);
    f.observation = std::move(test);
    return f;
}

FeatureTemplate make_transition_feature(const LabelAlphabet& alphabet, ObservationTest test, int from,
                                        int to) {
    FeatureTemplate f;
    f.kind = FeatureKind::transition;
    f.from = from;
    f.to = to;
    f.id = "T:" + (from == kAnyLabel ? std::string("*") : escape(alphabet.label(from))) + ":" +
           escape(alphabet.label(to)) + ":" + observation_id(test);
    f.observation = std::move(test);
    return f;
}

FeatureTemplate parse_feature_id(const LabelAlphabet& alphabet, std::string_view id) {
    auto parts = split(id, ':');
    auto label = [&](std::string_view s) {
        auto y = alphabet.find(unescape(s));
        if (!y) throw data_error("feature '" + std::string(id) + "' names an unknown label");
        return *y;
    };
    if (parts.size() == 3 && parts[0] == "S") {
        return make_state_feature(alphabet, parse_observation(parts[2]), label(parts[1]));
    }
    if (parts.size() == 4 && parts[0] == "T") {
        int from = parts[1] == "*" ? kAnyLabel : label(parts[1]);
        return make_transition_feature(alphabet, parse_observation(parts[3]), from, label(parts[2]));
    }
    throw data_error("malformed feature id '" + std::string(id) + "'");
}

CrfModel::CrfModel(LabelAlphabet alphabet, std::vector<FeatureTemplate> features, std::vector<double> weights)
    : alphabet_(std::move(alphabet)), features_(std::move(features)), weights_(std::move(weights)) {
    if (features_.size() != weights_.size()) {
        throw std::invalid_argument("model has " + std::to_string(features_.size()) + " features but " +
                                    std::to_string(weights_.size()) + " weights");
    }
    std::unordered_set<std::string> ids;
    const int m = static_cast<int>(alphabet_.size());
    for (std::size_t k = 0; k < features_.size(); ++k) {
        const auto& f = features_[k];
        if (!std::isfinite(weights_[k])) throw std::invalid_argument("weight of '" + f.id + "' is not finite");
        if (!ids.insert(f.id).second) throw std::invalid_argument("duplicate feature id '" + f.id + "'");
        if (f.to < 0 || f.to >= m || (f.from != kAnyLabel && (f.from < 0 || f.from >= m))) {
            throw std::invalid_argument("feature '" + f.id + "' references a label outside the alphabet");
        }
        if (f.kind == FeatureKind::state && f.from != kAnyLabel) {
            throw std::invalid_argument("state feature '" + f.id + "' cannot have a source label");
        }
        by_observation_[observation_key(f.observation)].push_back(k);
    }
}

CrfModel CrfModel::with_weights(std::vector<double> weights) const {
    return CrfModel(alphabet_, features_, std::move(weights));
}

const std::vector<std::size_t>* CrfModel::lookup(const ObservationTest& test) const {
    auto it = by_observation_.find(observation_key(test));
    return it == by_observation_.end() ? nullptr : &it->second;
}

Trellis CrfModel::build_trellis(const ObservationSequence& x) const {
    return build_trellis(x, weights_);
}

Trellis CrfModel::build_trellis(const ObservationSequence& x, std::span<const double> weights) const {
    if (weights.size() != features_.size()) throw std::invalid_argument("weight vector does not match features");
    const std::size_t n = x.size();
    if (n == 0) throw data_error("observation sequence is empty");
    for (const auto& tok : x.tokens) {
        if (tok.empty()) throw data_error("observation sequence contains an empty token");
    }
    const std::size_t m = alphabet_.size();

    // vertex[i*m + y]: state features; trans[(i*(m+1) + from+1)*m + to]: transition
    // features at position i, slot 0 holding the wildcard source.
    std::vector<double> vertex(n * m, 0.0);
    std::vector<double> trans(n * (m + 1) * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& test : observation_window(x, i)) {
            const auto* hits = lookup(test);
            if (!hits) continue;
            for (std::size_t k : *hits) {
                const auto& f = features_[k];
                const auto to = static_cast<std::size_t>(f.to);
                if (f.kind == FeatureKind::state) {
                    vertex[i * m + to] += weights[k];
                } else if (i > 0) {
                    const std::size_t slot = f.from == kAnyLabel ? 0 : static_cast<std::size_t>(f.from) + 1;
                    trans[(i * (m + 1) + slot) * m + to] += weights[k];
                }
            }
        }
    }

    std::vector<double> w(edge_space_size(n, m), 0.0);
    for (std::size_t y = 0; y < m; ++y) w[y] = vertex[y];
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t from = 0; from < m; ++from) {
            for (std::size_t to = 0; to < m; ++to) {
                w[m + (t - 1) * m * m + from * m + to] = trans[(t * (m + 1)) * m + to] +
                                                         trans[(t * (m + 1) + from + 1) * m + to] +
                                                         vertex[t * m + to];
            }
        }
    }
    return Trellis(alphabet_, n, std::move(w));
}

double log_partition(const Trellis& trellis) {
    const std::size_t n = trellis.length();
    const std::size_t m = trellis.num_labels();
    std::vector<double> alpha(m), next(m), terms(m);
    for (std::size_t y = 0; y < m; ++y) alpha[y] = trellis.start_weight(static_cast<int>(y));
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t to = 0; to < m; ++to) {
            for (std::size_t from = 0; from < m; ++from) {
                terms[from] = alpha[from] + trellis.inner_weight(t, static_cast<int>(from), static_cast<int>(to));
            }
            next[to] = log_sum_exp(terms);
        }
        std::swap(alpha, next);
    }
    for (std::size_t y = 0; y < m; ++y) terms[y] = alpha[y] + trellis.end_weight(static_cast<int>(y));
    return log_sum_exp(terms);
}

double sequence_log_probability(const CrfModel& model, const ObservationSequence& x,
                                std::span<const int> labels) {
    if (labels.size() != x.size()) {
        throw data_error("label sequence length " + std::to_string(labels.size()) +
                         " does not match observation length " + std::to_string(x.size()));
    }
    const Trellis trellis = model.build_trellis(x);
    const PathAssignment path(std::vector<int>(labels.begin(), labels.end()), model.alphabet().size());
    return path_score(trellis, path) - log_partition(trellis);
}

double sequence_log_probability(const CrfModel& model, const ObservationSequence& x,
                                std::span<const std::string> labels) {
    std::vector<int> ids;
    ids.reserve(labels.size());
    for (const auto& l : labels) ids.push_back(model.alphabet().index_of(l));
    return sequence_log_probability(model, x, std::span<const int>(ids));
}

CrfModel train_perceptron(const LabelAlphabet& alphabet, std::span<const LabeledSequence> corpus,
                          const PerceptronOptions& options) {
    if (corpus.empty()) throw std::invalid_argument("train_perceptron: empty corpus");
    const int m = static_cast<int>(alphabet.size());

    std::vector<FeatureTemplate> features;
    std::unordered_set<std::string> seen;
    auto add = [&](FeatureTemplate f) {
        if (seen.insert(f.id).second) features.push_back(std::move(f));
    };
    for (int from = 0; from < m; ++from) {
        for (int to = 0; to < m; ++to) add(make_transition_feature(alphabet, {}, from, to));
    }
    for (const auto& seq : corpus) {
        if (seq.y.size() != seq.x.size()) throw data_error("train_perceptron: ragged training sequence");
        for (int y : seq.y) {
            if (y < 0 || y >= m) throw data_error("train_perceptron: gold label outside the alphabet");
        }
        for (std::size_t i = 0; i < seq.x.size(); ++i) {
            for (auto& test : observation_window(seq.x, i)) add(make_state_feature(alphabet, std::move(test), seq.y[i]));
        }
    }

    const std::size_t dim = features.size();
    CrfModel model(alphabet, std::move(features), std::vector<double>(dim, 0.0));
    std::vector<double> w(dim, 0.0);
    // Averaging via the running sum of c * update: avg = w - u / c.
    std::vector<double> u(dim, 0.0);
    double c = 1.0;
    std::vector<double> delta(dim, 0.0);
    std::vector<std::size_t> touched;

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        for (const auto& seq : corpus) {
            const PathAssignment predicted = viterbi(model.build_trellis(seq.x, w));
            if (predicted.labels() != seq.y) {
                touched.clear();
                model.for_each_active(seq.x, seq.y, [&](std::size_t k) {
                    if (delta[k] == 0.0) touched.push_back(k);
                    delta[k] += 1.0;
                });
                model.for_each_active(seq.x, predicted.labels(), [&](std::size_t k) {
                    if (delta[k] == 0.0) touched.push_back(k);
                    delta[k] -= 1.0;
                });
                for (std::size_t k : touched) {
                    if (delta[k] != 0.0) {
                        const double step = options.learning_rate * delta[k];
                        w[k] += step;
                        u[k] += c * step;
                    }
                    delta[k] = 0.0;
                }
            }
            c += 1.0;
        }
    }

    std::vector<double> averaged(dim);
    for (std::size_t k = 0; k < dim; ++k) averaged[k] = w[k] - u[k] / c;
    return model.with_weights(std::move(averaged));
}

void write_model(std::ostream& out, const CrfModel& model) {
    const auto& a = model.alphabet();
    out << "ccrf-model\t1\n";
    out << "labels";
    for (const auto& l : a.labels()) out << '\t' << l;
    out << "\nstart\t" << a.start_label() << "\nend\t" << a.end_label() << '\n';
    out << "features\t" << model.features().size() << '\n';
    char buf[40];
    for (std::size_t k = 0; k < model.features().size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", model.weights()[k]);
        out << model.features()[k].id << '\t' << buf << '\n';
    }
}

namespace {

CrfModel read_model_unchecked(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next_fields = [&](std::string_view key, std::size_t min_fields) {
        if (!std::getline(in, line)) throw data_error("model: unexpected end of file");
        ++line_no;
        auto f = split(line, '\t');
        if (f.size() < min_fields || f[0] != key) {
            throw data_error("model: line " + std::to_string(line_no) + ": expected '" + std::string(key) + "'");
        }
        return std::vector<std::string>(f.begin(), f.end());
    };
    auto header = next_fields("ccrf-model", 2);
    if (header[1] != "1") throw data_error("model: unsupported version " + header[1]);
    auto labels = next_fields("labels", 2);
    auto start = next_fields("start", 2);
    auto end = next_fields("end", 2);
    auto count = next_fields("features", 2);

    LabelAlphabet alphabet(std::vector<std::string>(labels.begin() + 1, labels.end()), start[1], end[1]);
    std::size_t n = 0;
    try {
        n = std::stoul(count[1]);
    } catch (const std::logic_error&) {
        throw data_error("model: bad feature count '" + count[1] + "'");
    }
    std::vector<FeatureTemplate> features;
    std::vector<double> weights;
    features.reserve(n);
    weights.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::getline(in, line)) throw data_error("model: truncated feature list");
        ++line_no;
        auto tab = line.rfind('\t');
        if (tab == std::string::npos) throw data_error("model: line " + std::to_string(line_no) + ": missing weight");
        features.push_back(parse_feature_id(alphabet, std::string_view(line).substr(0, tab)));
        try {
            weights.push_back(std::stod(line.substr(tab + 1)));
        } catch (const std::logic_error&) {
            throw data_error("model: line " + std::to_string(line_no) + ": bad weight");
        }
    }
    if (std::getline(in, line) && !line.empty()) {
        throw data_error("model: line " + std::to_string(line_no + 1) + ": trailing content");
    }
    return CrfModel(std::move(alphabet), std::move(features), std::move(weights));
}

}  // namespace

CrfModel read_model(std::istream& in) {
    try {
        return read_model_unchecked(in);
    } catch (const std::invalid_argument& e) {
        throw data_error(std::string("model: ") + e.what());
    }
}

}  // namespace ccrf
