#include "ccrf/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ccrf/error.hpp"

namespace ccrf {

namespace {

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Overlong forms, surrogates and out-of-range code points.
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
            (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += len;
    }
    return true;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto next = s.find(sep, pos);
        out.push_back(s.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::size_t Corpus::token_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.x.size();
    return n;
}

void Corpus::add(TaggedSequence seq) {
    if (seq.x.size() != seq.labels.size()) throw data_error("sequence has mismatched token and label counts");
    for (const auto& l : seq.labels) {
        if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
    }
    sequences.push_back(std::move(seq));
}

LabelAlphabet Corpus::alphabet() const {
    if (labels.empty()) throw data_error("corpus has no labels");
    return LabelAlphabet(labels);
}

std::vector<LabeledSequence> Corpus::indexed(const LabelAlphabet& alphabet) const {
    std::vector<LabeledSequence> out;
    out.reserve(sequences.size());
    for (const auto& s : sequences) {
        LabeledSequence ls{s.x, {}};
        ls.y.reserve(s.labels.size());
        for (const auto& l : s.labels) ls.y.push_back(alphabet.index_of(l));
        out.push_back(std::move(ls));
    }
    return out;
}

std::vector<std::vector<std::string>> Corpus::gold() const {
    std::vector<std::vector<std::string>> out;
    out.reserve(sequences.size());
    for (const auto& s : sequences) out.push_back(s.labels);
    return out;
}

Corpus load_corpus(std::istream& in) {
    Corpus corpus;
    TaggedSequence current;
    std::string line;
    std::size_t line_no = 0;
    auto flush = [&] {
        if (!current.labels.empty()) corpus.add(std::move(current));
        current = TaggedSequence{};
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string where = "corpus: line " + std::to_string(line_no) + ": ";
        if (line.empty()) {
            flush();
            continue;
        }
        if (!valid_utf8(line)) throw data_error(where + "invalid UTF-8");
        auto fields = split_on(line, '\t');
        if (fields.size() != 2) {
            throw data_error(where + "expected token<TAB>label, got " + std::to_string(fields.size()) + " fields");
        }
        if (fields[0].empty()) throw data_error(where + "empty token");
        if (fields[1].empty()) throw data_error(where + "empty label");
        current.x.tokens.push_back(std::move(fields[0]));
        current.labels.push_back(std::move(fields[1]));
    }
    flush();
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open corpus '" + path.string() + "'");
    return load_corpus(in);
}

void save_corpus(std::ostream& out, const Corpus& corpus) {
    bool first = true;
    for (const auto& s : corpus.sequences) {
        if (!first) out << '\n';
        first = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) out << s.x.tokens[i] << '\t' << s.labels[i] << '\n';
    }
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, std::size_t train_count) {
    if (train_count > corpus.size()) {
        throw std::out_of_range("split: train_count " + std::to_string(train_count) + " exceeds corpus size " +
                                std::to_string(corpus.size()));
    }
    Corpus train, test;
    for (std::size_t i = 0; i < corpus.size(); ++i) (i < train_count ? train : test).add(corpus.sequences[i]);
    return {std::move(train), std::move(test)};
}

std::vector<std::pair<std::string, std::size_t>> label_distribution(const Corpus& corpus) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& l : corpus.labels) out.emplace_back(l, 0);
    for (const auto& s : corpus.sequences) {
        for (const auto& l : s.labels) {
            auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == l; });
            ++it->second;
        }
    }
    return out;
}

SyntheticSpec read_synthetic_spec(std::istream& in) {
    SyntheticSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        const std::string where = "synthetic spec: line " + std::to_string(line_no) + ": ";
        if (eq == std::string::npos) throw data_error(where + "expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "labels") {
                spec.labels = split_on(value, ',');
                for (auto& l : spec.labels) l = trim(l);
            } else if (key == "planted") {
                spec.planted.clear();
                if (value.empty()) continue;
                for (const auto& item : split_on(value, ',')) {
                    auto parts = split_on(trim(item), ':');
                    ConstraintTemplate t;
                    t.kind = parse_kind(parts[0]);
                    const std::size_t expected = t.kind == TemplateKind::state_change ? 4 : 3;
                    if (parts.size() != expected) throw data_error(where + "bad planted template '" + item + "'");
                    t.a = parts[1];
                    t.b = parts[2];
                    if (expected == 4) t.d = parts[3];
                    spec.planted.push_back(std::move(t));
                }
            } else if (key == "sequences") {
                spec.sequences = std::stoul(value);
            } else if (key == "min_length") {
                spec.min_length = std::stoul(value);
            } else if (key == "max_length") {
                spec.max_length = std::stoul(value);
            } else if (key == "noise") {
                spec.noise = std::stod(value);
            } else if (key == "stickiness") {
                spec.stickiness = std::stod(value);
            } else if (key == "signal") {
                spec.signal = std::stod(value);
            } else if (key == "label_vocabulary") {
                spec.label_vocabulary = std::stoul(value);
            } else if (key == "shared_vocabulary") {
                spec.shared_vocabulary = std::stoul(value);
            } else if (key == "seed") {
                spec.seed = std::stoull(value);
            } else {
                throw data_error(where + "unknown key '" + key + "'");
            }
        } catch (const std::logic_error&) {
            throw data_error(where + "bad value for '" + key + "'");
        }
    }
    return spec;
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
    const std::size_t m = spec.labels.size();
    if (m == 0) throw std::invalid_argument("synthetic spec needs at least one label");
    if (spec.min_length == 0 || spec.min_length > spec.max_length) {
        throw std::invalid_argument("synthetic spec needs 1 <= min_length <= max_length");
    }
    if (spec.noise < 0.0 || spec.noise > 1.0 || spec.signal < 0.0 || spec.signal > 1.0 || spec.stickiness < 0.0 ||
        spec.stickiness > 1.0) {
        throw std::invalid_argument("synthetic spec probabilities must lie in [0, 1]");
    }
    if (spec.label_vocabulary == 0 || spec.shared_vocabulary == 0) {
        throw std::invalid_argument("synthetic spec vocabularies must be non-empty");
    }
    const LabelAlphabet alphabet(spec.labels);
    for (const auto& t : spec.planted) validate(t, alphabet);

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
    std::uniform_int_distribution<std::size_t> any_label(0, m - 1);
    std::uniform_int_distribution<std::size_t> other_label(0, m > 1 ? m - 2 : 0);
    std::uniform_int_distribution<std::size_t> own_word(0, spec.label_vocabulary - 1);
    std::uniform_int_distribution<std::size_t> shared_word(0, spec.shared_vocabulary - 1);
    constexpr std::size_t kAttempts = 1'000'000;

    Corpus corpus;
    std::vector<std::string> labels;
    for (std::size_t s = 0; s < spec.sequences; ++s) {
        const std::size_t n = length(rng);
        std::vector<bool> violate(spec.planted.size());
        for (std::size_t j = 0; j < violate.size(); ++j) violate[j] = unit(rng) < spec.noise;

        bool accepted = false;
        for (std::size_t attempt = 0; attempt < kAttempts && !accepted; ++attempt) {
            labels.assign(n, {});
            std::size_t y = any_label(rng);
            for (std::size_t i = 0; i < n; ++i) {
                if (i > 0 && m > 1 && unit(rng) >= spec.stickiness) {
                    // Move to a different label, uniformly.
                    std::size_t next = other_label(rng);
                    y = next >= y ? next + 1 : next;
                }
                labels[i] = spec.labels[y];
            }
            accepted = true;
            for (std::size_t j = 0; j < spec.planted.size() && accepted; ++j) {
                const auto& t = spec.planted[j];
                accepted = antecedent_fires(t, labels) && template_holds(t, labels) != violate[j];
            }
        }
        if (!accepted) throw std::invalid_argument("planted templates could not be met for a sequence of length " + std::to_string(n));

        TaggedSequence seq;
        for (const auto& l : labels) {
            const std::size_t id = static_cast<std::size_t>(alphabet.index_of(l));
            if (unit(rng) < spec.signal) {
                seq.x.tokens.push_back("w" + std::to_string(id) + "_" + std::to_string(own_word(rng)));
            } else {
                seq.x.tokens.push_back("s" + std::to_string(shared_word(rng)));
            }
        }
        seq.labels = labels;
        corpus.add(std::move(seq));
    }
    return corpus;
}

}  // namespace ccrf
