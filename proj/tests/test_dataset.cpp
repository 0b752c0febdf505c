#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ccrf/dataset.hpp"
#include "ccrf/error.hpp"

using namespace ccrf;

namespace {

Corpus parse(const std::string& text) {
    std::istringstream in(text);
    return load_corpus(in);
}

std::string load_error(const std::string& text) {
    try {
        parse(text);
    } catch (const data_error& e) {
        return e.what();
    }
    return {};
}

Corpus random_corpus(std::mt19937_64& rng, std::size_t size) {
    Corpus c;
    const std::vector<std::string> vocab{"Smith,", "J.", "Learning", "ü-niçode", "(2004).", "pp.", "12--20"};
    const std::vector<std::string> labels{"author", "title", "date", "pages"};
    for (std::size_t s = 0; s < size; ++s) {
        TaggedSequence seq;
        const std::size_t n = 1 + rng() % 9;
        for (std::size_t i = 0; i < n; ++i) {
            seq.x.tokens.push_back(vocab[rng() % vocab.size()]);
            seq.labels.push_back(labels[rng() % labels.size()]);
        }
        c.add(std::move(seq));
    }
    return c;
}

std::size_t violations(const Corpus& c, const ConstraintTemplate& t) {
    std::size_t v = 0;
    for (const auto& s : c.sequences) v += !template_holds(t, s.labels);
    return v;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("loading") {
    const Corpus empty = parse("");
    CHECK(empty.size() == 0);
    CHECK(empty.labels.empty());
    CHECK_THROWS_AS(empty.alphabet(), data_error);

    const Corpus c = parse("Smith\tauthor\r\n2004\tdate\r\n\r\n\n\nTitle\ttitle\nSmith\tauthor\n");
    REQUIRE(c.size() == 2);
    CHECK(c.token_count() == 4);
    CHECK(c.labels == std::vector<std::string>{"author", "date", "title"});
    CHECK(c.sequences[1].x.tokens == std::vector<std::string>{"Title", "Smith"});
    CHECK(c.alphabet().labels() == c.labels);
    const auto ids = c.indexed(c.alphabet());
    CHECK(ids[1].y == std::vector<int>{2, 0});
    CHECK_THROWS_AS(c.indexed(LabelAlphabet({"author"})), data_error);
    CHECK(label_distribution(c) ==
          std::vector<std::pair<std::string, std::size_t>>{{"author", 2}, {"date", 1}, {"title", 1}});
}

TEST_CASE("malformed input names the line") {
    CHECK(load_error("a\tX\nb\n").find("line 2") != std::string::npos);
    CHECK(load_error("a\tX\tY\n").find("line 1") != std::string::npos);
    CHECK(load_error("a\tX\n\nb\t\n").find("line 3") != std::string::npos);
    CHECK(load_error("\tX\n").find("empty token") != std::string::npos);
    CHECK(load_error("a\tX\n\xC3\x28\tY\n").find("line 2: invalid UTF-8") != std::string::npos);
    CHECK(load_error("\xED\xA0\x80\tY\n").find("UTF-8") != std::string::npos);
    CHECK(load_error("\xC0\x80\tY\n").find("UTF-8") != std::string::npos);
    CHECK(load_error("caf\xC3\xA9\tY\n").empty());
    CHECK_THROWS_AS(load_corpus(std::filesystem::path("/nonexistent/corpus.tsv")), data_error);
}

TEST_CASE("save and load round trip") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Corpus c = random_corpus(rng, rep);
        std::stringstream ss;
        save_corpus(ss, c);
        CHECK(parse(ss.str()) == c);
    }
    const auto path = std::filesystem::temp_directory_path() / "ccrf_dataset_roundtrip.tsv";
    const Corpus c = random_corpus(rng, 10);
    {
        std::ofstream out(path);
        save_corpus(out, c);
    }
    CHECK(load_corpus(path) == c);
    std::filesystem::remove(path);
}

TEST_CASE("split") {
    std::mt19937_64 rng(6);
    const Corpus c = random_corpus(rng, 500);
    const auto [train, test] = split(c, 350);
    CHECK(train.size() == 350);
    CHECK(test.size() == 150);
    CHECK(train.token_count() + test.token_count() == c.token_count());
    CHECK(train.sequences.front() == c.sequences.front());
    CHECK(test.sequences.front() == c.sequences[350]);
    CHECK(test.sequences.back() == c.sequences.back());

    CHECK(split(c, 0).first.size() == 0);
    CHECK(split(c, 0).second.size() == 500);
    CHECK(split(c, 500).second.size() == 0);
    CHECK_THROWS_AS(split(c, 501), std::out_of_range);
}

TEST_CASE("synthetic generation") {
    SyntheticSpec spec;
    spec.labels = {"A", "B", "C"};
    spec.sequences = 200;
    spec.noise = 0.0;
    spec.planted = {{TemplateKind::begin_end, "A", "B", {}}};
    const Corpus c = generate_synthetic(spec);
    CHECK(c.size() == 200);
    for (const auto& s : c.sequences) {
        CHECK(s.labels.front() == "A");
        CHECK(s.labels.back() == "B");
        CHECK(s.x.size() >= spec.min_length);
        CHECK(s.x.size() <= spec.max_length);
    }
    CHECK(generate_synthetic(spec) == c);
    spec.seed = 2;
    CHECK_FALSE(generate_synthetic(spec) == c);
}

TEST_CASE("synthetic noise rate concentrates") {
    SyntheticSpec spec;
    spec.sequences = 1000;
    spec.noise = 0.1;
    const ConstraintTemplate planted{TemplateKind::precedence, "AUTHOR", "DATE", {}};
    spec.planted = {planted};
    const Corpus c = generate_synthetic(spec);
    const double rate = static_cast<double>(violations(c, planted)) / static_cast<double>(c.size());
    CHECK(rate >= 0.07);
    CHECK(rate <= 0.13);
}

TEST_CASE("synthetic spec file") {
    std::istringstream in(
        "# corpus\nlabels = X, Y,Z\nsequences=12\nmin_length=2\nmax_length=3\n"
        "planted=adjacency:X:Y, state_change:X:Z:Y\nnoise=0\nseed=9\n");
    const SyntheticSpec spec = read_synthetic_spec(in);
    CHECK(spec.labels == std::vector<std::string>{"X", "Y", "Z"});
    CHECK(spec.sequences == 12);
    CHECK(spec.seed == 9);
    REQUIRE(spec.planted.size() == 2);
    CHECK(spec.planted[1] == ConstraintTemplate{TemplateKind::state_change, "X", "Z", "Y"});

    auto fails = [](const std::string& text) {
        std::istringstream bad(text);
        CHECK_THROWS_AS(read_synthetic_spec(bad), data_error);
    };
    fails("sequences\n");
    fails("colour=red\n");
    fails("sequences=lots\n");
    fails("planted=adjacency:X\n");
    fails("planted=sometimes:X:Y\n");
}

TEST_CASE("synthetic spec validation") {
    SyntheticSpec spec;
    spec.labels = {};
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    spec = {};
    spec.min_length = 5;
    spec.max_length = 4;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    spec = {};
    spec.noise = 1.5;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    spec = {};
    spec.planted = {{TemplateKind::adjacency, "AUTHOR", "NOPE", {}}};
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    // Starting with A and ending with B cannot both hold in a single token.
    spec = {};
    spec.labels = {"A", "B"};
    spec.min_length = spec.max_length = 1;
    spec.noise = 0.0;
    spec.planted = {{TemplateKind::begin_end, "A", "B", {}}};
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

}
