#include <doctest.h>

#include <random>
#include <sstream>

#include "ccrf/error.hpp"
#include "ccrf/eval.hpp"

using namespace ccrf;

namespace {

using Corpus = std::vector<std::vector<std::string>>;

Corpus random_corpus(std::mt19937_64& rng, std::size_t sequences, std::size_t labels) {
    Corpus out;
    for (std::size_t s = 0; s < sequences; ++s) {
        std::vector<std::string> y(1 + rng() % 7);
        for (auto& l : y) l = std::string(1, static_cast<char>('A' + rng() % labels));
        out.push_back(y);
    }
    return out;
}

Corpus perturb(std::mt19937_64& rng, Corpus c, std::size_t labels) {
    for (auto& y : c) {
        for (auto& l : y) {
            if (rng() % 3 == 0) l = std::string(1, static_cast<char>('A' + rng() % labels));
        }
    }
    return c;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("hand-counted example") {
    const Corpus gold{{"A", "A", "B", "B"}};
    const Corpus pred{{"A", "B", "B", "B"}};
    const auto r = evaluate(gold, pred);
    const auto* a = r.find("A");
    const auto* b = r.find("B");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->precision == 1.0);
    CHECK(a->recall == 0.5);
    CHECK(a->f_measure == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(b->precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(b->recall == 1.0);
    CHECK(b->f_measure == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(r.accuracy == 0.75);
    CHECK(a->predicted == 1);
    CHECK(a->gold == 2);
    CHECK(a->correct == 1);
    CHECK(r.micro.precision == 0.75);
    CHECK(r.micro.recall == 0.75);
    CHECK(r.macro.f_measure == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));
    CHECK(r.tokens == 4);
    CHECK(r.find("C") == nullptr);
}

TEST_CASE("perfect prediction") {
    std::mt19937_64 rng(1);
    const auto gold = random_corpus(rng, 20, 4);
    const auto r = evaluate(gold, gold);
    CHECK(r.accuracy == 1.0);
    CHECK(r.micro.f_measure == 1.0);
    CHECK(r.macro.f_measure == 1.0);
    for (const auto& [label, m] : r.per_label) {
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
    }
}

TEST_CASE("metric identities on random corpora") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t labels = 1 + rep % 5;
        const auto gold = random_corpus(rng, 1 + rep % 10, labels);
        const auto pred = perturb(rng, gold, labels + 1);
        const auto r = evaluate(gold, pred);
        CHECK(r.micro.precision == r.accuracy);
        CHECK(r.micro.recall == r.accuracy);
        std::size_t correct = 0, tokens = 0;
        for (const auto& g : gold) tokens += g.size();
        double fmin = 1.0, fmax = 0.0;
        for (const auto& [label, m] : r.per_label) {
            CHECK(m.correct <= std::min(m.predicted, m.gold));
            CHECK(m.f_measure >= std::min(m.precision, m.recall) - 1e-15);
            CHECK(m.f_measure <= std::max(m.precision, m.recall) + 1e-15);
            for (double v : {m.precision, m.recall, m.f_measure}) CHECK((v >= 0.0 && v <= 1.0));
            correct += m.correct;
            fmin = std::min(fmin, m.f_measure);
            fmax = std::max(fmax, m.f_measure);
        }
        CHECK(r.tokens == tokens);
        CHECK(r.accuracy == static_cast<double>(correct) / static_cast<double>(tokens));
        CHECK(r.macro.f_measure >= fmin - 1e-12);
        CHECK(r.macro.f_measure <= fmax + 1e-12);
        for (std::size_t i = 1; i < r.per_label.size(); ++i) CHECK(r.per_label[i - 1].first < r.per_label[i].first);

        // Sequence order does not matter.
        auto g2 = gold;
        auto p2 = pred;
        std::reverse(g2.begin(), g2.end());
        std::reverse(p2.begin(), p2.end());
        const auto r2 = evaluate(g2, p2);
        CHECK(r2.accuracy == r.accuracy);
        CHECK(r2.macro.f_measure == r.macro.f_measure);
        CHECK(r2.per_label.size() == r.per_label.size());
    }
}

TEST_CASE("labels only predicted still count toward the macro average") {
    const auto r = evaluate(Corpus{{"A", "A"}}, Corpus{{"A", "X"}});
    REQUIRE(r.find("X"));
    CHECK(r.find("X")->precision == 0.0);
    CHECK(r.per_label.size() == 2);
    CHECK(r.macro.precision == doctest::Approx(0.5));
    CHECK(r.macro.recall == doctest::Approx(0.25));
}

TEST_CASE("f measure and edge cases") {
    CHECK(f_measure(0.0, 0.0) == 0.0);
    CHECK(f_measure(1.0, 0.0) == 0.0);
    CHECK(f_measure(0.5, 0.5) == 0.5);
    const auto empty = evaluate(Corpus{}, Corpus{});
    CHECK(empty.tokens == 0);
    CHECK(empty.accuracy == 0.0);
    CHECK(empty.per_label.empty());
}

TEST_CASE("shape mismatches are data errors") {
    CHECK_THROWS_AS(evaluate(Corpus{{"A"}}, Corpus{}), data_error);
    CHECK_THROWS_AS(evaluate(Corpus{{"A", "B"}}, Corpus{{"A"}}), data_error);
}

TEST_CASE("report format") {
    const auto r = evaluate(Corpus{{"A", "A", "B", "B"}}, Corpus{{"A", "B", "B", "B"}});
    std::ostringstream out;
    write_report(out, "viterbi", r);
    const std::string text = out.str();
    CHECK(text.find("  100.00") != std::string::npos);
    CHECK(text.find("   66.67") != std::string::npos);
    CHECK(text.find("viterbi.accuracy=0.75\n") != std::string::npos);
    CHECK(text.find("viterbi.label.B.precision=0.66666666666666663\n") != std::string::npos);
    CHECK(text.find("viterbi.label.A.correct=1\n") != std::string::npos);
    CHECK(text.find("viterbi.tokens=4\n") != std::string::npos);

    std::ostringstream cmp;
    const std::vector<std::pair<std::string, EvaluationReport>> rows{{"viterbi", r}, {"lagrangian", r}};
    write_comparison(cmp, rows);
    const std::string c = cmp.str();
    CHECK(c.find("viterbi ") < c.find("lagrangian "));
    CHECK(c.find("lagrangian.micro.f=0.75\n") != std::string::npos);
    CHECK(c.find("Accuracy") != std::string::npos);
}

}
