#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ccrf/error.hpp"
#include "ccrf/lagrangian.hpp"
#include "oracle.hpp"

using namespace ccrf;

namespace {

struct Instance {
    Trellis trellis;
    ConstraintSystem system;
    std::vector<ConstraintTemplate> templates;
};

Instance random_instance(std::mt19937_64& rng, std::size_t m, std::size_t n, std::size_t constraints) {
    Trellis t = oracle::random_trellis(rng, m, n);
    ConstraintSystem system(t.alphabet(), n);
    std::vector<ConstraintTemplate> templates;
    for (std::size_t k = 0; k < constraints; ++k) {
        templates.push_back(oracle::random_template(rng, m));
        system.add(templates.back(), 1.0);
    }
    return {std::move(t), std::move(system), std::move(templates)};
}

std::vector<double> random_lambda(std::mt19937_64& rng, std::size_t size) {
    std::exponential_distribution<double> e(0.5);
    std::vector<double> l(size);
    for (auto& x : l) x = e(rng);
    return l;
}

/// max over all paths of score - lambda . (H e - b), by enumeration.
double dual_by_enumeration(const Instance& in, const std::vector<double>& lambda) {
    double best = -INFINITY;
    const auto rows = in.system.rows();
    oracle::for_each_labeling(in.trellis.length(), in.trellis.num_labels(), [&](const oracle::Labels& y) {
        const PathAssignment p(y, in.trellis.num_labels());
        double v = oracle::score(in.trellis, y);
        for (std::size_t r = 0; r < rows.size(); ++r) v -= lambda[r] * rows[r]->value(p);
        best = std::max(best, v);
    });
    return best;
}

}  // namespace

TEST_SUITE("lagrangian") {

TEST_CASE("zero multipliers give the viterbi solution") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 50; ++rep) {
        const auto in = random_instance(rng, 3, 4, 2);
        const auto d = dual_value(in.trellis, in.system, std::vector<double>(in.system.num_rows(), 0.0));
        const auto v = viterbi(in.trellis);
        CHECK(d.path == v);
        CHECK(d.value == path_score(in.trellis, v));
    }
}

TEST_CASE("single begin_end row with lambda = 5") {
    std::mt19937_64 rng(6);
    const Trellis t = oracle::random_trellis(rng, 2, 2);
    ConstraintSystem system(t.alphabet(), 2);
    system.add({TemplateKind::begin_end, "A", "B", {}}, 1.0);
    REQUIRE(system.num_rows() == 1);
    double best = -INFINITY;
    oracle::for_each_labeling(2, 2, [&](const oracle::Labels& y) {
        const double row = (y.front() == 0 ? 1.0 : 0.0) - (y.back() == 1 ? 1.0 : 0.0);
        best = std::max(best, oracle::score(t, y) - 5.0 * row);
    });
    CHECK(dual_value(t, system, std::vector<double>{5.0}).value == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("dual value matches enumeration, including constant terms") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t m = 1 + rep % 3, n = 1 + (rep / 3) % 4;
        const auto in = random_instance(rng, m, n, 1 + rep % 3);
        const auto lambda = random_lambda(rng, in.system.num_rows());
        const auto d = dual_value(in.trellis, in.system, lambda);
        CHECK(d.value == doctest::Approx(dual_by_enumeration(in, lambda)).epsilon(1e-9));
    }
}

TEST_CASE("dual_value rejects bad multipliers") {
    const auto a = oracle::alphabet(2);
    const Trellis t(a, 3);
    ConstraintSystem system(a, 3);
    system.add({TemplateKind::adjacency, "A", "B", {}}, 1.0);
    CHECK_THROWS_AS(dual_value(t, system, std::vector<double>{0.0}), std::invalid_argument);
    CHECK_THROWS_AS(dual_value(t, system, std::vector<double>{1.0, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(dual_value(t, system, std::vector<double>{1.0, NAN}), std::invalid_argument);
    CHECK_THROWS_AS(dual_value(Trellis(a, 4), system, std::vector<double>{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("subgradient") {
    const auto a = oracle::alphabet(2);
    ConstraintSystem system(a, 3);
    system.add({TemplateKind::adjacency, "A", "B", {}}, 1.0);
    // A,B,B meets every row.
    for (double g : subgradient(system, PathAssignment({0, 1, 1}, 2))) CHECK(g <= 0.0);
    // B,A,A breaks only the row for the A at position 1.
    CHECK(subgradient(system, PathAssignment({1, 0, 0}, 2)) == std::vector<double>{0.0, 1.0});
    // B,B,B touches no row at all.
    CHECK(subgradient(system, PathAssignment({1, 1, 1}, 2)) == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(subgradient(system, PathAssignment({1, 1}, 2)), data_error);
}

TEST_CASE("weak duality, convexity and the subgradient inequality") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t feasible_instances = 0;
    for (int rep = 0; rep < 120; ++rep) {
        const std::size_t m = 1 + rep % 3, n = 1 + (rep / 3) % 4;
        const auto in = random_instance(rng, m, n, 1 + rep % 3);
        const std::size_t rows = in.system.num_rows();
        const auto primal = oracle::hard_primal(in.trellis, in.templates);
        feasible_instances += primal.has_value();
        for (int j = 0; j < 30; ++j) {
            const auto l1 = random_lambda(rng, rows);
            const auto l2 = random_lambda(rng, rows);
            const double alpha = unit(rng);
            std::vector<double> mix(rows);
            for (std::size_t r = 0; r < rows; ++r) mix[r] = alpha * l1[r] + (1 - alpha) * l2[r];
            const auto d1 = dual_value(in.trellis, in.system, l1);
            const double L2 = dual_value(in.trellis, in.system, l2).value;
            if (primal) CHECK(d1.value >= *primal - 1e-9);
            CHECK(dual_value(in.trellis, in.system, mix).value <= alpha * d1.value + (1 - alpha) * L2 + 1e-9);
            const auto g = subgradient(in.system, d1.path);
            double lower = d1.value;
            for (std::size_t r = 0; r < rows; ++r) lower -= g[r] * (l2[r] - l1[r]);
            CHECK(L2 >= lower - 1e-9);
        }
    }
    CHECK(feasible_instances > 60);
}

TEST_CASE("harmonic step") {
    CHECK(harmonic_step(0) == 1.0);
    CHECK(harmonic_step(3) == 0.25);
    double sum = 0.0;
    for (std::size_t k = 0; k < 10000; ++k) sum += harmonic_step(k);
    CHECK(sum > 9.7);
}

TEST_CASE("solve_dual stops at once when viterbi is feasible") {
    std::mt19937_64 rng(4);
    const Trellis t = oracle::random_trellis(rng, 3, 4);
    const auto v = viterbi(t);
    const auto names = v.label_names(t.alphabet());
    ConstraintSystem system(t.alphabet(), 4);
    system.add({TemplateKind::begin_end, names.front(), names.back(), {}}, 1.0);
    const auto r = solve_dual(t, system);
    CHECK(r.status == DualStatus::certified);
    REQUIRE(r.history.size() == 1);
    CHECK(r.history[0].k == 0);
    CHECK(r.history[0].feasible);
    CHECK(r.path == v);
    CHECK(r.primal_feasible);
    CHECK(r.lambda == std::vector<double>(system.num_rows(), 0.0));
    CHECK(*r.gap() == 0.0);
}

TEST_CASE("solve_dual on begin_end violated by viterbi, m=2, n=3") {
    const auto a = oracle::alphabet(2);
    std::vector<double> w(edge_space_size(3, 2), 0.0);
    w[edge_index(0, "<START>", "A", 3, a)] = 2.0;
    w[edge_index(3, "A", "<END>", 3, a)] = 1.0;
    w[edge_index(3, "B", "<END>", 3, a)] = 0.25;
    const Trellis t(a, 3, w);
    REQUIRE(viterbi(t).labels().front() == 0);
    REQUIRE(viterbi(t).labels().back() == 0);
    const ConstraintTemplate rule{TemplateKind::begin_end, "A", "B", {}};
    ConstraintSystem system(a, 3);
    system.add(rule, 1.0);

    const auto r = solve_dual(t, system);
    const auto primal = oracle::hard_primal(t, {rule});
    REQUIRE(primal);
    CHECK(r.best_dual >= *primal - 1e-9);
    CHECK(r.primal_feasible);
    CHECK(r.primal_score == doctest::Approx(*primal));
    CHECK(*r.gap() <= 1e-6);
    CHECK(oracle::holds(rule, r.path.label_names(a)));
    double running = INFINITY;
    for (const auto& it : r.history) {
        running = std::min(running, it.dual);
        CHECK(running >= *primal - 1e-9);
    }
    CHECK(r.best_dual == running);
    for (double l : r.lambda) CHECK(l >= 0.0);
}

TEST_CASE("solve_dual invariants on random instances") {
    std::mt19937_64 rng(55);
    for (int rep = 0; rep < 100; ++rep) {
        const auto in = random_instance(rng, 2 + rep % 2, 2 + rep % 3, 1 + rep % 3);
        const auto r = solve_dual(in.trellis, in.system);
        CHECK(r.history.size() <= 200);
        CHECK_FALSE(r.history.empty());
        double running = INFINITY;
        for (const auto& it : r.history) running = std::min(running, it.dual);
        CHECK(r.best_dual == running);
        for (double l : r.lambda) CHECK(l >= 0.0);
        const auto primal = oracle::hard_primal(in.trellis, in.templates);
        if (primal) CHECK(r.best_dual >= *primal - 1e-9);
        if (r.primal_feasible) {
            CHECK(r.primal_score <= *primal + 1e-9);
            for (const auto& c : in.templates) CHECK(oracle::holds(c, r.path.label_names(in.trellis.alphabet())));
        }
        CHECK(r.primal_score == path_score(in.trellis, r.path));
    }
}

TEST_CASE("solve_dual options") {
    std::mt19937_64 rng(1);
    const auto in = random_instance(rng, 3, 4, 3);
    CHECK_THROWS_AS(solve_dual(in.trellis, in.system, DualOptions{0, 50, 1e-6, harmonic_step}),
                    std::invalid_argument);
    const auto one = solve_dual(in.trellis, in.system, DualOptions{1, 50, 1e-6, harmonic_step});
    CHECK(one.history.size() == 1);

    // A system with no rows is trivially certified.
    const auto none = solve_dual(in.trellis, ConstraintSystem(in.trellis.alphabet(), 4));
    CHECK(none.status == DualStatus::certified);
    CHECK(none.path == viterbi(in.trellis));

    CHECK(std::string(status_name(DualStatus::stalled)) == "stalled");
}

TEST_CASE("trace csv") {
    std::vector<DualIterate> h{{0, 1.5, 2.0, false, 1.0}, {1, 1.25, 0.0, true, 0.0}};
    std::ostringstream out;
    write_trace_csv(out, h);
    CHECK(out.str() == "k,L(lambda_k),||g_k||,feasible,theta_k\n0,1.5,2,false,1\n1,1.25,0,true,0\n");
}

}
