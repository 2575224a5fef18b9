#include "tempanel/hdfe.hpp"

#include <Eigen/Dense>

#include "doctest.h"
#include "tempanel/errors.hpp"
#include "tempanel/rng.hpp"
#include "tempanel/synth.hpp"

using namespace tempanel;

namespace {

FactorGroup group_of(const std::string& name, std::vector<int> levels) {
    std::vector<std::string> keys;
    for (int l : levels) keys.push_back(std::to_string(l));
    return make_group(name, keys);
}

}  // namespace

TEST_CASE("drop_singletons cascades to the fixed point") {
    // firm=[A,A,B], year=[1,2,2]: firm B and year 1 are singletons; removing
    // them leaves new singletons until nothing survives.
    const auto result = drop_singletons(
        {group_of("firm", {0, 0, 1}), group_of("year", {1, 2, 2})});
    CHECK(result.dropped == 3);
    for (char k : result.keep) CHECK(k == 0);
}

TEST_CASE("drop_singletons leaves balanced data alone") {
    const auto both = drop_singletons(
        {group_of("firm", {0, 0}), group_of("year", {1, 1})});
    CHECK(both.dropped == 0);

    const auto single = drop_singletons({group_of("g", {0, 0, 1, 1})});
    CHECK(single.dropped == 0);
    CHECK(single.groups[0].n_levels == 2);
}

TEST_CASE("singleton fixed point: every surviving level has two or more rows") {
    Rng rng(11);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 2 + static_cast<int>(rng.below(60));
        std::vector<int> firm, year;
        for (int i = 0; i < n; ++i) {
            firm.push_back(static_cast<int>(rng.below(12)));
            year.push_back(static_cast<int>(rng.below(5)));
        }
        const auto result =
            drop_singletons({group_of("firm", firm), group_of("year", year)});
        for (const auto& g : result.groups) {
            std::vector<int> counts(static_cast<std::size_t>(g.n_levels), 0);
            for (int lvl : g.level_of_row) ++counts[static_cast<std::size_t>(lvl)];
            for (int c : counts) CHECK(c >= 2);
        }
    }
}

TEST_CASE("absorb subtracts group means for one group in a single cycle") {
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    FESpec spec;
    spec.groups = {group_of("g", {0, 0, 1, 1})};
    const auto result = absorb(x, spec);
    CHECK(result.iterations_used == 1);
    CHECK(result.columns(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(result.columns(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(result.columns(2, 0) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(result.columns(3, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("balanced two-way data matches the closed form") {
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    FESpec spec;
    spec.groups = {group_of("firm", {0, 0, 1, 1}), group_of("year", {0, 1, 0, 1})};
    const auto result = absorb(x, spec);
    // x - xbar_firm - xbar_year + xbar is identically zero here.
    for (int i = 0; i < 4; ++i)
        CHECK(result.columns(i, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("absorb is idempotent and returns zero cycles on demeaned input") {
    Rng rng(3);
    Eigen::MatrixXd x(50, 2);
    std::vector<int> firm, year;
    for (int i = 0; i < 50; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.uniform(-4.0, 9.0);
        firm.push_back(i % 7);
        year.push_back((i / 7) % 4);
    }
    FESpec spec;
    spec.groups = {group_of("firm", firm), group_of("year", year)};
    const auto once = absorb(x, spec);
    const auto twice = absorb(once.columns, spec);
    CHECK(twice.iterations_used == 0);
    CHECK((twice.columns - once.columns).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("after absorb every level sum is below tolerance times column scale") {
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 30 + static_cast<int>(rng.below(120));
        Eigen::MatrixXd x(n, 3);
        std::vector<int> firm, year;
        for (int i = 0; i < n; ++i) {
            x(i, 0) = rng.normal(0.0, 2.0);
            x(i, 1) = rng.uniform(0.0, 300.0);
            x(i, 2) = rng.normal(5.0, 1.0);
            firm.push_back(static_cast<int>(rng.below(10)));
            year.push_back(static_cast<int>(rng.below(4)));
        }
        FESpec spec;
        spec.groups = {group_of("firm", firm), group_of("year", year)};
        spec.tolerance = 1e-9;
        const auto result = absorb(x, spec);
        for (const auto& g : spec.groups) {
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(g.n_levels, 3);
            for (int i = 0; i < n; ++i)
                sums.row(g.level_of_row[static_cast<std::size_t>(i)]) +=
                    result.columns.row(i);
            for (int c = 0; c < 3; ++c) {
                const double scale = x.col(c).cwiseAbs().maxCoeff();
                CHECK(sums.col(c).cwiseAbs().maxCoeff() <= spec.tolerance * scale);
            }
        }
    }
}

TEST_CASE("absorb results are identical across thread counts") {
    Rng rng(23);
    const int n = 200;
    Eigen::MatrixXd x(n, 5);
    std::vector<int> firm, year;
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 5; ++c) x(i, c) = rng.normal();
        firm.push_back(static_cast<int>(rng.below(20)));
        year.push_back(static_cast<int>(rng.below(5)));
    }
    FESpec spec;
    spec.groups = {group_of("firm", firm), group_of("year", year)};
    const auto serial = absorb(x, spec, 1);
    const auto threaded = absorb(x, spec, 4);
    CHECK(serial.iterations_used == threaded.iterations_used);
    CHECK((serial.columns - threaded.columns).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("absorb convergence error carries the residual") {
    Eigen::MatrixXd x(6, 1);
    x << 1, 5, 2, 8, 3, 9;
    FESpec spec;
    spec.groups = {group_of("firm", {0, 0, 1, 1, 2, 2}),
                   group_of("year", {0, 1, 0, 1, 0, 1})};
    spec.max_iters = 0;
    CHECK_THROWS_AS(absorb(x, spec), ConvergenceError);
    try {
        absorb(x, spec);
    } catch (const ConvergenceError& e) {
        CHECK(e.last_residual() > 0.0);
    }
}

TEST_CASE("count_absorbed_dof hand cases") {
    CHECK(count_absorbed_dof({group_of("g", {0, 1, 2, 0, 1, 2})}).m == 3);

    // firm levels 3, year levels 2, fully connected -> 3 + 2 - 1 = 4.
    const auto connected = count_absorbed_dof(
        {group_of("firm", {0, 0, 1, 1, 2, 2}), group_of("year", {0, 1, 0, 1, 0, 1})});
    CHECK(connected.m == 4);
    CHECK(connected.exact);

    // Two disconnected blocks: firms {0,1} with year 0, firm {2} with year 1
    // -> 3 + 2 - 2 = 3.
    const auto split = count_absorbed_dof(
        {group_of("firm", {0, 0, 1, 1, 2, 2}), group_of("year", {0, 0, 0, 0, 1, 1})});
    CHECK(split.m == 3);
}

TEST_CASE("dof matches the brute-force dummy rank on random two-group panels") {
    Rng rng(31);
    for (int rep = 0; rep < 40; ++rep) {
        const int n = 6 + static_cast<int>(rng.below(40));
        std::vector<int> firm, year;
        for (int i = 0; i < n; ++i) {
            firm.push_back(static_cast<int>(rng.below(8)));
            year.push_back(static_cast<int>(rng.below(4)));
        }
        const std::vector<FactorGroup> groups = {group_of("firm", firm),
                                                 group_of("year", year)};
        CHECK(count_absorbed_dof(groups).m == dummy_matrix_rank(groups));
    }
}

TEST_CASE("three groups are flagged approximate") {
    const auto result = count_absorbed_dof({group_of("a", {0, 0, 1, 1}),
                                            group_of("b", {0, 1, 0, 1}),
                                            group_of("c", {0, 1, 1, 0})});
    CHECK(!result.exact);
}
