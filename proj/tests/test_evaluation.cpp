#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ckg/evaluation.hpp"
#include "support.hpp"

#include <sstream>

using namespace ckg;
using ckg::test::Gen;

namespace {

// DistMult with K = 1, unit relation weight and entity scalars; phi(s, o) = v_s * v_o.
ParameterSet scalar_model(const std::vector<double>& values) {
    ParameterSet p(ModelKind::distmult(), values.size(), 1, 1);
    p.param(Block::RelRe)(0, 0) = 1.0;
    for (std::size_t i = 0; i < values.size(); ++i) p.param(Block::EntRe)(i, 0) = values[i];
    return p;
}

// CP with K = 1 and unit relation weight; phi(s, o) = u_s * v_o.
ParameterSet cp_model(const std::vector<double>& u, const std::vector<double>& v) {
    ParameterSet p(ModelKind::cp(), u.size(), 1, 1);
    p.param(Block::RelRe)(0, 0) = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        p.param(Block::EntRe)(i, 0) = u[i];
        p.param(Block::ObjEnt)(i, 0) = v[i];
    }
    return p;
}

// Small integer parameters: exact arithmetic and frequent ties.
ParameterSet integer_params(Gen& g, ModelType type, std::size_t n, std::size_t m, std::size_t k) {
    auto p = ParameterSet(test::kind_of(type), n, m, k);
    for (Block b : kAllBlocks)
        if (p.has(b))
            for (double& v : p.param(b).values()) v = g.small_int(-2, 2);
    return p;
}

}  // namespace

TEST_CASE("a triple scoring above every candidate ranks first") {
    const auto p = cp_model({3.0, 1.0, 1.0, 1.0}, {1.0, 3.0, 1.0, 1.0});
    const auto r = rank_triple(p, {0, 0, 1, 1}, RankMode::Raw, {});
    CHECK(r.subject == 1.0);
    CHECK(r.object == 1.0);
}

TEST_CASE("object rank among 0.9, 0.5 (test), 0.1 is 2") {
    const auto p = cp_model({1.0, 0.0, 0.0, 0.0}, {0.9, 0.5, 0.1, 0.0});
    CHECK(rank_triple(p, {0, 0, 1, 1}, RankMode::Raw, {}).object == 2.0);
}

TEST_CASE("one tied competitor gives rank 1.5") {
    const auto p = cp_model({1.0, 0.0, 0.0, 0.0}, {0.7, 0.7, 0.1, 0.0});
    CHECK(rank_triple(p, {0, 0, 1, 1}, RankMode::Raw, {}).object == 1.5);
}

TEST_CASE("filtering removes known positives but never the test triple") {
    const auto p = cp_model({1.0, 0.0, 0.0, 0.0}, {0.9, 0.5, 0.1, 0.0});
    TripleSet known = {{0, 0, 0}, {0, 0, 1}};
    CHECK(rank_triple(p, {0, 0, 1, 1}, RankMode::Filtered, known).object == 1.0);
    CHECK(rank_triple(p, {0, 0, 1, 1}, RankMode::Filtered, {}).object ==
          rank_triple(p, {0, 0, 1, 1}, RankMode::Raw, {}).object);
}

TEST_CASE("MRR from ranks 2 and 4 is 0.375") {
    // phi(s, o) = u_s v_o; for (0, 0) subjects {2, 0.5, 0.1} and objects {2, 3, 4} compete with 1.
    ParameterSet cp(ModelKind::cp(), 4, 1, 1);
    cp.param(Block::RelRe)(0, 0) = 1.0;
    const double u[] = {1.0, 2.0, 0.5, 0.1}, v[] = {1.0, 2.0, 3.0, 4.0};
    for (int i = 0; i < 4; ++i) {
        cp.param(Block::EntRe)(i, 0) = u[i];
        cp.param(Block::ObjEnt)(i, 0) = v[i];
    }
    const std::vector<LabeledTriple> test = {{0, 0, 0, 1}};
    const auto report = ranking_metrics(cp, test, {});
    CHECK(report.mrr_raw == 0.375);
    CHECK(report.mrr_filtered == 0.375);
}

TEST_CASE("perfect model scores MRR and Hits of 1") {
    // Relation 0 uses rank component 0, relation 1 component 1.
    ParameterSet p(ModelKind::cp(), 4, 2, 2);
    p.param(Block::RelRe)(0, 0) = 1.0;
    p.param(Block::RelRe)(1, 1) = 1.0;
    const double u[2][4] = {{10, 1, 1, 1}, {1, 1, 10, 1}}, v[2][4] = {{1, 10, 1, 1}, {1, 1, 1, 10}};
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 4; ++i) {
            p.param(Block::EntRe)(i, k) = u[k][i];
            p.param(Block::ObjEnt)(i, k) = v[k][i];
        }
    const std::vector<LabeledTriple> test = {{0, 0, 1, 1}, {1, 2, 3, 1}};
    const auto rep = ranking_metrics(p, test, {});
    CHECK(rep.mrr_raw == 1.0);
    CHECK(rep.mrr_filtered == 1.0);
    for (int level : kHitsLevels) CHECK(rep.hits_at.at(level) == 1.0);
    CHECK_THROWS_AS(ranking_metrics(p, {}, {}), std::invalid_argument);
}

TEST_CASE("average precision examples") {
    const std::vector<ScoredLabel> mixed = {{3.0, 1}, {2.0, -1}, {1.0, 1}};
    CHECK(average_precision(mixed).average_precision == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
    const std::vector<ScoredLabel> sorted = {{3.0, 1}, {2.0, 1}, {1.0, -1}};
    CHECK(average_precision(sorted).average_precision == 1.0);
    const std::vector<ScoredLabel> all_pos = {{0.0, 1}, {5.0, 1}};
    CHECK(average_precision(all_pos).average_precision == 1.0);
    const std::vector<ScoredLabel> none = {{1.0, -1}};
    CHECK_THROWS_AS(average_precision(none), std::invalid_argument);
    // Ties keep input order.
    const std::vector<ScoredLabel> tied = {{1.0, -1}, {1.0, 1}};
    CHECK(average_precision(tied).average_precision == 0.5);
}

TEST_CASE("property: ranks, MRR and Hits agree with the brute-force oracle") {
    Gen g(909);
    const ModelType types[] = {ModelType::ComplEx, ModelType::DistMult, ModelType::CP, ModelType::RESCAL,
                               ModelType::TransE};
    for (int trial = 0; trial < 200; ++trial) {
        const auto type = types[g.index(0, 4)];
        const std::size_t n = g.index(2, 20), m = g.index(1, 3);
        const auto p = integer_params(g, type, n, m, g.index(1, 3));
        std::vector<LabeledTriple> test;
        TripleSet known;
        for (std::size_t i = 0, count = g.index(1, 6); i < count; ++i) test.push_back(g.triple(p));
        for (auto& t : test) {
            t.y = 1;
            known.insert(key_of(t));
        }
        for (std::size_t i = 0, extra = g.index(0, 10); i < extra; ++i) known.insert(key_of(g.triple(p)));

        const auto unthreaded = ranking_metrics(p, test, known, 1);
        const auto threaded = ranking_metrics(p, test, known, 3);
        CHECK(unthreaded.mrr_filtered == threaded.mrr_filtered);
        CHECK(unthreaded.mrr_raw == threaded.mrr_raw);

        double raw = 0.0, fil = 0.0;
        std::map<int, double> hits;
        for (const auto& t : test) {
            const auto r = test::oracle_ranks(p, t, nullptr);
            const auto f = test::oracle_ranks(p, t, &known);
            const auto lib_raw = rank_triple(p, t, RankMode::Raw, known);
            const auto lib_fil = rank_triple(p, t, RankMode::Filtered, known);
            CHECK(lib_raw.subject == r.subject);
            CHECK(lib_raw.object == r.object);
            CHECK(lib_fil.subject == f.subject);
            CHECK(lib_fil.object == f.object);
            CHECK(f.subject <= r.subject);
            CHECK(f.object <= r.object);
            raw += 1.0 / r.subject + 1.0 / r.object;
            fil += 1.0 / f.subject + 1.0 / f.object;
            for (int level : kHitsLevels) hits[level] += (f.subject <= level) + (f.object <= level);
        }
        const double denom = 2.0 * static_cast<double>(test.size());
        CHECK(unthreaded.mrr_raw == doctest::Approx(raw / denom).epsilon(1e-12));
        CHECK(unthreaded.mrr_filtered == doctest::Approx(fil / denom).epsilon(1e-12));
        CHECK(unthreaded.mrr_filtered >= unthreaded.mrr_raw);
        for (int level : kHitsLevels) CHECK(unthreaded.hits_at.at(level) == hits[level] / denom);
        CHECK(unthreaded.hits_at.at(1) <= unthreaded.hits_at.at(3));
        CHECK(unthreaded.hits_at.at(3) <= unthreaded.hits_at.at(10));
    }
}

TEST_CASE("property: AP agrees with precision-recall integration") {
    Gen g(111);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<ScoredLabel> items(g.index(1, 20));
        for (auto& it : items) it = {static_cast<double>(g.small_int(-3, 3)), g.coin() ? 1 : -1};
        items[g.index(0, items.size() - 1)].label = 1;
        const double ap = average_precision(items).average_precision;
        CHECK(std::abs(ap - test::oracle_average_precision(items)) <= 1e-12);
        CHECK(ap >= 0.0);
        CHECK(ap <= 1.0);
    }
}

TEST_CASE("property: strictly increasing transforms leave metrics unchanged") {
    Gen g(222);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = g.index(2, 12);
        std::vector<double> v(n);
        for (double& x : v) x = g.small_int(1, 4);
        // phi = v_s v_o > 0; cubing every entity value cubes every score, a strictly increasing map.
        auto cubed = v;
        for (double& x : cubed) x = x * x * x;
        const auto p = scalar_model(v), q = scalar_model(cubed);
        std::vector<LabeledTriple> test = {{0, static_cast<EntityId>(g.index(0, n - 1)),
                                            static_cast<EntityId>(g.index(0, n - 1)), 1}};
        const auto a = ranking_metrics(p, test, {}), b = ranking_metrics(q, test, {});
        CHECK(a.mrr_raw == b.mrr_raw);
        CHECK(a.hits_at == b.hits_at);

        std::vector<ScoredLabel> items(g.index(1, 15)), mapped;
        for (auto& it : items) it = {g.uniform(-2, 2), g.coin() ? 1 : -1};
        items.front().label = 1;
        for (const auto& it : items) mapped.push_back({std::exp(it.score) + 3.0, it.label});
        CHECK(average_precision(items).average_precision == average_precision(mapped).average_precision);
    }
}

TEST_CASE("per-relation breakdown and renderers") {
    ParameterSet p(ModelKind::distmult(), 3, 2, 1);
    for (double& v : p.param(Block::EntRe).values()) v = 1.0;
    p.param(Block::RelRe)(0, 0) = 1.0;
    p.param(Block::RelRe)(1, 0) = -1.0;
    const std::vector<LabeledTriple> test = {{0, 0, 1, 1}, {1, 1, 2, 1}};
    const auto rep = ranking_metrics(p, test, {});
    CHECK(rep.per_relation.size() == 2);
    CHECK(rep.per_relation.at(0) == doctest::Approx(1.0 / 2.0));

    Vocabulary v;
    for (auto name : {"a", "b", "c"}) v.add_entity(name);
    v.add_relation("likes");
    v.add_relation("hates");
    std::ostringstream tsv, table;
    write_report_tsv(tsv, rep, &v);
    write_report_table(table, rep, &v);
    CHECK(tsv.str().find("mrr_filtered[likes]") != std::string::npos);
    CHECK(tsv.str().find("hits@10") != std::string::npos);
    CHECK(table.str().find("hates") != std::string::npos);
}
