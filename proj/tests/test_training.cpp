#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ckg/errors.hpp"
#include "ckg/evaluation.hpp"
#include "ckg/training.hpp"
#include "support.hpp"

#include <cmath>

using namespace ckg;
using ckg::test::Gen;

namespace {

// DistMult K = 1 with phi(0, 0, 1) = value.
ParameterSet scored_at(double value) {
    ParameterSet p(ModelKind::distmult(), 2, 1, 1);
    p.param(Block::EntRe)(0, 0) = 1.0;
    p.param(Block::EntRe)(1, 0) = 1.0;
    p.param(Block::RelRe)(0, 0) = value;
    return p;
}

DatasetSplit tiny_positive_split() {
    DatasetSplit s;
    for (int i = 0; i < 6; ++i) s.vocabulary.add_entity("e" + std::to_string(i));
    s.vocabulary.add_relation("r");
    for (EntityId i = 0; i < 5; ++i) s.train.push_back({0, i, static_cast<EntityId>(i + 1), 1});
    s.valid.push_back({0, 0, 2, 1});
    s.rebuild_known_positives();
    return s;
}

}  // namespace

TEST_CASE("logistic loss values") {
    CHECK(logistic_loss(scored_at(0.0), {0, 0, 1, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(logistic_loss(scored_at(10.0), {0, 0, 1, 1}) == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
    CHECK(logistic_loss(scored_at(10.0), {0, 0, 1, 1}) == doctest::Approx(4.54e-5).epsilon(1e-3));
    CHECK(logistic_loss(scored_at(10.0), {0, 0, 1, -1}) == doctest::Approx(10.0000454).epsilon(1e-9));
    CHECK(std::isfinite(logistic_loss(scored_at(1000.0), {0, 0, 1, -1})));
}

TEST_CASE("loss gradient scaling") {
    // lambda = 0, phi = 0, y = +1: factor -1/2 on grad phi.
    const auto p = scored_at(0.0);
    SparseGradient g;
    loss_gradient(p, {0, 0, 1, 1}, 0.0, g);
    const auto dphi = score_gradient(p, 0, 0, 1);
    for (const auto& row : dphi.rows())
        for (std::size_t k = 0; k < row.values.size(); ++k)
            CHECK(g.find(row.block, row.row)->values[k] == -0.5 * row.values[k]);

    // Saturated: only the regularizer is left.
    const auto big = scored_at(60.0);
    loss_gradient(big, {0, 0, 1, 1}, 0.1, g);
    CHECK(g.find(Block::RelRe, 0)->values[0] == doctest::Approx(2.0 * 0.1 * 60.0).epsilon(1e-12));
}

TEST_CASE("property: loss gradient matches finite differences of loss plus touched-row penalty") {
    Gen g(77);
    for (const auto& kind : test::all_kinds()) {
        INFO(kind.describe());
        for (int trial = 0; trial < 30; ++trial) {
            auto p = g.params(kind, 5, 2, 4);
            const auto t = g.triple(p);
            const double lambda = g.uniform(0.0, 0.2);
            SparseGradient grad;
            loss_gradient(p, t, lambda, grad);
            for (const auto& row : grad.rows()) {
                for (std::size_t col = 0; col < row.values.size(); ++col) {
                    const double fd = test::central_difference(p, row.block, row.row, col, 1e-6, [&](const ParameterSet& q) {
                        double penalty = 0.0;
                        for (const auto& r : grad.rows())
                            for (double v : q.param(r.block).row(r.row)) penalty += v * v;
                        const double phi = test::oracle_score(q, t.r, t.s, t.o);
                        return std::log1p(std::exp(-t.y * phi)) + lambda * penalty;
                    });
                    CHECK(test::relative_error(row.values[col], fd) <= 1e-6);
                }
            }
        }
    }
}

TEST_CASE("max-margin loss values") {
    CHECK(max_margin_loss(scored_at(0.2), {0, 0, 1, 1}, {0, 0, 1, -1}, 1.0) == 1.0);
    auto pos = scored_at(0.2);
    // phi(pos) = 0.2 via entity 1; phi(neg) = 0.5 via entity 0 paired with itself.
    ParameterSet p(ModelKind::distmult(), 2, 1, 1);
    p.param(Block::RelRe)(0, 0) = 1.0;
    p.param(Block::EntRe)(0, 0) = std::sqrt(0.5);
    p.param(Block::EntRe)(1, 0) = 0.2 / std::sqrt(0.5);
    CHECK(max_margin_loss(p, {0, 0, 1, 1}, {0, 0, 0, -1}, 1.0) == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(max_margin_loss(p, {0, 0, 0, 1}, {0, 0, 1, -1}, 0.25) == 0.0);

    SparseGradient g;
    max_margin_gradient(pos, {0, 0, 1, 1}, {0, 0, 1, -1}, 1.0, 0.0, g);
    for (const auto& row : g.rows())
        for (double v : row.values) CHECK(v == 0.0);
}

TEST_CASE("negative sampling") {
    Gen g(8);
    const LabeledTriple pos{1, 3, 7, 1};
    const auto two = sample_negatives(pos, 2, 20, g.rng());
    REQUIRE(two.size() == 2);
    for (const auto& n : two) {
        CHECK(n.y == -1);
        CHECK(n.r == pos.r);
        CHECK((n.s == pos.s || n.o == pos.o));
    }
    for (const auto& n : sample_negatives({0, 0, 0, 1}, 3, 1, g.rng())) CHECK(n == LabeledTriple{0, 0, 0, -1});

    // Subject corruption frequency over 10,000 draws; entity ids 1..1000 never equal the anchors.
    std::size_t subject_changed = 0;
    const LabeledTriple anchor{0, 5000, 5001, 1};
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10000; ++i) {
        const auto n = sample_negatives(anchor, 1, 1000, rng).front();
        subject_changed += n.s != anchor.s;
    }
    CHECK(std::abs(subject_changed / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("adagrad step") {
    ParameterSet p(ModelKind::distmult(), 1, 1, 1);
    p.param(Block::EntRe)(0, 0) = 1.0;
    SparseGradient g;
    g.row(Block::EntRe, 0, 1).values[0] = 2.0;
    adagrad_step(p, g, 0.5, 1e-8);
    CHECK(p.accumulator(Block::EntRe)(0, 0) == 4.0);
    CHECK(1.0 - p.param(Block::EntRe)(0, 0) == doctest::Approx(0.5 * 2.0 / (2.0 + 1e-8)).epsilon(1e-15));

    const double before = p.param(Block::EntRe)(0, 0);
    adagrad_step(p, g, 0.5, 1e-8);
    const double step2 = before - p.param(Block::EntRe)(0, 0);
    CHECK(step2 < 0.5);

    SparseGradient zero;
    zero.row(Block::EntRe, 0, 1);
    const auto snapshot = p;
    adagrad_step(p, zero, 0.5, 1e-8);
    CHECK(p == snapshot);
}

TEST_CASE("validations happen every validate_every epochs and the best checkpoint is returned") {
    const auto split = tiny_positive_split();
    TrainConfig c;
    c.max_iter = 40;
    c.validate_every = 7;
    c.batch_count = 3;
    c.seed = 5;
    std::vector<std::size_t> epochs;
    const auto res = train(split, ModelKind::complex(), 3, c, [&](std::size_t e, double) { epochs.push_back(e); });
    REQUIRE(!epochs.empty());
    for (std::size_t i = 0; i < epochs.size(); ++i) CHECK(epochs[i] == 7 * (i + 1));
    CHECK(res.report.metric == ValidationMetric::FilteredMRR);
    if (res.report.best_epoch) {
        const auto best = std::find_if(res.report.history.begin(), res.report.history.end(),
                                       [&](const auto& h) { return h.first == *res.report.best_epoch; });
        REQUIRE(best != res.report.history.end());
        const double rerun = ranking_metrics(res.params, split.valid, split.all_known_positives).mrr_filtered;
        CHECK(rerun == best->second);
    }
    if (res.report.stop_reason == StopReason::EarlyStop) {
        const auto& h = res.report.history;
        REQUIRE(h.size() >= 2);
        CHECK(h.back().second <= h[h.size() - 2].second);
    }
}

TEST_CASE("training is deterministic under the seed") {
    const auto split = tiny_positive_split();
    TrainConfig c;
    c.max_iter = 20;
    c.validate_every = 5;
    c.batch_count = 4;
    c.seed = 21;
    for (const auto& kind : test::all_kinds()) {
        const auto a = train(split, kind, 3, c), b = train(split, kind, 3, c);
        CHECK(a.params == b.params);
        CHECK(a.report.history == b.report.history);
        CHECK(a.report.epoch_loss == b.report.epoch_loss);
    }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    const auto split = tiny_positive_split();
    TrainConfig c;
    c.alpha = 0.0;
    c.max_iter = 10;
    c.validate_every = 100;
    c.seed = 1;
    const auto init = init_parameters(ModelKind::complex(), 6, 1, 2, 4);
    const auto res = train(split, init, c);
    for (Block b : kAllBlocks)
        if (init.has(b)) CHECK(res.params.param(b) == init.param(b));
}

TEST_CASE("accumulators never decrease") {
    const auto split = tiny_positive_split();
    TrainConfig c;
    c.max_iter = 1;
    c.validate_every = 100;
    c.seed = 2;
    auto params = init_parameters(ModelKind::complex(), 6, 1, 2, 4);
    for (int round = 0; round < 5; ++round) {
        c.seed = static_cast<std::uint64_t>(round);
        auto next = train(split, params, c).params;
        for (Block b : kAllBlocks)
            if (params.has(b))
                for (std::size_t i = 0; i < params.accumulator(b).size(); ++i)
                    CHECK(next.accumulator(b).values()[i] >= params.accumulator(b).values()[i]);
        params = std::move(next);
    }
}

TEST_CASE("small steps decrease the regularized objective over the first epoch") {
    const auto tensor = generate_synthetic(8, 3);
    auto split = tensor.split(0);
    split.valid.clear();
    TrainConfig c;
    c.alpha = 1e-3;
    c.lambda = 0.01;
    c.max_iter = 1;
    c.seed = 4;
    const auto init = init_parameters(ModelKind::complex(), 8, 2, 4, 12);
    const auto res = train(split, init, c);
    CHECK(regularized_objective(res.params, split.train, c.lambda) <
          regularized_objective(init, split.train, c.lambda));
}

TEST_CASE("invalid configurations and divergence are reported") {
    const auto split = tiny_positive_split();
    TrainConfig c;
    c.eta = 0;
    CHECK_THROWS_AS(train(split, ModelKind::complex(), 2, c), std::invalid_argument);
    c = {};
    c.validate_every = 0;
    CHECK_THROWS_AS(train(split, ModelKind::complex(), 2, c), std::invalid_argument);
    c = {};
    c.alpha = -1.0;
    CHECK_THROWS_AS(train(split, ModelKind::complex(), 2, c), std::invalid_argument);
    DatasetSplit empty;
    empty.vocabulary.add_entity("a");
    empty.vocabulary.add_relation("r");
    CHECK_THROWS_AS(train(empty, ModelKind::complex(), 2, TrainConfig{}), std::invalid_argument);

    auto blowup = init_parameters(ModelKind::distmult(), 6, 1, 2, 1);
    for (double& v : blowup.param(Block::EntRe).values()) v = 1e200;
    TrainConfig d;
    d.max_iter = 1;
    CHECK_THROWS_AS(train(split, blowup, d), DivergenceError);
}

TEST_CASE("max-margin TransE keeps touched entities in the unit ball") {
    auto split = tiny_positive_split();
    split.valid.clear();
    TrainConfig c;
    c.loss = LossKind::MaxMargin;
    c.max_iter = 5;
    c.seed = 3;
    const auto res = train(split, ModelKind::transe(2, 1.0), 4, c);
    for (EntityId e = 0; e < 6; ++e) {
        double norm = 0.0;
        for (double v : res.params.param(Block::EntRe).row(e)) norm += v * v;
        CHECK(std::sqrt(norm) <= 1.0 + 1e-12);
    }
}
