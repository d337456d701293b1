#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ckg/scoring.hpp"
#include "support.hpp"

using namespace ckg;
using ckg::test::Gen;

namespace {

// K = 1, e_0 = 1 - 2i, e_1 = -3 + i, relation 0 has w = 1, relation 1 has w = i.
ParameterSet two_entity_example() {
    ParameterSet p(ModelKind::complex(), 2, 2, 1);
    p.param(Block::EntRe)(0, 0) = 1.0;
    p.param(Block::EntIm)(0, 0) = -2.0;
    p.param(Block::EntRe)(1, 0) = -3.0;
    p.param(Block::EntIm)(1, 0) = 1.0;
    p.param(Block::RelRe)(0, 0) = 1.0;
    p.param(Block::RelIm)(1, 0) = 1.0;
    return p;
}

}  // namespace

TEST_CASE("ComplEx on the two-entity example") {
    const auto p = two_entity_example();
    // Re((1-2i) * conj(-3+i)) = Re((1-2i)(-3-i)) = Re(-3 - i + 6i + 2i^2) = -5
    CHECK(score(p, 0, 0, 1) == -5.0);
    CHECK(score(p, 0, 1, 0) == -5.0);
    // Re(i (1-2i)(-3-i)) = Re(i (-5 + 5i)) = -5, and the swap flips the sign.
    CHECK(score(p, 1, 0, 1) == -5.0);
    CHECK(score(p, 1, 1, 0) == 5.0);

    const auto g = score_gradient(p, 0, 0, 1);
    const auto* w = g.find(Block::RelRe, 0);
    REQUIRE(w != nullptr);
    CHECK(w->values[0] == -5.0);
}

TEST_CASE("zero parameters score zero with zero gradients") {
    for (const auto& kind : test::all_kinds()) {
        const ParameterSet p(kind, 3, 2, 4);
        CHECK(score(p, 1, 0, 2) == 0.0);
        if (kind.is_transe()) continue;
        const auto grad = score_gradient(p, 1, 0, 2);
        for (const auto& row : grad.rows())
            for (double v : row.values) CHECK(v == 0.0);
    }
}

TEST_CASE("out of range ids are rejected") {
    const ParameterSet p(ModelKind::distmult(), 3, 2, 2);
    CHECK_THROWS_AS(score(p, 2, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(score(p, 0, 3, 0), std::out_of_range);
    CHECK_THROWS_AS(score_gradient(p, 0, 0, 3), std::out_of_range);
}

TEST_CASE("property: every model matches the textbook scoring oracle") {
    Gen g(101);
    for (const auto& kind : test::all_kinds())
        for (int trial = 0; trial < 50; ++trial) {
            const auto p = g.params(kind, 6, 3, g.index(1, 8));
            const auto t = g.triple(p);
            CHECK(score(p, t.r, t.s, t.o) == doctest::Approx(test::oracle_score(p, t.r, t.s, t.o)).epsilon(1e-12));
        }
}

TEST_CASE("property: expanded ComplEx form equals explicit complex arithmetic") {
    Gen g(202);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = g.params(ModelKind::complex(), 5, 2, g.index(1, 16));
        const auto t = g.triple(p);
        CHECK(std::abs(score(p, t.r, t.s, t.o) - complex_score_reference(p, t.r, t.s, t.o)) <= 1e-12);
    }
}

TEST_CASE("property: symmetry and antisymmetry of ComplEx and DistMult") {
    Gen g(303);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = g.params(ModelKind::complex(), 5, 1, 4);
        const auto s = static_cast<EntityId>(g.index(0, 4)), o = static_cast<EntityId>(g.index(0, 4));
        auto sym = p;
        for (double& v : sym.param(Block::RelIm).values()) v = 0.0;
        CHECK(std::abs(score(sym, 0, s, o) - score(sym, 0, o, s)) <= 1e-12);
        auto anti = p;
        for (double& v : anti.param(Block::RelRe).values()) v = 0.0;
        CHECK(std::abs(score(anti, 0, s, o) + score(anti, 0, o, s)) <= 1e-12);

        const auto d = g.params(ModelKind::distmult(), 5, 1, 4);
        // Products reassociate, so equality holds up to rounding.
        CHECK(std::abs(score(d, 0, s, o) - score(d, 0, o, s)) <= 1e-12);
    }
}

TEST_CASE("property: analytic gradients match central differences") {
    Gen g(404);
    const double h = 1e-6;
    for (const auto& kind : test::all_kinds()) {
        INFO(kind.describe());
        for (int trial = 0; trial < 100; ++trial) {
            auto p = g.params(kind, 5, 3, 8);
            auto t = g.triple(p);
            if (trial % 10 == 0) t.o = t.s;  // merged subject/object rows
            const auto grad = score_gradient(p, t.r, t.s, t.o);
            for (Block b : kAllBlocks) {
                if (!p.has(b)) continue;
                for (std::size_t row = 0; row < p.param(b).rows(); ++row) {
                    const auto* gr = grad.find(b, static_cast<std::uint32_t>(row));
                    for (std::size_t col = 0; col < p.param(b).cols(); ++col) {
                        const double fd = test::central_difference(p, b, row, col, h, [&](const ParameterSet& q) {
                            return test::oracle_score(q, t.r, t.s, t.o);
                        });
                        const double analytic = gr ? gr->values[col] : 0.0;
                        CHECK(test::relative_error(analytic, fd) <= 1e-6);
                    }
                }
            }
        }
    }
}

TEST_CASE("gradient touches only the rows of the scored triple") {
    Gen g(505);
    for (const auto& kind : test::all_kinds()) {
        const auto p = g.params(kind, 8, 3, 3);
        const auto grad = score_gradient(p, 2, 1, 6);
        for (const auto& row : grad.rows()) {
            const bool relation_block = row.block == Block::RelRe || row.block == Block::RelIm ||
                                        row.block == Block::RelMat;
            if (relation_block)
                CHECK(row.row == 2);
            else
                CHECK((row.row == 1 || row.row == 6));
            CHECK(row.values.size() == p.width(row.block));
        }
    }
}

TEST_CASE("TransE with p = 1 uses sign(0) = 0") {
    ParameterSet p(ModelKind::transe(1), 2, 1, 2);
    p.param(Block::EntRe)(0, 0) = 1.0;  // residual (1, 0) - (0, 0)
    const auto grad = score_gradient(p, 0, 0, 1);
    const auto* w = grad.find(Block::RelRe, 0);
    REQUIRE(w != nullptr);
    CHECK(w->values[0] == -1.0);
    CHECK(w->values[1] == 0.0);
}

TEST_CASE("sigmoid is stable at the extremes") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(-800.0) < 1e-300);
}
