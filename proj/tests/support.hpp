#pragma once

// Reference oracles and random generators shared by the unit and acceptance
// tests. Oracles deliberately avoid the library's own scoring and ranking code.

#include "ckg/embedding.hpp"
#include "ckg/evaluation.hpp"
#include "ckg/kg_data.hpp"
#include "ckg/matrix.hpp"
#include "ckg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace ckg::test {

// ---------------------------------------------------------------------------
// Generators

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive range
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    int small_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

    RealMatrix matrix(std::size_t rows, std::size_t cols) {
        RealMatrix m(rows, cols);
        for (double& v : m.values()) v = normal();
        return m;
    }

    ParameterSet params(const ModelKind& kind, std::size_t n, std::size_t m, std::size_t k) {
        return init_parameters(kind, n, m, k, rng_());
    }

    LabeledTriple triple(const ParameterSet& p) {
        return {static_cast<RelationId>(index(0, p.relation_count() - 1)),
                static_cast<EntityId>(index(0, p.entity_count() - 1)),
                static_cast<EntityId>(index(0, p.entity_count() - 1)), coin() ? 1 : -1};
    }

private:
    std::mt19937_64 rng_;
};

inline ModelKind kind_of(ModelType t) { return t == ModelType::TransE ? ModelKind::transe() : ModelKind(t); }

inline const std::vector<ModelKind>& all_kinds() {
    static const std::vector<ModelKind> kinds = {ModelKind::complex(), ModelKind::distmult(), ModelKind::cp(),
                                                 ModelKind::rescal(),  ModelKind::transe(2), ModelKind::transe(1)};
    return kinds;
}

// ---------------------------------------------------------------------------
// Scoring oracle: textbook form of every model, complex arithmetic for ComplEx.

inline double oracle_score(const ParameterSet& p, RelationId r, EntityId s, EntityId o) {
    const std::size_t K = p.rank();
    const auto& E = p.param(Block::EntRe);
    switch (p.type()) {
        case ModelType::ComplEx: {
            const auto& Ei = p.param(Block::EntIm);
            const auto& W = p.param(Block::RelRe);
            const auto& Wi = p.param(Block::RelIm);
            std::complex<double> acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const std::complex<double> w(W(r, k), Wi(r, k)), es(E(s, k), Ei(s, k)), eo(E(o, k), Ei(o, k));
                acc += w * es * std::conj(eo);
            }
            return acc.real();
        }
        case ModelType::DistMult: {
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) acc += p.param(Block::RelRe)(r, k) * E(s, k) * E(o, k);
            return acc;
        }
        case ModelType::CP: {
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k)
                acc += p.param(Block::RelRe)(r, k) * E(s, k) * p.param(Block::ObjEnt)(o, k);
            return acc;
        }
        case ModelType::RESCAL: {
            double acc = 0.0;
            for (std::size_t i = 0; i < K; ++i)
                for (std::size_t j = 0; j < K; ++j) acc += E(s, i) * p.param(Block::RelMat)(r, i * K + j) * E(o, j);
            return acc;
        }
        case ModelType::TransE: {
            const int norm = p.kind().norm_order();
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double d = E(s, k) + p.param(Block::RelRe)(r, k) - E(o, k);
                acc += norm == 1 ? std::abs(d) : d * d;
            }
            return norm == 1 ? -acc : -std::sqrt(acc);
        }
    }
    return 0.0;
}

/// Central finite difference of `f` with respect to one parameter entry.
template <class F>
double central_difference(ParameterSet& p, Block b, std::size_t row, std::size_t col, double h, F&& f) {
    double& v = p.param(b)(row, col);
    const double saved = v;
    v = saved + h;
    const double plus = f(p);
    v = saved - h;
    const double minus = f(p);
    v = saved;
    return (plus - minus) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1.0});
}

// ---------------------------------------------------------------------------
// Ranking oracle: sort every candidate (test included) and average the
// 1-based positions of the test triple's tie group.

inline double oracle_rank(double test_score, const std::vector<double>& competitors) {
    std::vector<double> all = competitors;
    all.push_back(test_score);
    std::sort(all.begin(), all.end(), std::greater<>());
    double first = 0.0, last = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i] == test_score) {
            if (!found) first = static_cast<double>(i + 1);
            last = static_cast<double>(i + 1);
            found = true;
        }
    // Competitors in the tie group count half each; the test itself sits at the top of it.
    const double tied_competitors = last - first;
    return first + tied_competitors / 2.0;
}

inline TripleRanks oracle_ranks(const ParameterSet& p, const LabeledTriple& t, const TripleSet* known) {
    const double ref = oracle_score(p, t.r, t.s, t.o);
    std::vector<double> subj, obj;
    for (EntityId e = 0; e < p.entity_count(); ++e) {
        if (e != t.s && !(known && known->contains({t.r, e, t.o}))) subj.push_back(oracle_score(p, t.r, e, t.o));
        if (e != t.o && !(known && known->contains({t.r, t.s, e}))) obj.push_back(oracle_score(p, t.r, t.s, e));
    }
    return {oracle_rank(ref, subj), oracle_rank(ref, obj)};
}

// ---------------------------------------------------------------------------
// Average precision oracle: step integration of the precision-recall curve.

inline double oracle_average_precision(const std::vector<ScoredLabel>& items) {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Insertion sort keeps the input order among equal scores.
    for (std::size_t i = 1; i < order.size(); ++i)
        for (std::size_t j = i; j > 0 && items[order[j - 1]].score < items[order[j]].score; --j)
            std::swap(order[j - 1], order[j]);
    double positives = 0.0;
    for (const auto& it : items) positives += it.label > 0;
    double area = 0.0, prev_recall = 0.0, tp = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        tp += items[order[k]].label > 0;
        const double precision = tp / static_cast<double>(k + 1);
        const double recall = tp / positives;
        area += precision * (recall - prev_recall);
        prev_recall = recall;
    }
    return area;
}

// ---------------------------------------------------------------------------
// Dense complex helpers with std::complex, independent of ComplexMatrix.

using CMat = std::vector<std::vector<std::complex<double>>>;

inline CMat to_cmat(const RealMatrix& re, const RealMatrix& im) {
    CMat m(re.rows(), std::vector<std::complex<double>>(re.cols()));
    for (std::size_t i = 0; i < re.rows(); ++i)
        for (std::size_t j = 0; j < re.cols(); ++j) m[i][j] = {re(i, j), im(i, j)};
    return m;
}

inline CMat cmat_mul(const CMat& a, const CMat& b) {
    CMat c(a.size(), std::vector<std::complex<double>>(b.empty() ? 0 : b[0].size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < c[i].size(); ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline CMat cmat_adjoint(const CMat& a) {
    CMat c(a.empty() ? 0 : a[0].size(), std::vector<std::complex<double>>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) c[j][i] = std::conj(a[i][j]);
    return c;
}

inline double cmat_frobenius(const CMat& a) {
    double s = 0.0;
    for (const auto& row : a)
        for (const auto& v : row) s += std::norm(v);
    return std::sqrt(s);
}

inline CMat cmat_sub(const CMat& a, const CMat& b) {
    CMat c = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) c[i][j] -= b[i][j];
    return c;
}

inline double real_frobenius(const RealMatrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v * v;
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ckg-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace ckg::test
