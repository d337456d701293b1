#include "ckg/scoring.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace ckg {

GradientRow& SparseGradient::row(Block block, std::uint32_t row, std::size_t width) {
    for (std::size_t i = 0; i < used_; ++i)
        if (rows_[i].block == block && rows_[i].row == row) return rows_[i];
    if (used_ == rows_.size()) rows_.push_back({});
    GradientRow& g = rows_[used_++];
    g.block = block;
    g.row = row;
    g.values.assign(width, 0.0);
    return g;
}

const GradientRow* SparseGradient::find(Block block, std::uint32_t row) const {
    for (const auto& g : rows())
        if (g.block == block && g.row == row) return &g;
    return nullptr;
}

void SparseGradient::scale(double factor) {
    for (auto& g : rows())
        for (double& v : g.values) v *= factor;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_ids(const ParameterSet& params, RelationId r, EntityId s, EntityId o) {
    if (r >= params.relation_count())
        throw std::out_of_range("relation id " + std::to_string(r) + " out of range [0, " +
                                std::to_string(params.relation_count()) + ")");
    if (s >= params.entity_count() || o >= params.entity_count())
        throw std::out_of_range("entity id out of range [0, " + std::to_string(params.entity_count()) + ")");
}

namespace {

double transe_norm(std::span<const double> es, std::span<const double> w, std::span<const double> eo, int p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < es.size(); ++k) {
        const double d = es[k] + w[k] - eo[k];
        acc += p == 1 ? std::abs(d) : d * d;
    }
    return p == 1 ? acc : std::sqrt(acc);
}

}  // namespace

double score(const ParameterSet& params, RelationId r, EntityId s, EntityId o) {
    check_ids(params, r, s, o);
    const std::size_t K = params.rank();
    switch (params.type()) {
        case ModelType::ComplEx: {
            const auto es_re = params.param(Block::EntRe).row(s);
            const auto es_im = params.param(Block::EntIm).row(s);
            const auto eo_re = params.param(Block::EntRe).row(o);
            const auto eo_im = params.param(Block::EntIm).row(o);
            const auto w_re = params.param(Block::RelRe).row(r);
            const auto w_im = params.param(Block::RelIm).row(r);
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k)
                acc += w_re[k] * (es_re[k] * eo_re[k] + es_im[k] * eo_im[k]) +
                       w_im[k] * (es_re[k] * eo_im[k] - es_im[k] * eo_re[k]);
            return acc;
        }
        case ModelType::DistMult: {
            const auto es = params.param(Block::EntRe).row(s);
            const auto eo = params.param(Block::EntRe).row(o);
            const auto w = params.param(Block::RelRe).row(r);
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) acc += w[k] * es[k] * eo[k];
            return acc;
        }
        case ModelType::CP: {
            const auto us = params.param(Block::EntRe).row(s);
            const auto vo = params.param(Block::ObjEnt).row(o);
            const auto w = params.param(Block::RelRe).row(r);
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) acc += w[k] * us[k] * vo[k];
            return acc;
        }
        case ModelType::RESCAL: {
            const auto es = params.param(Block::EntRe).row(s);
            const auto eo = params.param(Block::EntRe).row(o);
            const auto W = params.param(Block::RelMat).row(r);
            double acc = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                double inner = 0.0;
                for (std::size_t j = 0; j < K; ++j) inner += W[i * K + j] * eo[j];
                acc += es[i] * inner;
            }
            return acc;
        }
        case ModelType::TransE:
            return -transe_norm(params.param(Block::EntRe).row(s), params.param(Block::RelRe).row(r),
                                params.param(Block::EntRe).row(o), params.kind().norm_order());
    }
    throw std::logic_error("unhandled model type");
}

double complex_score_reference(const ParameterSet& params, RelationId r, EntityId s, EntityId o) {
    if (params.type() != ModelType::ComplEx) throw std::invalid_argument("complex_score_reference needs ComplEx");
    check_ids(params, r, s, o);
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < params.rank(); ++k) {
        const std::complex<double> w(params.param(Block::RelRe)(r, k), params.param(Block::RelIm)(r, k));
        const std::complex<double> es(params.param(Block::EntRe)(s, k), params.param(Block::EntIm)(s, k));
        const std::complex<double> eo(params.param(Block::EntRe)(o, k), params.param(Block::EntIm)(o, k));
        acc += w * es * std::conj(eo);
    }
    return acc.real();
}

void score_gradient(const ParameterSet& params, RelationId r, EntityId s, EntityId o, SparseGradient& out) {
    check_ids(params, r, s, o);
    out.clear();
    const std::size_t K = params.rank();
    switch (params.type()) {
        case ModelType::ComplEx: {
            const auto es_re = params.param(Block::EntRe).row(s);
            const auto es_im = params.param(Block::EntIm).row(s);
            const auto eo_re = params.param(Block::EntRe).row(o);
            const auto eo_im = params.param(Block::EntIm).row(o);
            const auto w_re = params.param(Block::RelRe).row(r);
            const auto w_im = params.param(Block::RelIm).row(r);
            // Row references may be invalidated by later row() calls; index each time.
            out.row(Block::EntRe, s, K);
            out.row(Block::EntIm, s, K);
            out.row(Block::EntRe, o, K);
            out.row(Block::EntIm, o, K);
            auto& gw_re = out.row(Block::RelRe, r, K).values;
            for (std::size_t k = 0; k < K; ++k) gw_re[k] = es_re[k] * eo_re[k] + es_im[k] * eo_im[k];
            auto& gw_im = out.row(Block::RelIm, r, K).values;
            for (std::size_t k = 0; k < K; ++k) gw_im[k] = es_re[k] * eo_im[k] - es_im[k] * eo_re[k];
            auto& gs_re = out.row(Block::EntRe, s, K).values;
            for (std::size_t k = 0; k < K; ++k) gs_re[k] += w_re[k] * eo_re[k] + w_im[k] * eo_im[k];
            auto& gs_im = out.row(Block::EntIm, s, K).values;
            for (std::size_t k = 0; k < K; ++k) gs_im[k] += w_re[k] * eo_im[k] - w_im[k] * eo_re[k];
            auto& go_re = out.row(Block::EntRe, o, K).values;
            for (std::size_t k = 0; k < K; ++k) go_re[k] += w_re[k] * es_re[k] - w_im[k] * es_im[k];
            auto& go_im = out.row(Block::EntIm, o, K).values;
            for (std::size_t k = 0; k < K; ++k) go_im[k] += w_re[k] * es_im[k] + w_im[k] * es_re[k];
            return;
        }
        case ModelType::DistMult: {
            const auto es = params.param(Block::EntRe).row(s);
            const auto eo = params.param(Block::EntRe).row(o);
            const auto w = params.param(Block::RelRe).row(r);
            out.row(Block::EntRe, s, K);
            out.row(Block::EntRe, o, K);
            auto& gw = out.row(Block::RelRe, r, K).values;
            for (std::size_t k = 0; k < K; ++k) gw[k] = es[k] * eo[k];
            auto& gs = out.row(Block::EntRe, s, K).values;
            for (std::size_t k = 0; k < K; ++k) gs[k] += w[k] * eo[k];
            auto& go = out.row(Block::EntRe, o, K).values;
            for (std::size_t k = 0; k < K; ++k) go[k] += w[k] * es[k];
            return;
        }
        case ModelType::CP: {
            const auto us = params.param(Block::EntRe).row(s);
            const auto vo = params.param(Block::ObjEnt).row(o);
            const auto w = params.param(Block::RelRe).row(r);
            out.row(Block::EntRe, s, K);
            out.row(Block::ObjEnt, o, K);
            auto& gw = out.row(Block::RelRe, r, K).values;
            for (std::size_t k = 0; k < K; ++k) gw[k] = us[k] * vo[k];
            auto& gu = out.row(Block::EntRe, s, K).values;
            for (std::size_t k = 0; k < K; ++k) gu[k] = w[k] * vo[k];
            auto& gv = out.row(Block::ObjEnt, o, K).values;
            for (std::size_t k = 0; k < K; ++k) gv[k] = w[k] * us[k];
            return;
        }
        case ModelType::RESCAL: {
            const auto es = params.param(Block::EntRe).row(s);
            const auto eo = params.param(Block::EntRe).row(o);
            const auto W = params.param(Block::RelMat).row(r);
            out.row(Block::EntRe, s, K);
            out.row(Block::EntRe, o, K);
            auto& gW = out.row(Block::RelMat, r, K * K).values;
            for (std::size_t i = 0; i < K; ++i)
                for (std::size_t j = 0; j < K; ++j) gW[i * K + j] = es[i] * eo[j];
            auto& gs = out.row(Block::EntRe, s, K).values;
            for (std::size_t i = 0; i < K; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < K; ++j) acc += W[i * K + j] * eo[j];
                gs[i] += acc;
            }
            auto& go = out.row(Block::EntRe, o, K).values;
            for (std::size_t j = 0; j < K; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < K; ++i) acc += es[i] * W[i * K + j];
                go[j] += acc;
            }
            return;
        }
        case ModelType::TransE: {
            const auto es = params.param(Block::EntRe).row(s);
            const auto eo = params.param(Block::EntRe).row(o);
            const auto w = params.param(Block::RelRe).row(r);
            const int p = params.kind().norm_order();
            std::vector<double> dir(K);
            for (std::size_t k = 0; k < K; ++k) {
                const double d = es[k] + w[k] - eo[k];
                dir[k] = p == 1 ? static_cast<double>((d > 0.0) - (d < 0.0)) : d;
            }
            if (p == 2) {
                double norm = 0.0;
                for (double d : dir) norm += d * d;
                norm = std::sqrt(norm);
                for (double& d : dir) d = norm > 0.0 ? d / norm : 0.0;
            }
            // phi = -||d||, d = e_s + w - e_o
            out.row(Block::EntRe, s, K);
            out.row(Block::EntRe, o, K);
            auto& gw = out.row(Block::RelRe, r, K).values;
            for (std::size_t k = 0; k < K; ++k) gw[k] = -dir[k];
            auto& gs = out.row(Block::EntRe, s, K).values;
            for (std::size_t k = 0; k < K; ++k) gs[k] += -dir[k];
            auto& go = out.row(Block::EntRe, o, K).values;
            for (std::size_t k = 0; k < K; ++k) go[k] += dir[k];
            return;
        }
    }
}

SparseGradient score_gradient(const ParameterSet& params, RelationId r, EntityId s, EntityId o) {
    SparseGradient g;
    score_gradient(params, r, s, o, g);
    return g;
}

}  // namespace ckg
