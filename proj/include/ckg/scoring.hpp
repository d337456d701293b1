#pragma once

#include "ckg/embedding.hpp"
#include "ckg/kg_data.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ckg {

/// Partial derivatives for one parameter row.
struct GradientRow {
    Block block;
    std::uint32_t row;
    std::vector<double> values;  // length K, or K*K for RelMat
};

/// Gradient of one triple's score: only the rows the triple touches. A row
/// appears at most once (subject == object contributions are merged).
class SparseGradient {
public:
    void clear() noexcept { used_ = 0; }
    std::span<GradientRow> rows() noexcept { return {rows_.data(), used_}; }
    std::span<const GradientRow> rows() const noexcept { return {rows_.data(), used_}; }
    std::size_t size() const noexcept { return used_; }

    /// Returns the zero-initialized or existing row for (block, row).
    GradientRow& row(Block block, std::uint32_t row, std::size_t width);

    const GradientRow* find(Block block, std::uint32_t row) const;

    void scale(double factor);

private:
    std::vector<GradientRow> rows_;
    std::size_t used_ = 0;
};

/// phi(r, s, o). Throws std::out_of_range for ids outside the parameter shapes.
double score(const ParameterSet& params, RelationId r, EntityId s, EntityId o);

/// ComplEx only: Re(sum_k w_k e_sk conj(e_ok)) evaluated with std::complex.
double complex_score_reference(const ParameterSet& params, RelationId r, EntityId s, EntityId o);

/// d phi / d(row) for every row touched by (r, s, o), written into `out`.
/// TransE with p = 1 uses sign(0) = 0; with p = 2 a zero residual yields a zero gradient.
void score_gradient(const ParameterSet& params, RelationId r, EntityId s, EntityId o, SparseGradient& out);
SparseGradient score_gradient(const ParameterSet& params, RelationId r, EntityId s, EntityId o);

void check_ids(const ParameterSet& params, RelationId r, EntityId s, EntityId o);

/// The logistic link 1 / (1 + exp(-x)), evaluated without overflow.
double sigmoid(double x);

}  // namespace ckg
