#include "ckg/pca.hpp"

#include "ckg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ckg {

RealMatrix relation_embedding_matrix(const ParameterSet& params) {
    const std::size_t m = params.relation_count();
    if (params.type() == ModelType::RESCAL) return params.param(Block::RelMat);
    const auto& re = params.param(Block::RelRe);
    if (params.type() != ModelType::ComplEx) return re;
    const auto& im = params.param(Block::RelIm);
    const std::size_t K = params.rank();
    RealMatrix out(m, 2 * K);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t k = 0; k < K; ++k) {
            out(r, k) = re(r, k);
            out(r, K + k) = im(r, k);
        }
    return out;
}

PcaProjection principal_components(const RealMatrix& data, std::size_t components) {
    const std::size_t rows = data.rows(), dims = data.cols();
    if (components == 0) throw std::invalid_argument("PCA: at least one component is required");
    if (components > dims)
        throw std::invalid_argument("PCA: " + std::to_string(components) + " components requested but the data has " +
                                    std::to_string(dims) + " dimensions");
    if (rows == 0) throw std::invalid_argument("PCA: no rows");

    std::vector<double> mean(dims, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < dims; ++j) mean[j] += data(i, j);
    for (double& v : mean) v /= static_cast<double>(rows);
    RealMatrix centered(rows, dims);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < dims; ++j) centered(i, j) = data(i, j) - mean[j];

    RealMatrix cov = centered.transposed() * centered;
    const double denom = rows > 1 ? static_cast<double>(rows - 1) : 1.0;
    for (double& v : cov.values()) v /= denom;
    // Exact symmetry keeps the Hermitian solver's input clean.
    for (std::size_t i = 0; i < dims; ++i)
        for (std::size_t j = i + 1; j < dims; ++j) cov(j, i) = cov(i, j);

    const auto eig = jacobi_hermitian(ComplexMatrix::from_real(cov));

    PcaProjection out{RealMatrix(rows, components), {}, RealMatrix(dims, components)};
    for (std::size_t c = 0; c < components; ++c) {
        out.variances.push_back(std::max(0.0, eig.values[c]));
        // The covariance is real, so each eigenvector is real up to a global phase.
        std::size_t pivot = 0;
        for (std::size_t j = 1; j < dims; ++j)
            if (std::abs(eig.vectors(j, c)) > std::abs(eig.vectors(pivot, c))) pivot = j;
        const Complex phase = std::abs(eig.vectors(pivot, c)) > 0.0
                                  ? std::conj(eig.vectors(pivot, c)) / std::abs(eig.vectors(pivot, c))
                                  : Complex(1.0);
        double norm = 0.0;
        for (std::size_t j = 0; j < dims; ++j) {
            out.axes(j, c) = (eig.vectors(j, c) * phase).real();
            norm += out.axes(j, c) * out.axes(j, c);
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < dims; ++j) out.axes(j, c) /= norm;
    }
    out.coordinates = centered * out.axes;
    return out;
}

}  // namespace ckg
