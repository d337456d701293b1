#pragma once

#include "ckg/embedding.hpp"
#include "ckg/matrix.hpp"

#include <cstddef>
#include <vector>

namespace ckg {

/// Relation embeddings as rows: [w' | w''] (m x 2K) for ComplEx, the flattened
/// K x K matrix for RESCAL, w (m x K) otherwise.
RealMatrix relation_embedding_matrix(const ParameterSet& params);

struct PcaProjection {
    RealMatrix coordinates;           // rows x components
    std::vector<double> variances;    // eigenvalues of the covariance, descending
    RealMatrix axes;                  // dims x components, unit columns
};

/// Centers the rows (no scaling) and projects onto the top principal axes of the
/// covariance. Throws std::invalid_argument when components exceeds the column count.
PcaProjection principal_components(const RealMatrix& data, std::size_t components);

}  // namespace ckg
