#pragma once

#include "ckg/matrix.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace ckg {

enum class ModelType { ComplEx, DistMult, CP, TransE, RESCAL };

std::string_view to_string(ModelType type);
ModelType parse_model_type(std::string_view name);

/// Which scoring function governs score and gradient. TransE additionally
/// carries the norm order p in {1, 2} and a positive margin.
class ModelKind {
public:
    static ModelKind complex() { return ModelKind(ModelType::ComplEx); }
    static ModelKind distmult() { return ModelKind(ModelType::DistMult); }
    static ModelKind cp() { return ModelKind(ModelType::CP); }
    static ModelKind rescal() { return ModelKind(ModelType::RESCAL); }
    static ModelKind transe(int p = 2, double margin = 1.0);

    /// Non-TransE kinds only.
    explicit ModelKind(ModelType type);

    ModelType type() const noexcept { return type_; }
    bool is_transe() const noexcept { return type_ == ModelType::TransE; }
    int norm_order() const;  // TransE only
    double margin() const;   // TransE only

    std::string describe() const;

    friend bool operator==(const ModelKind&, const ModelKind&) = default;

private:
    ModelKind(ModelType type, int p, double margin);

    ModelType type_;
    std::optional<int> p_;
    std::optional<double> margin_;
};

/// Parameter matrices a model may own. Complex embeddings live in paired real
/// matrices (EntRe/EntIm, RelRe/RelIm). RelMat stores each K x K RESCAL relation
/// matrix as one row of length K*K, row-major.
enum class Block : std::uint8_t { EntRe = 0, EntIm, RelRe, RelIm, ObjEnt, RelMat };
inline constexpr std::size_t kBlockCount = 6;
inline constexpr std::array<Block, kBlockCount> kAllBlocks = {Block::EntRe,  Block::EntIm, Block::RelRe,
                                                              Block::RelIm, Block::ObjEnt, Block::RelMat};
std::string_view to_string(Block b);

/// Whether a model type owns block `b`.
bool block_used_by(ModelType type, Block b);

class ParameterSet {
public:
    ParameterSet(ModelKind kind, std::size_t n_entities, std::size_t n_relations, std::size_t rank);

    const ModelKind& kind() const noexcept { return kind_; }
    ModelType type() const noexcept { return kind_.type(); }
    std::size_t entity_count() const noexcept { return n_; }
    std::size_t relation_count() const noexcept { return m_; }
    std::size_t rank() const noexcept { return k_; }

    bool has(Block b) const noexcept { return params_[index(b)].has_value(); }
    RealMatrix& param(Block b);
    const RealMatrix& param(Block b) const;
    RealMatrix& accumulator(Block b);
    const RealMatrix& accumulator(Block b) const;

    /// Row width of a block: K, or K*K for RelMat.
    std::size_t width(Block b) const noexcept { return b == Block::RelMat ? k_ * k_ : k_; }

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    static std::size_t index(Block b) noexcept { return static_cast<std::size_t>(b); }

    ModelKind kind_;
    std::size_t n_;
    std::size_t m_;
    std::size_t k_;
    std::array<std::optional<RealMatrix>, kBlockCount> params_;
    std::array<std::optional<RealMatrix>, kBlockCount> accumulators_;
};

/// Every parameter entry i.i.d. standard normal; accumulators zero.
ParameterSet init_parameters(const ModelKind& kind, std::size_t n, std::size_t m, std::size_t rank,
                             std::uint64_t seed);

/// Sum of squared entries over all parameter matrices (not accumulators). For
/// complex blocks this equals the sum of squared moduli.
double l2_norm_squared(const ParameterSet& params);

bool all_finite(const ParameterSet& params);

/// Binary model file. A single text header line
///   CKGMODEL <version> <kind> <n> <m> <K> [<p> <margin>]\n
/// (margin in shortest round-trip decimal) is followed by one section per present
/// parameter block in Block order, then one per accumulator in the same order.
/// A section is a descriptor of three little-endian uint64 (block id, rows, cols)
/// followed by rows*cols little-endian IEEE-754 doubles, row-major. The header
/// fixes the expected shapes; a descriptor that disagrees is a ShapeError.
inline constexpr int kModelFormatVersion = 1;

void save_parameters(const ParameterSet& params, std::ostream& out);
void save_parameters(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_parameters(std::istream& in);
ParameterSet load_parameters(const std::filesystem::path& path);

}  // namespace ckg
