#include "ckg/embedding.hpp"

#include "ckg/errors.hpp"

#include <algorithm>
#include <cctype>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ckg {

double frobenius_norm(const RealMatrix& m) {
    double sum = 0.0;
    for (double v : m.values()) sum += v * v;
    return std::sqrt(sum);
}

std::string_view to_string(ModelType type) {
    switch (type) {
        case ModelType::ComplEx: return "complex";
        case ModelType::DistMult: return "distmult";
        case ModelType::CP: return "cp";
        case ModelType::TransE: return "transe";
        case ModelType::RESCAL: return "rescal";
    }
    return "?";
}

ModelType parse_model_type(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (auto t : {ModelType::ComplEx, ModelType::DistMult, ModelType::CP, ModelType::TransE, ModelType::RESCAL})
        if (lower == to_string(t)) return t;
    throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

ModelKind::ModelKind(ModelType type) : type_(type) {
    if (type == ModelType::TransE) throw std::invalid_argument("TransE needs a norm order and margin");
}

ModelKind::ModelKind(ModelType type, int p, double margin) : type_(type), p_(p), margin_(margin) {}

ModelKind ModelKind::transe(int p, double margin) {
    if (p != 1 && p != 2) throw std::invalid_argument("TransE norm order must be 1 or 2");
    if (!(margin > 0.0) || !std::isfinite(margin)) throw std::invalid_argument("TransE margin must be positive");
    return ModelKind(ModelType::TransE, p, margin);
}

int ModelKind::norm_order() const {
    if (!p_) throw std::logic_error("norm order is defined for TransE only");
    return *p_;
}

double ModelKind::margin() const {
    if (!margin_) throw std::logic_error("margin is defined for TransE only");
    return *margin_;
}

std::string ModelKind::describe() const {
    std::string out(to_string(type_));
    if (is_transe()) {
        std::ostringstream s;
        s << " (p=" << *p_ << ", margin=" << *margin_ << ")";
        out += s.str();
    }
    return out;
}

std::string_view to_string(Block b) {
    switch (b) {
        case Block::EntRe: return "ent_re";
        case Block::EntIm: return "ent_im";
        case Block::RelRe: return "rel_re";
        case Block::RelIm: return "rel_im";
        case Block::ObjEnt: return "obj_ent";
        case Block::RelMat: return "rel_mat";
    }
    return "?";
}

bool block_used_by(ModelType type, Block b) {
    switch (b) {
        case Block::EntRe: return true;
        case Block::EntIm:
        case Block::RelIm: return type == ModelType::ComplEx;
        case Block::RelRe: return type != ModelType::RESCAL;
        case Block::ObjEnt: return type == ModelType::CP;
        case Block::RelMat: return type == ModelType::RESCAL;
    }
    return false;
}

ParameterSet::ParameterSet(ModelKind kind, std::size_t n_entities, std::size_t n_relations, std::size_t rank)
    : kind_(kind), n_(n_entities), m_(n_relations), k_(rank) {
    if (n_ == 0 || m_ == 0 || k_ == 0) throw std::invalid_argument("ParameterSet: n, m and K must be positive");
    for (Block b : kAllBlocks) {
        if (!block_used_by(kind_.type(), b)) continue;
        const bool entity_block = b == Block::EntRe || b == Block::EntIm || b == Block::ObjEnt;
        const std::size_t rows = entity_block ? n_ : m_;
        params_[index(b)].emplace(rows, width(b));
        accumulators_[index(b)].emplace(rows, width(b));
    }
}

RealMatrix& ParameterSet::param(Block b) {
    if (!has(b)) throw std::logic_error(std::string(to_string(kind_.type())) + " has no " + std::string(to_string(b)));
    return *params_[index(b)];
}

const RealMatrix& ParameterSet::param(Block b) const { return const_cast<ParameterSet*>(this)->param(b); }

RealMatrix& ParameterSet::accumulator(Block b) {
    if (!has(b)) throw std::logic_error(std::string(to_string(kind_.type())) + " has no " + std::string(to_string(b)));
    return *accumulators_[index(b)];
}

const RealMatrix& ParameterSet::accumulator(Block b) const {
    return const_cast<ParameterSet*>(this)->accumulator(b);
}

ParameterSet init_parameters(const ModelKind& kind, std::size_t n, std::size_t m, std::size_t rank,
                             std::uint64_t seed) {
    ParameterSet params(kind, n, m, rank);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Block b : kAllBlocks) {
        if (!params.has(b)) continue;
        for (double& v : params.param(b).values()) v = normal(rng);
    }
    return params;
}

double l2_norm_squared(const ParameterSet& params) {
    double sum = 0.0;
    for (Block b : kAllBlocks) {
        if (!params.has(b)) continue;
        for (double v : params.param(b).values()) sum += v * v;
    }
    return sum;
}

bool all_finite(const ParameterSet& params) {
    for (Block b : kAllBlocks) {
        if (!params.has(b)) continue;
        for (double v : params.param(b).values())
            if (!std::isfinite(v)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::string_view kMagic = "CKGMODEL";

template <class T>
T to_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

void write_u64(std::ostream& out, std::uint64_t v) {
    v = to_little_endian(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_section(std::ostream& out, Block b, const RealMatrix& m) {
    write_u64(out, static_cast<std::uint64_t>(b));
    write_u64(out, m.rows());
    write_u64(out, m.cols());
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(m.values().data()),
                  static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else {
        for (double v : m.values()) {
            double le = to_little_endian(v);
            out.write(reinterpret_cast<const char*>(&le), sizeof le);
        }
    }
}

void read_exact(std::istream& in, void* dst, std::size_t bytes, std::string_view what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes)
        throw TruncatedError("model file truncated while reading " + std::string(what));
}

std::uint64_t read_u64(std::istream& in, std::string_view what) {
    std::uint64_t v = 0;
    read_exact(in, &v, sizeof v, what);
    return to_little_endian(v);
}

void read_section(std::istream& in, Block expected, RealMatrix& dst, std::string_view role) {
    const std::string what = std::string(role) + " " + std::string(to_string(expected));
    const auto id = read_u64(in, what);
    const auto rows = read_u64(in, what);
    const auto cols = read_u64(in, what);
    if (id != static_cast<std::uint64_t>(expected))
        throw ShapeError("expected section " + what + ", found block id " + std::to_string(id));
    if (rows != dst.rows() || cols != dst.cols())
        throw ShapeError(what + " holds " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " but the header implies " + std::to_string(dst.rows()) + "x" +
                         std::to_string(dst.cols()));
    read_exact(in, dst.values().data(), dst.size() * sizeof(double), what);
    if constexpr (std::endian::native != std::endian::little)
        for (double& v : dst.values()) v = to_little_endian(v);
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace

void save_parameters(const ParameterSet& params, std::ostream& out) {
    out << kMagic << ' ' << kModelFormatVersion << ' ' << to_string(params.type()) << ' ' << params.entity_count()
        << ' ' << params.relation_count() << ' ' << params.rank();
    if (params.kind().is_transe())
        out << ' ' << params.kind().norm_order() << ' ' << format_double(params.kind().margin());
    out << '\n';
    for (Block b : kAllBlocks)
        if (params.has(b)) write_section(out, b, params.param(b));
    for (Block b : kAllBlocks)
        if (params.has(b)) write_section(out, b, params.accumulator(b));
    if (!out) throw std::runtime_error("failed writing model");
}

void save_parameters(const ParameterSet& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    save_parameters(params, out);
}

ParameterSet load_parameters(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw TruncatedError("model file is empty");
    if (in.eof()) throw TruncatedError("model header is not newline-terminated");

    std::istringstream fields(header);
    std::string magic, kind_name;
    int version = 0;
    std::size_t n = 0, m = 0, k = 0;
    if (!(fields >> magic) || magic != kMagic) throw FormatError("not a model file (bad magic)");
    if (!(fields >> version)) throw FormatError("model header lacks a version");
    if (version != kModelFormatVersion)
        throw FormatError("model format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kModelFormatVersion) + ")");
    if (!(fields >> kind_name >> n >> m >> k)) throw FormatError("model header is incomplete");

    const ModelType type = parse_model_type(kind_name);
    std::optional<ModelKind> kind;
    if (type == ModelType::TransE) {
        int p = 0;
        std::string margin_text;
        if (!(fields >> p >> margin_text)) throw FormatError("TransE header lacks p and margin");
        double margin = 0.0;
        auto [end, ec] = std::from_chars(margin_text.data(), margin_text.data() + margin_text.size(), margin);
        if (ec != std::errc{} || end != margin_text.data() + margin_text.size())
            throw FormatError("bad TransE margin '" + margin_text + "'");
        kind = ModelKind::transe(p, margin);
    } else {
        kind = ModelKind(type);
    }
    std::string extra;
    if (fields >> extra) throw FormatError("unexpected trailing header field '" + extra + "'");
    if (n == 0 || m == 0 || k == 0) throw ShapeError("model header has a zero dimension");

    ParameterSet params(*kind, n, m, k);
    for (Block b : kAllBlocks)
        if (params.has(b)) read_section(in, b, params.param(b), "parameter");
    for (Block b : kAllBlocks)
        if (params.has(b)) read_section(in, b, params.accumulator(b), "accumulator");
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after model payload");
    return params;
}

ParameterSet load_parameters(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load_parameters(in);
}

}  // namespace ckg
