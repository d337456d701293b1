#include "ckg/spectral.hpp"

#include "ckg/errors.hpp"
#include "ckg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace ckg {

ComplexMatrix::ComplexMatrix(RealMatrix re, RealMatrix im) : re_(std::move(re)), im_(std::move(im)) {
    if (re_.rows() != im_.rows() || re_.cols() != im_.cols())
        throw std::invalid_argument("ComplexMatrix: real and imaginary parts differ in shape");
}

ComplexMatrix ComplexMatrix::from_real(const RealMatrix& re) { return {re, RealMatrix(re.rows(), re.cols())}; }

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix out(cols(), rows());
    for (std::size_t i = 0; i < rows(); ++i)
        for (std::size_t j = 0; j < cols(); ++j) out.set(j, i, std::conj((*this)(i, j)));
    return out;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("complex matrix product: inner dimensions differ");
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            Complex acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c.set(i, j, acc);
        }
    return c;
}

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
    return {a.re() - b.re(), a.im() - b.im()};
}

RealMatrix operator-(const RealMatrix& a, const RealMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("matrix difference: shapes differ");
    RealMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.values()[i] = a.values()[i] - b.values()[i];
    return c;
}

double frobenius_norm(const ComplexMatrix& m) {
    const double re = frobenius_norm(m.re());
    const double im = frobenius_norm(m.im());
    return std::sqrt(re * re + im * im);
}

ComplexMatrix UnitaryDiagonalization::reconstruct() const {
    const std::size_t n = E.rows();
    ComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc = 0.0;
            for (std::size_t k = 0; k < W.size(); ++k) acc += E(i, k) * W[k] * std::conj(E(j, k));
            out.set(i, j, acc);
        }
    return out;
}

double UnitaryDiagonalization::unitarity_residual() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < E.cols(); ++a)
        for (std::size_t b = 0; b < E.cols(); ++b) {
            Complex acc = 0.0;
            for (std::size_t i = 0; i < E.rows(); ++i) acc += std::conj(E(i, a)) * E(i, b);
            if (a == b) acc -= 1.0;
            worst = std::max(worst, std::abs(acc));
        }
    return worst;
}

RealMatrix real_part_reconstruction(const ComplexMatrix& E, std::span<const Complex> W) {
    if (W.size() != E.cols()) throw std::invalid_argument("reconstruction: eigenvalue count differs from columns");
    const std::size_t n = E.rows();
    RealMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc = 0.0;
            for (std::size_t k = 0; k < W.size(); ++k)
                if (W[k] != 0.0) acc += E(i, k) * W[k] * std::conj(E(j, k));
            out(i, j) = acc.real();
        }
    return out;
}

// ---------------------------------------------------------------------------
// Hermitian Jacobi

namespace {

// Square complex work matrix, row-major.
struct Work {
    std::size_t n = 0;
    std::vector<Complex> a;
    Complex& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    Complex operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

Work to_work(const ComplexMatrix& m) {
    Work w{m.rows(), std::vector<Complex>(m.rows() * m.cols())};
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) w(i, j) = m(i, j);
    return w;
}

double off_diagonal_norm(const Work& h) {
    double sum = 0.0;
    for (std::size_t i = 0; i < h.n; ++i)
        for (std::size_t j = 0; j < h.n; ++j)
            if (i != j) sum += std::norm(h(i, j));
    return std::sqrt(sum);
}

double frobenius(const Work& h) {
    double sum = 0.0;
    for (const auto& v : h.a) sum += std::norm(v);
    return std::sqrt(sum);
}

constexpr int kMaxSweeps = 100;
constexpr double kJacobiTolerance = 1e-12;

// Diagonalizes Hermitian h in place; u accumulates the rotations (u <- u V).
void jacobi_in_place(Work& h, Work& u) {
    const std::size_t n = h.n;
    const double scale = frobenius(h);
    for (std::size_t i = 0; i < n; ++i) h(i, i) = h(i, i).real();
    if (scale == 0.0) return;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_norm(h) <= kJacobiTolerance * scale) return;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex b = h(p, q);
                const double mag = std::abs(b);
                if (mag == 0.0) continue;
                const double a = h(p, p).real();
                const double d = h(q, q).real();
                const Complex phase = std::conj(b) / mag;  // e^{-i arg b}
                const double theta = (d - a) / (2.0 * mag);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // V = diag(1, phase) * [[c, s], [-s, c]]
                const Complex v_pp = c, v_pq = s, v_qp = -s * phase, v_qq = c * phase;

                for (std::size_t k = 0; k < n; ++k) {  // h <- h V
                    const Complex hkp = h(k, p), hkq = h(k, q);
                    h(k, p) = hkp * v_pp + hkq * v_qp;
                    h(k, q) = hkp * v_pq + hkq * v_qq;
                }
                for (std::size_t k = 0; k < n; ++k) {  // h <- V* h
                    const Complex hpk = h(p, k), hqk = h(q, k);
                    h(p, k) = std::conj(v_pp) * hpk + std::conj(v_qp) * hqk;
                    h(q, k) = std::conj(v_pq) * hpk + std::conj(v_qq) * hqk;
                }
                h(p, q) = 0.0;
                h(q, p) = 0.0;
                h(p, p) = h(p, p).real();
                h(q, q) = h(q, q).real();
                for (std::size_t k = 0; k < u.n; ++k) {
                    const Complex ukp = u(k, p), ukq = u(k, q);
                    u(k, p) = ukp * v_pp + ukq * v_qp;
                    u(k, q) = ukp * v_pq + ukq * v_qq;
                }
            }
    }
    if (off_diagonal_norm(h) > kJacobiTolerance * scale)
        throw SpectralError("Jacobi iteration did not converge in " + std::to_string(kMaxSweeps) + " sweeps");
}

Work identity_work(std::size_t n) {
    Work w{n, std::vector<Complex>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) w(i, i) = 1.0;
    return w;
}

void require_square(const ComplexMatrix& Z, std::string_view op) {
    if (!Z.is_square())
        throw SpectralError(std::string(op) + ": matrix is " + std::to_string(Z.rows()) + "x" +
                            std::to_string(Z.cols()) + ", not square");
}

void require_square(const RealMatrix& X, std::string_view op) {
    if (!X.is_square())
        throw SpectralError(std::string(op) + ": matrix is " + std::to_string(X.rows()) + "x" +
                            std::to_string(X.cols()) + ", not square");
}

void require_size(std::size_t n, std::string_view op) {
    if (n > kMaxSpectralSize)
        throw SpectralError(std::string(op) + ": n = " + std::to_string(n) + " exceeds the limit of " +
                            std::to_string(kMaxSpectralSize));
}

}  // namespace

HermitianEigen jacobi_hermitian(const ComplexMatrix& H) {
    require_square(H, "jacobi_hermitian");
    const std::size_t n = H.rows();
    Work h = to_work(H);
    Work u = identity_work(n);
    jacobi_in_place(h, u);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return h(a, a).real() > h(b, b).real(); });
    HermitianEigen out{std::vector<double>(n), ComplexMatrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = h(order[j], order[j]).real();
        for (std::size_t i = 0; i < n; ++i) out.vectors.set(i, j, u(i, order[j]));
    }
    return out;
}

ComplexMatrix lift_to_normal(const RealMatrix& X) {
    require_square(X, "lift_to_normal");
    return {X, X.transposed()};
}

double commutator_residual(const ComplexMatrix& Z) {
    require_square(Z, "commutator_residual");
    const auto Zh = Z.adjoint();
    return frobenius_norm(Z * Zh - Zh * Z);
}

bool is_normal(const ComplexMatrix& Z, double tol) {
    const double scale = frobenius_norm(Z);
    return commutator_residual(Z) <= tol * std::max(1.0, scale * scale);
}

UnitaryDiagonalization diagonalize_normal(const ComplexMatrix& Z) {
    require_square(Z, "diagonalize_normal");
    const std::size_t n = Z.rows();
    require_size(n, "diagonalize_normal");
    if (!is_normal(Z, 1e-10)) {
        std::ostringstream msg;
        msg << "diagonalize_normal: matrix is not normal (||ZZ* - Z*Z||_F = " << commutator_residual(Z) << ")";
        throw SpectralError(msg.str());
    }

    // Hermitian parts: Z = H1 + i H2.
    const Work z = to_work(Z);
    Work h1{n, std::vector<Complex>(n * n)};
    Work h2{n, std::vector<Complex>(n * n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const Complex zij = z(i, j), zji_c = std::conj(z(j, i));
            h1(i, j) = (zij + zji_c) / 2.0;
            h2(i, j) = (zij - zji_c) / Complex(0.0, 2.0);
        }

    Work u = identity_work(n);
    const double scale1 = frobenius(h1);
    jacobi_in_place(h1, u);

    // Group eigenvalues of H1 whose gaps are within the cluster tolerance.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return h1(a, a).real() > h1(b, b).real(); });
    const double gap = 1e-8 * std::max(1.0, scale1);

    std::vector<std::vector<Complex>> columns(n, std::vector<Complex>(n));  // columns[j][i] = E(i, j)
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && h1(order[end - 1], order[end - 1]).real() - h1(order[end], order[end]).real() <= gap)
            ++end;
        const std::size_t c = end - start;
        // Project H2 onto the cluster basis and diagonalize there.
        Work m{c, std::vector<Complex>(c * c)};
        for (std::size_t a = 0; a < c; ++a)
            for (std::size_t b = 0; b < c; ++b) {
                Complex acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    Complex row = 0.0;
                    for (std::size_t j = 0; j < n; ++j) row += h2(i, j) * u(j, order[start + b]);
                    acc += std::conj(u(i, order[start + a])) * row;
                }
                m(a, b) = acc;
            }
        for (std::size_t a = 0; a < c; ++a)  // enforce exact Hermitian symmetry before Jacobi
            for (std::size_t b = a; b < c; ++b) {
                const Complex avg = (m(a, b) + std::conj(m(b, a))) / 2.0;
                m(a, b) = avg;
                m(b, a) = std::conj(avg);
            }
        Work v = identity_work(c);
        if (c > 1) jacobi_in_place(m, v);
        for (std::size_t b = 0; b < c; ++b)
            for (std::size_t i = 0; i < n; ++i) {
                Complex acc = 0.0;
                for (std::size_t a = 0; a < c; ++a) acc += u(i, order[start + a]) * v(a, b);
                columns[start + b][i] = acc;
            }
        start = end;
    }

    // Eigenvalues as Rayleigh quotients of Z on the final basis.
    std::vector<Complex> w(n);
    for (std::size_t j = 0; j < n; ++j) {
        Complex acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Complex row = 0.0;
            for (std::size_t k = 0; k < n; ++k) row += z(i, k) * columns[j][k];
            acc += std::conj(columns[j][i]) * row;
        }
        w[j] = acc;
    }

    std::vector<std::size_t> rank_order(n);
    std::iota(rank_order.begin(), rank_order.end(), std::size_t{0});
    std::stable_sort(rank_order.begin(), rank_order.end(), [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(w[a]), mb = std::abs(w[b]);
        if (ma != mb) return ma > mb;
        return w[a].real() > w[b].real();
    });

    UnitaryDiagonalization out{ComplexMatrix(n, n), std::vector<Complex>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.W[j] = w[rank_order[j]];
        for (std::size_t i = 0; i < n; ++i) out.E.set(i, j, columns[rank_order[j]][i]);
    }
    return out;
}

std::vector<double> singular_values(const RealMatrix& X) {
    const std::size_t r = X.rows(), c = X.cols();
    require_size(std::max(r, c), "singular_values");
    const std::size_t n = r + c;
    ComplexMatrix aug(n, n);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            aug.set(i, r + j, X(i, j));
            aug.set(r + j, i, X(i, j));
        }
    auto eig = jacobi_hermitian(aug);
    std::vector<double> sv(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(std::min(r, c)));
    for (double& s : sv) s = std::max(0.0, s);
    return sv;
}

std::size_t numerical_rank(const RealMatrix& X, double rel_tol) {
    const auto sv = singular_values(X);
    if (sv.empty() || sv.front() == 0.0) return 0;
    const double cutoff = rel_tol * sv.front();
    return static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [&](double s) { return s > cutoff; }));
}

UnitaryDiagonalization rank_bounded_decomposition(const RealMatrix& X, std::size_t k) {
    require_square(X, "rank_bounded_decomposition");
    require_size(X.rows(), "rank_bounded_decomposition");
    const std::size_t observed = numerical_rank(X, 1e-8);
    if (observed > k)
        throw SpectralError("rank_bounded_decomposition: numerical rank " + std::to_string(observed) +
                            " exceeds k = " + std::to_string(k));

    const auto full = diagonalize_normal(lift_to_normal(X));
    double largest = 0.0;
    for (const auto& w : full.W) largest = std::max(largest, std::abs(w));
    const double cutoff = 1e-8 * largest;

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < full.W.size() && keep.size() < 2 * k; ++j)
        if (largest > 0.0 && std::abs(full.W[j]) > cutoff) keep.push_back(j);

    UnitaryDiagonalization out{ComplexMatrix(X.rows(), keep.size()), {}};
    for (std::size_t c = 0; c < keep.size(); ++c) {
        out.W.push_back(full.W[keep[c]]);
        for (std::size_t i = 0; i < X.rows(); ++i) out.E.set(i, c, full.E(i, keep[c]));
    }
    return out;
}

BlockDecomposition block_tensor_decomposition(std::span<const RealMatrix> matrices) {
    if (matrices.empty()) throw SpectralError("block_tensor_decomposition: no matrices");
    const std::size_t n = matrices.front().rows();
    for (const auto& X : matrices) {
        require_square(X, "block_tensor_decomposition");
        if (X.rows() != n) throw SpectralError("block_tensor_decomposition: matrices differ in size");
    }
    const std::size_t m = matrices.size();
    BlockDecomposition out{ComplexMatrix(n, n * m), std::vector<std::vector<Complex>>(m, std::vector<Complex>(n * m))};
    for (std::size_t b = 0; b < m; ++b) {
        const auto d = diagonalize_normal(lift_to_normal(matrices[b]));
        for (std::size_t j = 0; j < n; ++j) {
            out.lambdas[b][b * n + j] = d.W[j];
            for (std::size_t i = 0; i < n; ++i) out.E.set(i, b * n + j, d.E(i, j));
        }
    }
    return out;
}

RealMatrix dense_scores(const ParameterSet& params, RelationId r) {
    const std::size_t n = params.entity_count();
    if (n > kMaxDenseEntities) throw std::invalid_argument("dense_scores: too many entities to materialize");
    RealMatrix out(n, n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t o = 0; o < n; ++o)
            out(s, o) = score(params, r, static_cast<EntityId>(s), static_cast<EntityId>(o));
    return out;
}

SymmetricAntisymmetricSplit split_symmetric_antisymmetric(const ParameterSet& params, RelationId r) {
    if (params.type() != ModelType::ComplEx)
        throw std::invalid_argument("split_symmetric_antisymmetric needs a ComplEx model");
    const std::size_t n = params.entity_count();
    if (n > kMaxDenseEntities)
        throw std::invalid_argument("split_symmetric_antisymmetric: n = " + std::to_string(n) + " exceeds " +
                                    std::to_string(kMaxDenseEntities));
    if (r >= params.relation_count()) throw std::out_of_range("relation id out of range");
    const auto& re = params.param(Block::EntRe);
    const auto& im = params.param(Block::EntIm);
    const auto w_re = params.param(Block::RelRe).row(r);
    const auto w_im = params.param(Block::RelIm).row(r);
    const std::size_t K = params.rank();

    SymmetricAntisymmetricSplit out{RealMatrix(n, n), RealMatrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double sym = 0.0, anti = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                sym += w_re[k] * (re(i, k) * re(j, k) + im(i, k) * im(j, k));
                anti += w_im[k] * (re(i, k) * im(j, k) - im(i, k) * re(j, k));
            }
            out.symmetric(i, j) = sym;
            out.antisymmetric(i, j) = anti;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Grid I/O

RealMatrix read_real_grid(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        std::vector<double> row;
        std::string tok;
        while (fields >> tok) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                throw ParseError("'" + tok + "' is not a number", line_no);
            }
            if (used != tok.size()) throw ParseError("'" + tok + "' is not a number", line_no);
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("row has " + std::to_string(row.size()) + " entries, expected " +
                                 std::to_string(rows.front().size()),
                             line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return {};
    RealMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

RealMatrix read_real_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_real_grid(in);
}

void write_real_grid(std::ostream& out, const RealMatrix& m) {
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "\t" : "") << m(i, j);
        out << '\n';
    }
    out.precision(old);
}

void write_complex_grid(std::ostream& out, const ComplexMatrix& m) {
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "\t" : "") << m.re()(i, j) << ' ' << m.im()(i, j);
        out << '\n';
    }
    out.precision(old);
}

ComplexMatrix read_complex_grid(std::istream& in) {
    std::vector<std::vector<Complex>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<Complex> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, '\t')) {
            std::istringstream parts(cell);
            double re = 0.0, im = 0.0;
            if (!(parts >> re >> im)) throw ParseError("cell '" + cell + "' is not an 're im' pair", line_no);
            row.emplace_back(re, im);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("row has " + std::to_string(row.size()) + " cells, expected " +
                                 std::to_string(rows.front().size()),
                             line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return {};
    ComplexMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m.set(i, j, rows[i][j]);
    return m;
}

}  // namespace ckg
