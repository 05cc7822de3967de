#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "epb/errors.hpp"
#include "epb/hilbert.hpp"
#include "epb/params.hpp"

namespace epb {

struct SubspaceEigensystem {
    int n_excitations = -1;
    std::vector<cplx> eigenvalues;
    std::vector<Vector> eigenvectors;
    bool normalized = true;
};

namespace detail {

inline Vector unit(std::initializer_list<cplx> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (cplx x : xs) v(i++) = x;
    const double n = v.norm();
    if (n > 0) v /= n;
    return v;
}

} // namespace detail

/// Analytic eigenpairs of the N <= 2 blocks of the isolated Hamiltonian.
/// Order: n=1 -> {+, -}; n=2 -> {+, 0, -}. Basis order within a block is m ascending.
inline SubspaceEigensystem closed_form_eigensystem(const SystemParams& p, int n) {
    if (n < 0 || n > 2) throw ConfigError("closed form exists only for n <= 2; use numeric_eigensystem");
    const DerivedRates r = derive(p);
    const cplx w = detail::diagonal_frequency(p);
    const cplx j12 = r.j12, j21 = r.j21;
    SubspaceEigensystem es;
    es.n_excitations = n;
    if (n == 0) {
        es.eigenvalues = {0.0};
        es.eigenvectors = {detail::unit({1.0})};
        return es;
    }
    if (n == 1) {
        const cplx d1 = std::sqrt(j12 * j21);
        for (double s : {1.0, -1.0}) {
            es.eigenvalues.push_back(w + s * d1);
            // (J21, s d1) and (s d1, J12) are both eigenvectors; take the better conditioned one
            Vector v = std::abs(j21) >= std::abs(j12) ? detail::unit({j21, s * d1}) : detail::unit({s * d1, j12});
            if (v.norm() == 0) v = detail::unit({s > 0 ? 1.0 : 0.0, s > 0 ? 0.0 : 1.0});
            es.eigenvectors.push_back(v);
        }
        return es;
    }
    const double chi = p.chi;
    const cplx root = std::sqrt(chi * chi + 4.0 * j12 * j21);
    const double r2 = std::sqrt(2.0);
    const cplx dplus = -chi + root, dminus = -chi - root;
    auto branch = [&](cplx d) {
        Vector v = detail::unit({r2 * j21, d, r2 * j12});
        if (v.norm() == 0) v = detail::unit({0.0, 1.0, 0.0});
        return v;
    };
    Vector zero = detail::unit({j21, 0.0, -j12});
    if (zero.norm() == 0) zero = detail::unit({1.0, 0.0, 0.0});
    es.eigenvalues = {2.0 * w + 2.0 * chi + dplus, 2.0 * w + 2.0 * chi, 2.0 * w + 2.0 * chi + dminus};
    es.eigenvectors = {branch(dplus), zero, branch(dminus)};
    return es;
}

/// General complex eigen-decomposition (Hessenberg + shifted QR). Vectors have unit 2-norm.
inline SubspaceEigensystem numeric_eigensystem(const Matrix& h) {
    if (h.rows() != h.cols() || h.rows() < 1) throw ConfigError("numeric_eigensystem needs a non-empty square matrix");
    Eigen::ComplexEigenSolver<Matrix> solver;
    solver.setMaxIterations(100 * h.rows());
    solver.compute(h, true);
    if (solver.info() != Eigen::Success)
        throw NonConvergence("complex QR iteration did not converge", std::numeric_limits<double>::infinity());
    SubspaceEigensystem es;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        es.eigenvalues.push_back(solver.eigenvalues()(i));
        Vector v = solver.eigenvectors().col(i);
        es.eigenvectors.push_back(v / v.norm());
    }
    return es;
}

inline SubspaceEigensystem numeric_eigensystem(const OperatorMatrix& h) { return numeric_eigensystem(h.m); }

inline double overlap(const Vector& a, const Vector& b) {
    return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

enum class EpKind { hamiltonian, liouvillian };

struct EpReport {
    double beta = 0;
    double gap_abs = 0;
    double overlap = 0;
    EpKind kind = EpKind::hamiltonian;
    int subspace = -1; // -1 means the full space
    bool is_ep = false;
};

struct ScanRow {
    double beta;
    cplx gap;
    double overlap;
    bool is_ep;
};

struct EpScan {
    std::vector<ScanRow> rows;
    std::vector<EpReport> minima;
};

struct EpCriteria {
    double gap_tol = 0.1;
    double overlap_tol = 0.01;

    bool flags(double gap, double ov) const { return gap < gap_tol && ov > 1.0 - overlap_tol; }
};

namespace detail {

struct PairSample {
    cplx gap;
    double overlap;
};

/// Closest eigenvalue pair of the N-excitation block of the isolated Hamiltonian.
inline PairSample hamiltonian_pair(const SystemParams& p, int subspace) {
    FockBasis basis = build_basis(Truncation::total(subspace));
    OperatorMatrix h = build_hamiltonian(p, basis, HamiltonianKind::isolated);
    SubspaceEigensystem es = numeric_eigensystem(excitation_block(h, subspace));
    const std::size_t k = es.eigenvalues.size();
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (std::abs(es.eigenvalues[i] - es.eigenvalues[j]) < best) {
                best = std::abs(es.eigenvalues[i] - es.eigenvalues[j]);
                bi = i;
                bj = j;
            }
    cplx gap = es.eigenvalues[bi] - es.eigenvalues[bj];
    if (gap.real() < 0) gap = -gap;
    return {gap, overlap(es.eigenvectors[bi], es.eigenvectors[bj])};
}

inline std::vector<std::size_t> local_minima(const std::vector<double>& v) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
        if (v[i] <= v[i - 1] && v[i] < v[i + 1]) out.push_back(i);
    return out;
}

inline void require_grid(const std::vector<double>& grid) {
    if (grid.size() < 3) throw ConfigError("beta grid needs at least 3 points");
    if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("beta grid must be sorted");
}

} // namespace detail

/// Uniform grid over [0, 2pi) with `count` points.
inline std::vector<double> full_turn_grid(int count) {
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = two_pi * i / count;
    return g;
}

/// Gap and eigenvector overlap of the closest pair in the given excitation block across beta.
inline EpScan hamiltonian_ep_scan(const SystemParams& base, const std::vector<double>& grid, int subspace = 1,
                                  const EpCriteria& crit = {}) {
    detail::require_grid(grid);
    if (subspace < 1) throw ConfigError("subspace must be >= 1");
    EpScan scan;
    std::vector<double> gaps;
    for (double b : grid) {
        auto s = detail::hamiltonian_pair(base.at_beta(b), subspace);
        scan.rows.push_back({b, s.gap, s.overlap, crit.flags(std::abs(s.gap), s.overlap)});
        gaps.push_back(std::abs(s.gap));
    }
    for (std::size_t i : detail::local_minima(gaps)) {
        auto f = [&](double b) { return std::abs(detail::hamiltonian_pair(base.at_beta(b), subspace).gap); };
        const double b = detail::refine_minimum(f, grid[i - 1], grid[i + 1]);
        auto s = detail::hamiltonian_pair(base.at_beta(b), subspace);
        scan.minima.push_back({normalize_angle(b), std::abs(s.gap), s.overlap, EpKind::hamiltonian, subspace,
                               crit.flags(std::abs(s.gap), s.overlap)});
    }
    return scan;
}

/// Principal square root of M = -2i H_minus via its unitary eigen-decomposition.
inline OperatorMatrix gamma_jump_operator(const OperatorMatrix& hminus) {
    const double scale = std::max(1.0, hminus.m.cwiseAbs().maxCoeff());
    if ((hminus.m + hminus.m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw HermitianityViolation("gamma_jump_operator: input is not anti-Hermitian");
    Matrix mm = cplx(0.0, -2.0) * hminus.m;
    mm = 0.5 * (mm + mm.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(mm);
    Vector roots = es.eigenvalues().cast<cplx>().unaryExpr([](cplx x) { return std::sqrt(x); });
    return {hminus.basis, es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint()};
}

/// Column-stacking superoperators: vec(A rho B) = (B^T kron A) vec(rho).
namespace super {

inline Matrix left(const Matrix& a) { return Eigen::kroneckerProduct(Matrix::Identity(a.rows(), a.cols()), a); }
inline Matrix right(const Matrix& b) { return Eigen::kroneckerProduct(b.transpose(), Matrix::Identity(b.rows(), b.cols())); }
inline Matrix sandwich(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(b.transpose(), a); }

inline Matrix dissipator(const Matrix& a) {
    const Matrix ada = a.adjoint() * a;
    return sandwich(a, a.adjoint()) - 0.5 * left(ada) - 0.5 * right(ada);
}

inline Vector vec(const Matrix& rho) { return Eigen::Map<const Vector>(rho.data(), rho.size()); }
inline Matrix unvec(const Vector& v, Eigen::Index d) { return Eigen::Map<const Matrix>(v.data(), d, d); }

} // namespace super

struct LiouvillianMatrix {
    FockBasis basis;
    Matrix m;
    std::string vectorization = "column_stacking";
};

/// Ladder jump operators with their rates for the chosen loss model and thermal occupation.
inline std::vector<Matrix> ladder_jumps(const SystemParams& p, const FockBasis& basis) {
    const double rate = p.loss_model == LossModel::kappa ? derive(p).kappa : p.gamma;
    std::vector<Matrix> jumps;
    for (Mode mode : {Mode::cw, Mode::ccw}) {
        const Matrix a = mode_operator(basis, mode, Ladder::annihilate).m;
        jumps.push_back(std::sqrt(rate * (p.nth + 1.0)) * a);
        if (p.nth > 0) jumps.push_back(std::sqrt(rate * p.nth) * a.adjoint());
    }
    return jumps;
}

/// L rho = -i[H+, rho] + sum_j D(rho, A_j) + D(rho, Gamma) with Gamma = sqrt(-2i H-).
inline LiouvillianMatrix liouvillian_matrix(const SystemParams& p, const FockBasis& basis, bool include_drive,
                                            std::size_t cap = default_dimension_cap) {
    const auto d = static_cast<std::size_t>(basis.dim());
    if (d * d > cap)
        throw DimensionCap("Liouvillian dimension " + std::to_string(d * d) + " exceeds cap " + std::to_string(cap));
    OperatorMatrix h = build_hamiltonian(p, basis, include_drive ? HamiltonianKind::rotating_driven
                                                                   : HamiltonianKind::isolated);
    const Matrix hp = hermitian_part(h).m;
    const OperatorMatrix hm = antihermitian_part(h);
    Matrix l = cplx(0.0, -1.0) * (super::left(hp) - super::right(hp));
    for (const Matrix& a : ladder_jumps(p, basis)) l += super::dissipator(a);
    l += super::dissipator(gamma_jump_operator(hm).m);
    return {basis, l};
}

struct PairSelection {
    int sector = 1;              // N_row - N_col of the tracked coherences
    int rank = 0;                // pair = ranks (rank, rank+1) by ascending |Re lambda|
    double ambiguity_ratio = 0.5;
    int n_max = 2;
};

namespace detail {

inline std::vector<cplx> sector_spectrum(const SystemParams& p, const PairSelection& sel, Matrix* vecs = nullptr) {
    FockBasis basis = build_basis(Truncation::total(sel.n_max));
    LiouvillianMatrix l = liouvillian_matrix(p, basis, false);
    const int d = basis.dim();
    std::vector<Eigen::Index> idx;
    for (int c = 0; c < d; ++c)
        for (int r = 0; r < d; ++r) {
            const int nr = basis[r].first + basis[r].second, nc = basis[c].first + basis[c].second;
            if (nr - nc == sel.sector) idx.push_back(static_cast<Eigen::Index>(r) + static_cast<Eigen::Index>(c) * d);
        }
    if (idx.size() < 2) throw ConfigError("selected coherence sector has fewer than two states");
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix block(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) block(i, j) = l.m(idx[i], idx[j]);
    Eigen::ComplexEigenSolver<Matrix> solver(block, vecs != nullptr);
    if (solver.info() != Eigen::Success) throw NonConvergence("Liouvillian sector eigensolver failed", INFINITY);
    if (vecs) *vecs = solver.eigenvectors();
    return {solver.eigenvalues().data(), solver.eigenvalues().data() + k};
}

struct TrackedPair {
    std::size_t i, j;
};

/// Best assignment of the previous pair onto the new spectrum; nullopt when ambiguous.
inline std::optional<TrackedPair> match_pair(const std::vector<cplx>& ev, cplx a, cplx b, double ratio) {
    const std::size_t k = ev.size();
    double best = INFINITY;
    TrackedPair tp{0, 1};
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const double c = std::abs(ev[i] - a) + std::abs(ev[j] - b);
            if (c < best) {
                best = c;
                tp = {i, j};
            }
        }
    for (auto [prev, mine] : {std::pair{a, tp.i}, std::pair{b, tp.j}}) {
        const double dm = std::abs(ev[mine] - prev);
        double other = INFINITY;
        for (std::size_t q = 0; q < k; ++q)
            if (q != tp.i && q != tp.j) other = std::min(other, std::abs(ev[q] - prev));
        if (dm > 1e-12 && dm > ratio * other) return std::nullopt;
    }
    return tp;
}

} // namespace detail

/// Tracks one Liouvillian eigenvalue pair across beta (driveless) and reports where it coalesces.
inline EpScan liouvillian_ep_scan(const SystemParams& base, const std::vector<double>& grid,
                                  const PairSelection& sel = {}, const EpCriteria& crit = {}) {
    detail::require_grid(grid);
    EpScan scan;
    std::vector<double> gaps;
    std::vector<std::pair<cplx, cplx>> tracked;
    cplx a{}, b{};
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto ev = detail::sector_spectrum(base.at_beta(grid[g]), sel);
        if (g == 0) {
            std::vector<cplx> sorted = ev;
            std::stable_sort(sorted.begin(), sorted.end(),
                             [](cplx x, cplx y) { return std::abs(x.real()) < std::abs(y.real()); });
            if (static_cast<std::size_t>(sel.rank) + 1 >= sorted.size()) throw ConfigError("pair rank out of range");
            a = sorted[static_cast<std::size_t>(sel.rank)];
            b = sorted[static_cast<std::size_t>(sel.rank) + 1];
        } else {
            auto m = detail::match_pair(ev, a, b, sel.ambiguity_ratio);
            if (!m) throw TrackingLost("eigenvalue pair matching ambiguous", grid[g]);
            a = ev[m->i];
            b = ev[m->j];
        }
        tracked.emplace_back(a, b);
        cplx gap = a - b;
        scan.rows.push_back({grid[g], gap, 0.0, false});
        gaps.push_back(std::abs(gap));
    }
    auto sample = [&](double beta, std::size_t near) {
        Matrix vecs;
        auto ev = detail::sector_spectrum(base.at_beta(beta), sel, &vecs);
        auto m = detail::match_pair(ev, tracked[near].first, tracked[near].second, INFINITY);
        Vector va = vecs.col(static_cast<Eigen::Index>(m->i)), vb = vecs.col(static_cast<Eigen::Index>(m->j));
        return detail::PairSample{ev[m->i] - ev[m->j], overlap(va, vb)};
    };
    for (std::size_t i : detail::local_minima(gaps)) {
        auto f = [&](double beta) { return std::abs(sample(beta, i).gap); };
        const double beta = detail::refine_minimum(f, grid[i - 1], grid[i + 1]);
        auto s = sample(beta, i);
        const bool flag = crit.flags(std::abs(s.gap), s.overlap);
        scan.minima.push_back({normalize_angle(beta), std::abs(s.gap), s.overlap, EpKind::liouvillian, -1, flag});
    }
    for (auto& row : scan.rows) row.is_ep = false;
    for (const auto& rep : scan.minima) {
        if (!rep.is_ep) continue;
        auto it = std::min_element(scan.rows.begin(), scan.rows.end(), [&](const ScanRow& x, const ScanRow& y) {
            return std::abs(x.beta - rep.beta) < std::abs(y.beta - rep.beta);
        });
        it->is_ep = true;
    }
    return scan;
}

} // namespace epb
