#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "epb/errors.hpp"
#include "epb/params.hpp"

namespace epb {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

inline constexpr std::size_t default_dimension_cap = 4096;

struct Truncation {
    enum class Kind { total_excitation, per_mode };
    Kind kind = Kind::total_excitation;
    int n_max = 0;
    int n1_max = 0;
    int n2_max = 0;

    static Truncation total(int n) { return {Kind::total_excitation, n, n, n}; }
    static Truncation per_mode(int n1, int n2) { return {Kind::per_mode, n1 + n2, n1, n2}; }

    bool contains(int m, int n) const {
        if (m < 0 || n < 0) return false;
        if (kind == Kind::total_excitation) return m + n <= n_max;
        return m <= n1_max && n <= n2_max;
    }
    bool operator==(const Truncation&) const = default;
};

inline std::string to_string(const Truncation& t) {
    if (t.kind == Truncation::Kind::total_excitation) return "total_excitation(" + std::to_string(t.n_max) + ")";
    return "per_mode(" + std::to_string(t.n1_max) + "," + std::to_string(t.n2_max) + ")";
}

/// Two-mode Fock states |m,n>, ordered by N = m + n then m ascending. Cheap to copy.
class FockBasis {
public:
    using State = std::pair<int, int>;

    FockBasis() : FockBasis(Truncation::total(0)) {}

    explicit FockBasis(Truncation t) : data_(std::make_shared<Data>()) {
        data_->truncation = t;
        const int top = t.kind == Truncation::Kind::total_excitation ? t.n_max : t.n1_max + t.n2_max;
        data_->width = t.n2_max + 1;
        data_->lookup.assign(static_cast<std::size_t>(t.n1_max + 1) * (t.n2_max + 1), -1);
        for (int total = 0; total <= top; ++total)
            for (int m = 0; m <= total; ++m) {
                const int n = total - m;
                if (!t.contains(m, n)) continue;
                data_->lookup[slot(m, n)] = static_cast<int>(data_->states.size());
                data_->states.emplace_back(m, n);
            }
    }

    const Truncation& truncation() const { return data_->truncation; }
    const std::vector<State>& states() const { return data_->states; }
    int dim() const { return static_cast<int>(data_->states.size()); }
    const State& operator[](int i) const { return data_->states[static_cast<std::size_t>(i)]; }

    std::optional<int> index(int m, int n) const {
        if (!data_->truncation.contains(m, n)) return std::nullopt;
        return data_->lookup[slot(m, n)];
    }
    int at(int m, int n) const {
        auto i = index(m, n);
        if (!i) throw BasisMismatch("state |" + std::to_string(m) + "," + std::to_string(n) + "> not in basis");
        return *i;
    }

    /// Positions of the states with m + n == total, in basis order.
    std::vector<int> block(int total) const {
        std::vector<int> out;
        for (int i = 0; i < dim(); ++i)
            if ((*this)[i].first + (*this)[i].second == total) out.push_back(i);
        return out;
    }

    bool operator==(const FockBasis& o) const {
        return data_ == o.data_ || data_->truncation == o.data_->truncation;
    }

private:
    struct Data {
        Truncation truncation;
        std::vector<State> states;
        std::vector<int> lookup;
        int width = 1;
    };
    std::size_t slot(int m, int n) const { return static_cast<std::size_t>(m) * data_->width + n; }
    std::shared_ptr<Data> data_;
};

inline FockBasis build_basis(Truncation t, std::size_t cap = default_dimension_cap) {
    if (t.n_max < 0 || t.n1_max < 0 || t.n2_max < 0) throw ConfigError("truncation caps must be >= 0");
    std::size_t dim = t.kind == Truncation::Kind::total_excitation
                          ? static_cast<std::size_t>(t.n_max + 1) * (t.n_max + 2) / 2
                          : static_cast<std::size_t>(t.n1_max + 1) * (t.n2_max + 1);
    if (dim > cap)
        throw DimensionCap("basis dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(cap));
    return FockBasis(t);
}

struct OperatorMatrix {
    FockBasis basis;
    Matrix m;

    OperatorMatrix adjoint() const { return {basis, m.adjoint()}; }
    SparseMatrix sparse(double drop = 0.0) const { return m.sparseView(1.0, drop); }
};

inline void require_same_basis(const OperatorMatrix& a, const OperatorMatrix& b) {
    if (!(a.basis == b.basis) || a.m.rows() != b.m.rows())
        throw BasisMismatch("operators live on different bases");
}

enum class Mode { cw, ccw };
enum class Ladder { annihilate, create, number };

/// Ladder operator; transitions leaving the basis are dropped.
inline OperatorMatrix mode_operator(const FockBasis& basis, Mode mode, Ladder kind) {
    const int d = basis.dim();
    Matrix a = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        auto [m, n] = basis[j];
        const int k = mode == Mode::cw ? m : n;
        if (kind == Ladder::number) {
            a(j, j) = k;
            continue;
        }
        if (k == 0) continue;
        auto i = mode == Mode::cw ? basis.index(m - 1, n) : basis.index(m, n - 1);
        if (i) a(*i, j) = std::sqrt(static_cast<double>(k));
    }
    if (kind == Ladder::create) a.adjointInPlace();
    return {basis, a};
}

/// xi (a1 + a1^dag).
inline OperatorMatrix drive_operator(const FockBasis& basis, double xi) {
    if (!(xi >= 0)) throw ConfigError("xi must be >= 0");
    OperatorMatrix a = mode_operator(basis, Mode::cw, Ladder::annihilate);
    return {basis, xi * (a.m + a.m.adjoint())};
}

enum class HamiltonianKind { isolated, rotating_driven, effective, hermitian_part, antihermitian_part };

inline OperatorMatrix hermitian_part(const OperatorMatrix& h) { return {h.basis, 0.5 * (h.m + h.m.adjoint())}; }
inline OperatorMatrix antihermitian_part(const OperatorMatrix& h) {
    return {h.basis, 0.5 * (h.m - h.m.adjoint())};
}

namespace detail {

/// Frequency on the number-operator diagonal; the kappa loss model moves Im(Delta) into the jump rate.
inline cplx diagonal_frequency(const SystemParams& p) {
    cplx w = p.delta0 + p.eps1 + p.eps2;
    if (p.loss_model == LossModel::kappa) w = w.real();
    return w;
}

inline Matrix isolated_matrix(const SystemParams& p, const FockBasis& basis) {
    auto [j12, j21] = coupling_rates(p.eps1, p.eps2, p.sigma, p.beta);
    const cplx w = diagonal_frequency(p);
    const int d = basis.dim();
    Matrix h = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        auto [m, n] = basis[j];
        h(j, j) = w * static_cast<double>(m + n) + p.chi * static_cast<double>(m * (m - 1) + n * (n - 1));
        // J12 a1^dag a2 : |m,n> -> |m+1,n-1>
        if (n > 0)
            if (auto i = basis.index(m + 1, n - 1)) h(*i, j) += j12 * std::sqrt(double((m + 1) * n));
        // J21 a2^dag a1 : |m,n> -> |m-1,n+1>
        if (m > 0)
            if (auto i = basis.index(m - 1, n + 1)) h(*i, j) += j21 * std::sqrt(double(m * (n + 1)));
    }
    return h;
}

} // namespace detail

/// Hamiltonian variants in the laser frame. Parts are (H +- H^dag)/2 of `parent`.
inline OperatorMatrix build_hamiltonian(const SystemParams& p, const FockBasis& basis, HamiltonianKind kind,
                                        HamiltonianKind parent = HamiltonianKind::effective) {
    validate(p);
    switch (kind) {
    case HamiltonianKind::isolated:
        return {basis, detail::isolated_matrix(p, basis)};
    case HamiltonianKind::rotating_driven:
        return {basis, detail::isolated_matrix(p, basis) + drive_operator(basis, p.xi).m};
    case HamiltonianKind::effective: {
        OperatorMatrix h = build_hamiltonian(p, basis, HamiltonianKind::rotating_driven);
        const double rate = p.loss_model == LossModel::kappa ? derive(p).kappa : p.gamma;
        h.m += cplx(0.0, -0.5 * rate) * mode_operator(basis, Mode::cw, Ladder::number).m;
        h.m += cplx(0.0, -0.5 * rate) * mode_operator(basis, Mode::ccw, Ladder::number).m;
        return h;
    }
    case HamiltonianKind::hermitian_part:
    case HamiltonianKind::antihermitian_part: {
        if (parent == HamiltonianKind::hermitian_part || parent == HamiltonianKind::antihermitian_part)
            throw ConfigError("partition parent must be a full Hamiltonian");
        OperatorMatrix h = build_hamiltonian(p, basis, parent);
        return kind == HamiltonianKind::hermitian_part ? hermitian_part(h) : antihermitian_part(h);
    }
    }
    throw ConfigError("unknown Hamiltonian variant");
}

/// Restriction of an operator to the rows/cols of one total-excitation block.
inline Matrix excitation_block(const OperatorMatrix& op, int total) {
    auto idx = op.basis.block(total);
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix b(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) b(r, c) = op.m(idx[r], idx[c]);
    return b;
}

} // namespace epb
