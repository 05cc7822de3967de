#include <gtest/gtest.h>

#include <random>

#include "epb/hilbert.hpp"

using namespace epb;

namespace {

SystemParams resonator(double beta = 0.5 * pi) { return resonator_preset(strong_kerr_n2).at_beta(beta); }

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

TEST(Basis, OrderingAndDimensions) {
    const FockBasis b = build_basis(Truncation::total(2));
    ASSERT_EQ(b.dim(), 6);
    const std::vector<FockBasis::State> expect{{0, 0}, {0, 1}, {1, 0}, {0, 2}, {1, 1}, {2, 0}};
    EXPECT_EQ(b.states(), expect);
    EXPECT_EQ(build_basis(Truncation::per_mode(3, 2)).dim(), 12);
    EXPECT_EQ(build_basis(Truncation::total(5)).dim(), 21);
    for (int i = 0; i < b.dim(); ++i) EXPECT_EQ(b.at(b[i].first, b[i].second), i);
    EXPECT_FALSE(b.index(2, 1).has_value());
    EXPECT_THROW(b.at(3, 0), BasisMismatch);
    EXPECT_EQ(b.block(1), (std::vector<int>{1, 2}));
}

TEST(Basis, DimensionCap) {
    EXPECT_THROW(build_basis(Truncation::per_mode(80, 80)), DimensionCap);
    EXPECT_NO_THROW(build_basis(Truncation::per_mode(80, 80), 10000));
    EXPECT_THROW(build_basis(Truncation::total(-1)), ConfigError);
}

TEST(Operators, LadderAlgebra) {
    const FockBasis b = build_basis(Truncation::per_mode(5, 5));
    for (Mode mode : {Mode::cw, Mode::ccw}) {
        const Matrix a = mode_operator(b, mode, Ladder::annihilate).m;
        const Matrix ad = mode_operator(b, mode, Ladder::create).m;
        const Matrix n = mode_operator(b, mode, Ladder::number).m;
        EXPECT_LT(max_abs(ad * a - n), 1e-13);
        // [a, a^dag] = 1 on states that are not at the cap of this mode
        const Matrix comm = a * ad - ad * a;
        for (int i = 0; i < b.dim(); ++i) {
            const int k = mode == Mode::cw ? b[i].first : b[i].second;
            if (k < 5) {
                EXPECT_NEAR(std::abs(comm(i, i) - 1.0), 0.0, 1e-13);
            }
        }
    }
    const Matrix a1 = mode_operator(b, Mode::cw, Ladder::annihilate).m;
    const Matrix a2 = mode_operator(b, Mode::ccw, Ladder::annihilate).m;
    EXPECT_LT(max_abs(a1 * a2 - a2 * a1), 1e-13);
}

TEST(Hamiltonian, MatrixElements) {
    const SystemParams p = resonator(0.3);
    const FockBasis b = build_basis(Truncation::total(2));
    const Matrix h = build_hamiltonian(p, b, HamiltonianKind::isolated).m;
    auto [j12, j21] = coupling_rates(p.eps1, p.eps2, 1, 0.3);
    const cplx w = p.delta0 + p.eps1 + p.eps2;
    EXPECT_NEAR(std::abs(h(b.at(1, 0), b.at(1, 0)) - w), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(h(b.at(2, 0), b.at(2, 0)) - (2.0 * w + 2.0 * p.chi)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(h(b.at(1, 1), b.at(1, 1)) - 2.0 * w), 0.0, 1e-12);
    // <1,0|H|0,1> = J12, <0,1|H|1,0> = J21
    EXPECT_NEAR(std::abs(h(b.at(1, 0), b.at(0, 1)) - j12), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(h(b.at(0, 1), b.at(1, 0)) - j21), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(h(b.at(2, 0), b.at(1, 1)) - std::sqrt(2.0) * j12), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(h(b.at(0, 2), b.at(1, 1)) - std::sqrt(2.0) * j21), 0.0, 1e-13);
}

TEST(Hamiltonian, ExcitationNumberConservedWithoutDrive) {
    const FockBasis b = build_basis(Truncation::per_mode(4, 4));
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0, two_pi);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix h = build_hamiltonian(resonator(u(rng)), b, HamiltonianKind::isolated).m;
        for (int i = 0; i < b.dim(); ++i)
            for (int j = 0; j < b.dim(); ++j)
                if (b[i].first + b[i].second != b[j].first + b[j].second) {
                    EXPECT_EQ(h(i, j), cplx(0.0));
                }
    }
}

TEST(Hamiltonian, DriveAndLossTerms) {
    const SystemParams p = resonator(0.7);
    const FockBasis b = build_basis(Truncation::per_mode(3, 3));
    const Matrix iso = build_hamiltonian(p, b, HamiltonianKind::isolated).m;
    const Matrix drv = build_hamiltonian(p, b, HamiltonianKind::rotating_driven).m;
    const Matrix eff = build_hamiltonian(p, b, HamiltonianKind::effective).m;
    const Matrix n = mode_operator(b, Mode::cw, Ladder::number).m + mode_operator(b, Mode::ccw, Ladder::number).m;
    EXPECT_LT(max_abs(drv - iso - drive_operator(b, p.xi).m), 1e-14);
    EXPECT_LT(max_abs(eff - drv + cplx(0, 0.5) * n), 1e-14);
    // one photon decays at kappa/2 in total
    EXPECT_NEAR(eff(b.at(1, 0), b.at(1, 0)).imag(), -0.74, 1e-12);

    SystemParams k = p;
    k.loss_model = LossModel::kappa;
    const Matrix effk = build_hamiltonian(k, b, HamiltonianKind::effective).m;
    EXPECT_NEAR(effk(b.at(1, 0), b.at(1, 0)).imag(), -0.74, 1e-12);
    EXPECT_NEAR(build_hamiltonian(k, b, HamiltonianKind::isolated).m(b.at(1, 0), b.at(1, 0)).imag(), 0.0, 1e-14);
}

TEST(Hamiltonian, HermitianPartition) {
    const FockBasis b = build_basis(Truncation::total(4));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, two_pi);
    for (int trial = 0; trial < 10; ++trial) {
        const SystemParams p = resonator(u(rng));
        const OperatorMatrix h = build_hamiltonian(p, b, HamiltonianKind::effective);
        const OperatorMatrix hp = build_hamiltonian(p, b, HamiltonianKind::hermitian_part);
        const OperatorMatrix hm = build_hamiltonian(p, b, HamiltonianKind::antihermitian_part);
        EXPECT_LT(max_abs(hp.m - hp.m.adjoint()), 1e-14);
        EXPECT_LT(max_abs(hm.m + hm.m.adjoint()), 1e-14);
        EXPECT_LT(max_abs(hp.m + hm.m - h.m), 1e-14);
    }
    EXPECT_THROW(build_hamiltonian(resonator(), b, HamiltonianKind::hermitian_part, HamiltonianKind::antihermitian_part),
                 ConfigError);
}

TEST(Operators, BasisMismatch) {
    const OperatorMatrix a = mode_operator(build_basis(Truncation::total(2)), Mode::cw, Ladder::annihilate);
    const OperatorMatrix c = mode_operator(build_basis(Truncation::total(3)), Mode::cw, Ladder::annihilate);
    EXPECT_THROW(require_same_basis(a, c), BasisMismatch);
    EXPECT_NO_THROW(require_same_basis(a, a.adjoint()));
}
