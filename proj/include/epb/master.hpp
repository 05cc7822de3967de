#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include "epb/errors.hpp"
#include "epb/hilbert.hpp"
#include "epb/parallel.hpp"
#include "epb/params.hpp"
#include "epb/spectra.hpp"

namespace epb {

struct DensityState {
    FockBasis basis;
    Matrix rho;

    static DensityState vacuum(const FockBasis& basis) {
        Matrix r = Matrix::Zero(basis.dim(), basis.dim());
        r(0, 0) = 1.0;
        return {basis, r};
    }
};

struct StateCheck {
    double hermiticity;
    double trace_error;
    double min_eigenvalue;

    bool ok() const { return hermiticity < 1e-9 && trace_error < 1e-9 && min_eigenvalue >= -1e-7; }
};

inline StateCheck check_state(const DensityState& s) {
    StateCheck c{};
    c.hermiticity = (s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff();
    c.trace_error = std::abs(s.rho.trace() - cplx(1.0));
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s.rho + s.rho.adjoint()), Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    return c;
}

enum class SteadyMethod { time_march, spectral };
enum class MasterVariant { hybrid, thermal };

struct EvolutionOptions {
    double dt = 1e-3;
    double t_max = 200.0;
    double convergence_tol = 1e-8;
    double probe_interval = 10.0;
    bool renormalize_each_step = true;
    std::function<void(double, const Matrix&)> trace_log;

    void validate() const {
        if (!(dt > 0)) throw ConfigError("dt must be > 0");
        if (!(t_max > dt)) throw ConfigError("t_max must exceed dt");
        if (!(convergence_tol > 0)) throw ConfigError("convergence_tol must be > 0");
        if (!(probe_interval >= dt)) throw ConfigError("probe_interval must be >= dt");
    }
};

/// Sparse generator pieces: drho = K rho + rho K^dag + sum_j A_j rho A_j^dag + 2i tr(rho H-) rho.
struct HybridGenerator {
    FockBasis basis;
    SparseMatrix k, k_adj;
    SparseMatrix hminus;
    std::vector<SparseMatrix> jumps, jumps_adj;
};

namespace detail {

inline void require_anti_hermitian(const Matrix& h, double tol = 1e-12) {
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h + h.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
        throw HermitianityViolation("expected an anti-Hermitian operator");
}
inline void require_hermitian(const Matrix& h, double tol = 1e-12) {
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > tol * scale) throw HermitianityViolation("expected a Hermitian operator");
}

} // namespace detail

inline HybridGenerator make_generator(const OperatorMatrix& hplus, const OperatorMatrix& hminus,
                                      const std::vector<OperatorMatrix>& jumps) {
    require_same_basis(hplus, hminus);
    detail::require_hermitian(hplus.m);
    detail::require_anti_hermitian(hminus.m);
    HybridGenerator g;
    g.basis = hplus.basis;
    Matrix k = cplx(0.0, -1.0) * (hplus.m + hminus.m);
    for (const auto& a : jumps) {
        require_same_basis(hplus, a);
        k -= 0.5 * a.m.adjoint() * a.m;
        g.jumps.push_back(a.m.sparseView());
        g.jumps_adj.push_back(a.m.adjoint().sparseView());
    }
    g.k = k.sparseView();
    g.k_adj = k.adjoint().sparseView();
    g.hminus = hminus.m.sparseView();
    return g;
}

inline std::vector<OperatorMatrix> thermal_jumps(const FockBasis& basis, double rate, double nth) {
    if (!(nth >= 0)) throw ConfigError("nth must be >= 0");
    std::vector<OperatorMatrix> out;
    for (Mode mode : {Mode::cw, Mode::ccw}) {
        const OperatorMatrix a = mode_operator(basis, mode, Ladder::annihilate);
        out.push_back({basis, std::sqrt(rate * (nth + 1.0)) * a.m});
        if (nth > 0) out.push_back({basis, std::sqrt(rate * nth) * a.m.adjoint()});
    }
    return out;
}

/// Generator for the driven resonator: H = rotating-frame Hamiltonian, jumps from the loss model.
inline HybridGenerator make_generator(const SystemParams& p, const FockBasis& basis, MasterVariant variant) {
    const OperatorMatrix h = build_hamiltonian(p, basis, HamiltonianKind::rotating_driven);
    const double rate = p.loss_model == LossModel::kappa ? derive(p).kappa : p.gamma;
    const double nth = variant == MasterVariant::thermal ? p.nth : 0.0;
    return make_generator(hermitian_part(h), antihermitian_part(h), thermal_jumps(basis, rate, nth));
}

inline Matrix generate(const HybridGenerator& g, const Matrix& rho) {
    Matrix out = g.k * rho;
    out += rho * g.k_adj;
    for (std::size_t j = 0; j < g.jumps.size(); ++j) out += g.jumps[j] * (rho * g.jumps_adj[j]);
    const cplx tr = (g.hminus * rho).trace();
    out += cplx(0.0, 2.0) * tr * rho;
    return out;
}

/// d rho / dt of the hybrid master equation.
inline Matrix hybrid_rhs(const DensityState& rho, const OperatorMatrix& hplus, const OperatorMatrix& hminus,
                         const std::vector<OperatorMatrix>& jumps) {
    if (!(rho.basis == hplus.basis) || rho.rho.rows() != hplus.m.rows())
        throw BasisMismatch("state and Hamiltonian live on different bases");
    return generate(make_generator(hplus, hminus, jumps), rho.rho);
}

/// Hybrid equation with thermal ladder dissipators at rates gamma (nth + 1) and gamma nth.
inline Matrix thermal_rhs(const DensityState& rho, const OperatorMatrix& hplus, const OperatorMatrix& hminus,
                          double gamma, double nth) {
    return hybrid_rhs(rho, hplus, hminus, thermal_jumps(hplus.basis, gamma, nth));
}

/// Fixed-step RK4 from `start` until the probe residual drops below tolerance.
inline DensityState evolve(const HybridGenerator& g, DensityState state, const EvolutionOptions& opts) {
    opts.validate();
    const auto probe_steps = std::max<long>(1, std::lround(opts.probe_interval / opts.dt));
    const long max_steps = static_cast<long>(std::ceil(opts.t_max / opts.dt));
    const double probe_time = probe_steps * opts.dt;
    Matrix& rho = state.rho;
    Matrix last_probe = rho;
    double residual = INFINITY;
    const double h = opts.dt;
    for (long step = 1; step <= max_steps; ++step) {
        const Matrix k1 = generate(g, rho);
        const Matrix k2 = generate(g, rho + 0.5 * h * k1);
        const Matrix k3 = generate(g, rho + 0.5 * h * k2);
        const Matrix k4 = generate(g, rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (opts.renormalize_each_step) rho /= rho.trace();
        if (opts.trace_log) opts.trace_log(step * h, rho);
        if (step % probe_steps != 0) continue;
        const double big = rho.cwiseAbs().maxCoeff();
        if (!std::isfinite(big) || big > 1e6) throw StepUnstable("density matrix element exceeded 1e6; reduce dt");
        residual = (rho - last_probe).cwiseAbs().maxCoeff() / probe_time;
        if (residual < opts.convergence_tol) return state;
        last_probe = rho;
    }
    throw NonConvergence("no steady state within t_max", residual);
}

inline DensityState evolve_to_steady(const SystemParams& p, const FockBasis& basis, const EvolutionOptions& opts = {},
                                     MasterVariant variant = MasterVariant::hybrid) {
    validate(p);
    return evolve(make_generator(p, basis, variant), DensityState::vacuum(basis), opts);
}

/// Column-stacked sparse matrix of the linear part of the generator.
inline SparseMatrix generator_superoperator(const HybridGenerator& g) {
    const Eigen::Index d = g.basis.dim();
    SparseMatrix id(d, d);
    id.setIdentity();
    SparseMatrix l = Eigen::kroneckerProduct(id, g.k).eval();
    l += Eigen::kroneckerProduct(SparseMatrix(g.k_adj.transpose()), id).eval();
    for (std::size_t j = 0; j < g.jumps.size(); ++j)
        l += Eigen::kroneckerProduct(SparseMatrix(g.jumps_adj[j].transpose()), g.jumps[j]).eval();
    l.makeCompressed();
    return l;
}

struct SpectralOptions {
    double shift = 0.05;
    double tol = 1e-13;
    int max_iterations = 500;
};

/// The trace term only rescales, so the steady state is the normalised leading eigenvector of the
/// linear generator. Found by shift-invert inverse iteration with a sparse LU factorisation.
inline DensityState spectral_steady_state(const HybridGenerator& g, const SpectralOptions& opts = {}) {
    const Eigen::Index d = g.basis.dim();
    SparseMatrix a = generator_superoperator(g);
    SparseMatrix shift(a.rows(), a.cols());
    shift.setIdentity();
    a -= opts.shift * shift;
    a.makeCompressed();
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw NumericalError("sparse LU of the shifted generator failed");
    Matrix rho = DensityState::vacuum(g.basis).rho;
    rho += Matrix::Identity(d, d) * (1e-3 / static_cast<double>(d));
    rho /= rho.trace();
    double change = INFINITY;
    for (int it = 0; it < opts.max_iterations; ++it) {
        Vector x = lu.solve(super::vec(rho));
        Matrix next = super::unvec(x, d);
        next /= next.trace();
        change = (next - rho).cwiseAbs().maxCoeff();
        rho = std::move(next);
        if (change < opts.tol) break;
    }
    if (!(change < opts.tol * 1e3)) throw NonConvergence("inverse iteration did not converge", change);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    return {g.basis, rho};
}

inline DensityState spectral_steady_state(const SystemParams& p, const FockBasis& basis,
                                          MasterVariant variant = MasterVariant::hybrid) {
    validate(p);
    return spectral_steady_state(make_generator(p, basis, variant));
}

struct Observables {
    double mean_m = 0, mean_n = 0;
    double g2_11 = 0, g2_22 = 0, g2_12 = 0, g3_11 = 0, g3_22 = 0;
    std::vector<double> photon_marginal_cw;
};

/// Normally ordered moments from the Fock-diagonal of rho.
inline Observables observables(const DensityState& s) {
    Observables o;
    double mm = 0, nn = 0, mn = 0, mmm = 0, nnn = 0;
    int top = 0;
    for (int i = 0; i < s.basis.dim(); ++i) top = std::max(top, s.basis[i].first);
    o.photon_marginal_cw.assign(static_cast<std::size_t>(top + 1), 0.0);
    for (int i = 0; i < s.basis.dim(); ++i) {
        const auto [m, n] = s.basis[i];
        const double pr = s.rho(i, i).real();
        o.mean_m += m * pr;
        o.mean_n += n * pr;
        mm += m * (m - 1) * pr;
        nn += n * (n - 1) * pr;
        mn += m * n * pr;
        mmm += m * (m - 1) * (m - 2) * pr;
        nnn += n * (n - 1) * (n - 2) * pr;
        o.photon_marginal_cw[static_cast<std::size_t>(m)] += pr;
    }
    auto ratio = [](double a, double b) { return b == 0.0 ? INFINITY : a / b; };
    o.g2_11 = ratio(mm, o.mean_m * o.mean_m);
    o.g2_22 = ratio(nn, o.mean_n * o.mean_n);
    o.g2_12 = ratio(mn, o.mean_m * o.mean_n);
    o.g3_11 = ratio(mmm, o.mean_m * o.mean_m * o.mean_m);
    o.g3_22 = ratio(nnn, o.mean_n * o.mean_n * o.mean_n);
    return o;
}

struct MasterOptions {
    Truncation truncation = Truncation::per_mode(4, 4);
    SteadyMethod method = SteadyMethod::spectral;
    EvolutionOptions evolution;
    SpectralOptions spectral;
};

inline DensityState master_steady_state(const SystemParams& p, const MasterOptions& opts,
                                        MasterVariant variant = MasterVariant::hybrid) {
    const FockBasis basis = build_basis(opts.truncation);
    if (opts.method == SteadyMethod::time_march) return evolve_to_steady(p, basis, opts.evolution, variant);
    validate(p);
    return spectral_steady_state(make_generator(p, basis, variant), opts.spectral);
}

struct ThermalRow {
    double beta, nth, g2_11;
};

struct ThermalCrossing {
    double beta;
    double g2_at_zero;
    double level;                 // 1 for blockade curves, 2 for bunched curves
    std::optional<double> nth;    // linear interpolation between grid points
};

struct ThermalSweep {
    std::vector<ThermalRow> rows;
    std::vector<ThermalCrossing> crossings;
};

/// Blockade curves: first n_th where g2 rises through 1. Bunched curves: first n_th where g2 falls through 2.
inline ThermalCrossing critical_nth(double beta, const std::vector<double>& nth, const std::vector<double>& g2) {
    ThermalCrossing c{beta, g2.front(), g2.front() < 1.0 ? 1.0 : 2.0, std::nullopt};
    const bool rising = c.level == 1.0;
    for (std::size_t i = 1; i < g2.size(); ++i) {
        const double a = g2[i - 1] - c.level, b = g2[i] - c.level;
        const bool crossed = rising ? (a < 0 && b >= 0) : (a > 0 && b <= 0);
        if (!crossed) continue;
        c.nth = nth[i - 1] + (nth[i] - nth[i - 1]) * a / (a - b);
        break;
    }
    return c;
}

inline ThermalSweep thermal_sweep(const SystemParams& base, const std::vector<double>& nth_grid,
                                  const std::vector<double>& betas, const MasterOptions& opts = {}, int threads = 1) {
    if (nth_grid.empty() || betas.empty()) throw ConfigError("thermal sweep grids must be nonempty");
    const std::size_t nn = nth_grid.size();
    std::vector<double> g2(nn * betas.size());
    parallel_for(g2.size(), threads, [&](std::size_t k) {
        SystemParams p = base.at_beta(betas[k / nn]);
        p.nth = nth_grid[k % nn];
        g2[k] = observables(master_steady_state(p, opts, MasterVariant::thermal)).g2_11;
    });
    ThermalSweep sweep;
    for (std::size_t b = 0; b < betas.size(); ++b) {
        std::vector<double> curve(g2.begin() + static_cast<long>(b * nn), g2.begin() + static_cast<long>((b + 1) * nn));
        for (std::size_t i = 0; i < nn; ++i) sweep.rows.push_back({betas[b], nth_grid[i], curve[i]});
        sweep.crossings.push_back(critical_nth(betas[b], nth_grid, curve));
    }
    return sweep;
}

} // namespace epb
