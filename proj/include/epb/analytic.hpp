#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "epb/hilbert.hpp"
#include "epb/params.hpp"
#include "epb/spectra.hpp"

namespace epb {

inline constexpr double pole_threshold = 1e-9;

struct PoleProximity {
    std::string site;
    double magnitude;
};

/// Index of |m,n> (m+n <= 3) in the fixed ten-state layout used by the weak-drive expansion.
inline constexpr int amp_index(int m, int n) {
    const int total = m + n;
    return total * (total + 1) / 2 + m;
}

struct AmplitudeSet {
    std::array<cplx, 10> c{};
    cplx eta1, eta2, eta3, mu, gamma1, gamma2;
    std::vector<PoleProximity> poles;

    cplx operator()(int m, int n) const { return c[static_cast<std::size_t>(amp_index(m, n))]; }
};

namespace detail {

inline cplx watch(cplx den, const char* site, std::vector<PoleProximity>& poles) {
    if (std::abs(den) < pole_threshold) poles.push_back({site, std::abs(den)});
    return den;
}

} // namespace detail

/// Weak-drive steady-state amplitudes through three excitations, C00 = 1.
inline AmplitudeSet steady_amplitudes(const SystemParams& p) {
    validate(p);
    const DerivedRates r = derive(p);
    const double xi = p.xi, chi = p.chi;
    const cplx j21 = r.j21, prod = r.j12 * r.j21;
    const cplx d1 = r.delta1, d2 = r.delta2, d3 = r.delta3, d4 = r.delta4;
    const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0), s6 = std::sqrt(6.0);

    AmplitudeSet a;
    auto& poles = a.poles;
    a.eta1 = 4.0 * prod - d1 * d1;
    a.eta2 = 4.0 * prod - d1 * d2;
    a.eta3 = 4.0 * prod - d3 * d4;
    a.mu = 16.0 * prod * d3 * d3 - a.eta3 * a.eta3;
    detail::watch(d2, "delta2", poles);
    detail::watch(d3, "delta3", poles);
    const cplx e1 = detail::watch(a.eta1, "eta1", poles);
    const cplx e12 = detail::watch(a.eta1 * a.eta2, "eta1*eta2", poles);
    const cplx mu = detail::watch(a.mu, "mu", poles);

    a.gamma1 = d1 * d1 * a.eta3 + chi * (4.0 * prod * a.eta3 + a.mu) / d2 -
               d3 * (d1 + d2) * (4.0 * prod * d3 - d2 * a.eta3) / d2;
    a.gamma2 = d3 * a.eta3 + 2.0 * d3 * d4 * (4.0 * chi + d4) - d3 * (8.0 * prod * d1 + d1 * a.eta3) / d2;

    auto& c = a.c;
    auto at = [&](int m, int n) -> cplx& { return c[static_cast<std::size_t>(amp_index(m, n))]; };
    const double x2 = xi * xi, x3 = x2 * xi;
    at(0, 0) = 1.0;
    at(1, 0) = 2.0 * xi * d1 / e1;
    at(0, 1) = -4.0 * xi * j21 / e1;
    at(2, 0) = 2.0 * s2 * x2 * (d1 * d1 + 4.0 * prod * chi / d2) / e12;
    at(1, 1) = -4.0 * j21 * x2 * (d1 + d2) / e12;
    at(0, 2) = 4.0 * s2 * j21 * j21 * x2 * (d1 / d2 + 1.0) / e12;
    at(3, 0) = -4.0 * s6 * x3 * (4.0 * prod * a.gamma1 + a.mu * d1 * d1) / (3.0 * mu * e12 * d3);
    at(2, 1) = 8.0 * s2 * j21 * x3 * (a.gamma1 - chi * a.mu / d2) / (mu * e12);
    at(1, 2) = 8.0 * s2 * j21 * j21 * x3 * a.gamma2 / (mu * e12);
    at(0, 3) = -2.0 * j21 * at(1, 2) / (s3 * d3);
    return a;
}

/// Direct dense solve of the nine steady-state amplitude equations (C00 = 1 moved to the right side).
inline std::array<cplx, 10> amplitude_linear_solve(const SystemParams& p) {
    const DerivedRates r = derive(p);
    const double xi = p.xi;
    const cplx j12 = r.j12, j21 = r.j21;
    const cplx d1 = r.delta1, d2 = r.delta2, d3 = r.delta3, d4 = r.delta4;
    const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
    // unknown order: C10 C01 C20 C11 C02 C30 C21 C12 C03
    enum { c10, c01, c20, c11, c02, c30, c21, c12, c03 };
    Eigen::Matrix<cplx, 9, 9> a = Eigen::Matrix<cplx, 9, 9>::Zero();
    Eigen::Matrix<cplx, 9, 1> b = Eigen::Matrix<cplx, 9, 1>::Zero();
    a(0, c10) = d1, a(0, c01) = 2.0 * j12, b(0) = -2.0 * xi;
    a(1, c01) = d1, a(1, c10) = 2.0 * j21;
    a(2, c20) = d2, a(2, c11) = s2 * j12, a(2, c10) = s2 * xi;
    a(3, c11) = d1, a(3, c20) = s2 * j21, a(3, c02) = s2 * j12, a(3, c01) = xi;
    a(4, c02) = d2, a(4, c11) = s2 * j21;
    a(5, c30) = 3.0 * d3, a(5, c21) = 2.0 * s3 * j12, a(5, c20) = 2.0 * s3 * xi;
    a(6, c21) = d4, a(6, c30) = 2.0 * s3 * j21, a(6, c12) = 4.0 * j12, a(6, c11) = 2.0 * s2 * xi;
    a(7, c12) = d4, a(7, c21) = 4.0 * j21, a(7, c03) = 2.0 * s3 * j12, a(7, c02) = 2.0 * xi;
    a(8, c03) = 3.0 * d3, a(8, c12) = 2.0 * s3 * j21;
    Eigen::Matrix<cplx, 9, 1> x = a.partialPivLu().solve(b);
    std::array<cplx, 10> out{};
    out[amp_index(0, 0)] = 1.0;
    const std::array<std::pair<int, int>, 9> order{{{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}}};
    for (int i = 0; i < 9; ++i) out[static_cast<std::size_t>(amp_index(order[i].first, order[i].second))] = x(i);
    return out;
}

struct ProbabilitySet {
    std::array<double, 10> p{};
    double normalization = 1.0;

    double operator()(int m, int n) const { return p[static_cast<std::size_t>(amp_index(m, n))]; }
};

inline ProbabilitySet probabilities(const AmplitudeSet& amps) {
    ProbabilitySet ps;
    double total = 0;
    for (std::size_t i = 0; i < 10; ++i) total += std::norm(amps.c[i]);
    ps.normalization = total;
    for (std::size_t i = 0; i < 10; ++i) ps.p[i] = std::norm(amps.c[i]) / total;
    return ps;
}

enum class CorrelationVariant { full_threephoton, approximate };

struct CorrelationSet {
    double g2_11 = 0, g2_22 = 0, g2_12 = 0, g3_11 = 0, g3_22 = 0;
    CorrelationVariant variant = CorrelationVariant::full_threephoton;
};

namespace detail {

inline double ratio(double num, double den) {
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

} // namespace detail

/// Equal-time correlations from moments of the N <= 3 distribution, or their leading-order forms.
inline CorrelationSet correlations(const ProbabilitySet& ps, CorrelationVariant v = CorrelationVariant::full_threephoton) {
    CorrelationSet cs;
    cs.variant = v;
    if (v == CorrelationVariant::approximate) {
        const double p10 = ps(1, 0), p01 = ps(0, 1);
        cs.g2_11 = detail::ratio(2.0 * ps(2, 0), p10 * p10);
        cs.g2_22 = detail::ratio(2.0 * ps(0, 2), p01 * p01);
        cs.g2_12 = detail::ratio(ps(1, 1), p10 * p01);
        cs.g3_11 = detail::ratio(6.0 * ps(3, 0), p10 * p10 * p10);
        cs.g3_22 = detail::ratio(6.0 * ps(0, 3), p01 * p01 * p01);
        return cs;
    }
    double m1 = 0, n1 = 0, mm = 0, nn = 0, mn = 0, mmm = 0, nnn = 0;
    for (int total = 0; total <= 3; ++total)
        for (int m = 0; m <= total; ++m) {
            const int n = total - m;
            const double pr = ps(m, n);
            m1 += m * pr;
            n1 += n * pr;
            mm += m * (m - 1) * pr;
            nn += n * (n - 1) * pr;
            mn += m * n * pr;
            mmm += m * (m - 1) * (m - 2) * pr;
            nnn += n * (n - 1) * (n - 2) * pr;
        }
    cs.g2_11 = detail::ratio(mm, m1 * m1);
    cs.g2_22 = detail::ratio(nn, n1 * n1);
    cs.g2_12 = detail::ratio(mn, m1 * n1);
    cs.g3_11 = detail::ratio(mmm, m1 * m1 * m1);
    cs.g3_22 = detail::ratio(nnn, n1 * n1 * n1);
    return cs;
}

/// g2_11 ~ |eta1|^2 |Delta1^2 + 4 J12 J21 chi / Delta2|^2 / (|Delta1|^4 |eta2|^2).
inline double g2_closed_form(const SystemParams& p) {
    const DerivedRates r = derive(p);
    const cplx prod = r.j12 * r.j21;
    const cplx eta1 = 4.0 * prod - r.delta1 * r.delta1;
    const cplx eta2 = 4.0 * prod - r.delta1 * r.delta2;
    const cplx inner = r.delta1 * r.delta1 + 4.0 * prod * p.chi / r.delta2;
    return std::norm(eta1) * std::norm(inner) / (std::norm(r.delta1 * r.delta1) * std::norm(eta2));
}

/// Mean photon number normalised by n0 = xi^2/kappa^2 (or xi^2/gamma^2).
inline double spectrum_value(const SystemParams& p, Mode mode) {
    const ProbabilitySet ps = probabilities(steady_amplitudes(p));
    double mean = 0;
    for (int total = 0; total <= 3; ++total)
        for (int m = 0; m <= total; ++m) mean += (mode == Mode::cw ? m : total - m) * ps(m, total - m);
    const double rate = p.spectrum_norm == SpectrumNorm::kappa ? derive(p).kappa : p.gamma;
    const double n0 = p.xi * p.xi / (rate * rate);
    return detail::ratio(mean, n0);
}

inline std::vector<std::pair<double, double>> excitation_spectrum(const SystemParams& base,
                                                                 const std::vector<double>& delta0_grid, Mode mode) {
    if (delta0_grid.empty()) throw ConfigError("detuning grid is empty");
    std::vector<std::pair<double, double>> out;
    for (double d : delta0_grid) out.emplace_back(d, spectrum_value(base.at_delta0(d), mode));
    return out;
}

enum class UpbMode { resonant_closed_form, resonant_phase, general_cubic };

struct UpbPoint {
    double beta;
    double re_delta;
    double delta0;
};

namespace detail {

struct UpbCoefficients {
    double d1, d2, d3, d4, kappa;
};

inline UpbCoefficients upb_coefficients(const SystemParams& p) {
    const double r1 = p.eps1.real(), i1 = p.eps1.imag(), r2 = p.eps2.real(), i2 = p.eps2.imag();
    return {r1 * r1 - i1 * i1 + r2 * r2 - i2 * i2, 2.0 * r1 * r2 - 2.0 * i1 * i2, 2.0 * r1 * i1 + 2.0 * r2 * i2,
            2.0 * (r1 * i2 + i1 * r2), derive(p).kappa};
}

/// All beta in [0, 2pi) with cos(2 sigma beta) = c.
inline std::vector<double> angles_from_cos(double c, int sigma) {
    std::vector<double> out;
    if (!(c >= -1.0 && c <= 1.0)) return out;
    const double half = std::acos(c) / (2.0 * sigma);
    for (int p = 0; p <= 2 * sigma; ++p)
        for (double s : {-1.0, 1.0}) {
            const double b = p * pi / sigma + s * half;
            if (b < 0.0 || b >= two_pi) continue;
            bool dup = false;
            for (double o : out) dup = dup || std::abs(o - b) < 1e-14;
            if (!dup) out.push_back(b);
        }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/// Angles where the two-photon amplitude C20 vanishes (or is minimised at resonance).
inline std::vector<UpbPoint> upb_angles(const SystemParams& p, UpbMode mode) {
    const auto k = detail::upb_coefficients(p);
    const double res = resonant_delta0(p);
    std::vector<UpbPoint> out;
    if (mode == UpbMode::resonant_closed_form) {
        if (k.d2 == 0.0) return out;
        for (double b : detail::angles_from_cos((k.kappa * k.kappa / 2.0 - k.d1) / k.d2, p.sigma))
            out.push_back({b, 0.0, res});
        return out;
    }
    if (mode == UpbMode::resonant_phase) {
        if (k.d4 == 0.0 || p.chi <= 0.0) return out;
        const double c = -(k.d3 + k.kappa * k.kappa * k.kappa / (4.0 * p.chi)) / k.d4;
        for (double b : detail::angles_from_cos(c, p.sigma)) out.push_back({b, 0.0, res});
        return out;
    }
    if (k.d4 == 0.0 || p.chi <= 0.0) return out;
    const double chi = p.chi, kap = k.kappa, q = k.d2 / k.d4;
    const double a2 = chi + 1.5 * kap * q;
    const double a1 = -0.75 * kap * kap + chi * kap * q;
    const double a0 = 0.5 * chi * (k.d1 - k.d2 * k.d3 / k.d4) - kap * kap * kap * q / 8.0 - 0.25 * chi * kap * kap;
    Eigen::Matrix3d companion;
    companion << -a2, -a1, -a0, 1, 0, 0, 0, 1, 0;
    Eigen::EigenSolver<Eigen::Matrix3d> es(companion, false);
    std::vector<double> roots;
    for (int i = 0; i < 3; ++i) {
        const cplx z = es.eigenvalues()(i);
        if (std::abs(z.imag()) > 1e-9 * std::max(1.0, std::abs(z))) continue;
        // polish on the real axis
        double x = z.real();
        for (int it = 0; it < 3; ++it) {
            const double f = ((x + a2) * x + a1) * x + a0, df = (3.0 * x + 2.0 * a2) * x + a1;
            if (df != 0.0) x -= f / df;
        }
        roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    for (double x : roots) {
        const double c = (3.0 * kap * x * x + 2.0 * chi * kap * x - chi * k.d3 - kap * kap * kap / 4.0) / (chi * k.d4);
        for (double b : detail::angles_from_cos(c, p.sigma)) out.push_back({b, x, x + res});
    }
    std::sort(out.begin(), out.end(), [](const UpbPoint& a, const UpbPoint& b) { return a.beta < b.beta; });
    return out;
}

inline std::vector<double> pit_angles(int sigma) {
    if (sigma < 1) throw ConfigError("sigma must be >= 1");
    std::vector<double> out;
    for (int p = 0; p < 2 * sigma; ++p) out.push_back(p * pi / sigma);
    return out;
}

struct TransitionElements {
    double u0, u_plus, u_minus, w0, w_plus, w_minus;
};

/// |<psi2^s| H_D |psi1^->|^2 (u) and |<psi2^s| H_D |psi1^+>|^2 (w) from the normalised closed-form vectors.
inline TransitionElements transition_elements(const SystemParams& p) {
    const SubspaceEigensystem one = closed_form_eigensystem(p, 1);
    const SubspaceEigensystem two = closed_form_eigensystem(p, 2);
    const double s2 = std::sqrt(2.0);
    // one-photon block order: |0,1>, |1,0>; two-photon: |0,2>, |1,1>, |2,0>
    auto element = [&](const Vector& psi1, const Vector& psi2) {
        return p.xi * p.xi * std::norm(psi1(0) * std::conj(psi2(1)) + s2 * psi1(1) * std::conj(psi2(2)));
    };
    const Vector& plus = one.eigenvectors[0];
    const Vector& minus = one.eigenvectors[1];
    return {element(minus, two.eigenvectors[1]), element(minus, two.eigenvectors[0]), element(minus, two.eigenvectors[2]),
            element(plus, two.eigenvectors[1]),  element(plus, two.eigenvectors[0]),  element(plus, two.eigenvectors[2])};
}

/// CW photon-number marginal P(m) of the weak-drive distribution.
inline std::vector<double> cw_marginal(const ProbabilitySet& ps) {
    std::vector<double> out(4, 0.0);
    for (int total = 0; total <= 3; ++total)
        for (int m = 0; m <= total; ++m) out[static_cast<std::size_t>(m)] += ps(m, total - m);
    return out;
}

/// R(m) = (P_m - Poisson_m) / Poisson_m for a Poisson law of the same mean; nullopt where Poisson_m underflows.
inline std::vector<std::optional<double>> relative_distribution(const std::vector<double>& marginal) {
    double mean = 0;
    for (std::size_t m = 0; m < marginal.size(); ++m) mean += static_cast<double>(m) * marginal[m];
    if (!(mean > 0)) throw ConfigError("relative_distribution needs a positive mean photon number");
    std::vector<std::optional<double>> out;
    for (std::size_t m = 0; m < marginal.size(); ++m) {
        const double logp = static_cast<double>(m) * std::log(mean) - mean - std::lgamma(static_cast<double>(m) + 1.0);
        if (logp < -700.0) {
            out.emplace_back(std::nullopt);
            continue;
        }
        const double poisson = std::exp(logp);
        out.emplace_back((marginal[m] - poisson) / poisson);
    }
    return out;
}

enum class Regime { onePB, twoPB, PIT, UPB, none };

struct RegimeLabel {
    Regime label = Regime::none;
    bool interference = false;
    double g2 = 0, g3 = 0;
    bool local_min = false, local_max = false;
};

inline std::string to_string(const RegimeLabel& r) {
    switch (r.label) {
    case Regime::onePB:
        return r.interference ? "1PB-UPB" : "1PB";
    case Regime::twoPB:
        return "2PB";
    case Regime::PIT:
        return "PIT";
    case Regime::UPB:
        return "UPB";
    case Regime::none:
        break;
    }
    return "none";
}

inline constexpr double extremum_rel_tol = 1e-6;
inline constexpr double upb_match_tol = 0.02 * pi;

/// Applies 2PB, then 1PB, then PIT. `stencil` holds g2 at the left, centre and right points.
inline RegimeLabel classify_regime(double g2, double g3, const std::vector<double>& stencil,
                                   std::optional<double> beta = std::nullopt,
                                   const std::vector<double>& upb_betas = {}) {
    if (stencil.size() < 3) throw ConfigError("classify_regime needs a stencil of at least 3 points");
    const std::size_t c = stencil.size() / 2;
    const double centre = stencil[c];
    const double tol = extremum_rel_tol * std::abs(centre);
    RegimeLabel r;
    r.g2 = g2;
    r.g3 = g3;
    r.local_min = centre <= stencil[c - 1] + tol && centre <= stencil[c + 1] + tol;
    r.local_max = centre >= stencil[c - 1] - tol && centre >= stencil[c + 1] - tol;
    if (g2 > 1.0 && g3 < 1.0) {
        r.label = Regime::twoPB;
    } else if (g2 < 1.0 && r.local_min) {
        r.label = Regime::onePB;
        if (beta)
            for (double b : upb_betas) r.interference = r.interference || std::abs(*beta - b) < upb_match_tol;
    } else if (g2 > 1.0 && g3 > 1.0 && r.local_max) {
        r.label = Regime::PIT;
    }
    return r;
}

/// Analytic observables at one parameter point.
struct AnalyticPoint {
    AmplitudeSet amps;
    ProbabilitySet probs;
    CorrelationSet corr;
};

inline AnalyticPoint analytic_point(const SystemParams& p, CorrelationVariant v = CorrelationVariant::full_threephoton) {
    AnalyticPoint a;
    a.amps = steady_amplitudes(p);
    a.probs = probabilities(a.amps);
    a.corr = correlations(a.probs, v);
    return a;
}

} // namespace epb
