#include <gtest/gtest.h>

#include <random>

#include "epb/analytic.hpp"

using namespace epb;

namespace {

SystemParams table_resonator(double beta = 0.5 * pi) { return resonator_preset(table_kerr_n2).at_beta(beta); }

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

SystemParams random_point(std::mt19937& rng) {
    std::uniform_real_distribution<double> mod(0.5, 2.0), ph(0.0, two_pi), im(-0.3, 0.0), chi(0.0, 25.0),
        det(-10.0, 10.0), xi(0.0, 0.5);
    SystemParams p;
    p.eps1 = cplx(std::polar(mod(rng), ph(rng)).real(), im(rng));
    p.eps2 = cplx(std::polar(mod(rng), ph(rng)).real(), im(rng));
    p.beta = ph(rng);
    p.chi = chi(rng);
    p.delta0 = det(rng);
    p.xi = xi(rng);
    return p;
}

} // namespace

TEST(Amplitudes, ClosedFormMatchesLinearSolve) {
    std::mt19937 rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const SystemParams p = random_point(rng);
        const AmplitudeSet a = steady_amplitudes(p);
        if (!a.poles.empty()) continue;
        const auto oracle = amplitude_linear_solve(p);
        for (std::size_t i = 0; i < 10; ++i) {
            if (std::abs(oracle[i]) < 1e-280) continue;
            EXPECT_LT(rel(a.c[i], oracle[i]), 1e-10) << "index " << i;
        }
        ++checked;
    }
    EXPECT_GT(checked, 250);
}

TEST(Amplitudes, DriveScaling) {
    const SystemParams p = table_resonator(0.8);
    const AmplitudeSet a = steady_amplitudes(p);
    SystemParams q = p;
    q.xi = 2.0 * p.xi;
    const AmplitudeSet b = steady_amplitudes(q);
    EXPECT_EQ(a(0, 0), cplx(1.0));
    for (int total = 1; total <= 3; ++total)
        for (int m = 0; m <= total; ++m)
            EXPECT_LT(rel(b(m, total - m), std::pow(2.0, total) * a(m, total - m)), 1e-12);
}

TEST(Amplitudes, NoPolesAtResonatorValues) {
    for (double b = 0; b < two_pi; b += 0.05) EXPECT_TRUE(steady_amplitudes(table_resonator(b)).poles.empty());
    std::vector<PoleProximity> poles;
    detail::watch(cplx(1e-12, 0), "probe", poles);
    ASSERT_EQ(poles.size(), 1u);
    EXPECT_EQ(poles[0].site, "probe");
}

TEST(Correlations, ClosedFormG2MatchesAmplitudeRatio) {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const SystemParams p = random_point(rng);
        const AmplitudeSet a = steady_amplitudes(p);
        if (!a.poles.empty() || p.xi == 0.0) continue;
        const double ratio = 2.0 * std::norm(a(2, 0)) / std::pow(std::norm(a(1, 0)), 2);
        EXPECT_NEAR(g2_closed_form(p) / ratio, 1.0, 1e-9);
    }
}

TEST(Correlations, VariantsAgreeAtWeakDrive) {
    SystemParams p = table_resonator(0.7);
    p.xi = 1e-3;
    const auto full = analytic_point(p, CorrelationVariant::full_threephoton).corr;
    const auto approx = analytic_point(p, CorrelationVariant::approximate).corr;
    EXPECT_NEAR(full.g2_11 / approx.g2_11, 1.0, 1e-4);
    EXPECT_NEAR(full.g2_22 / approx.g2_22, 1.0, 1e-4);
    EXPECT_NEAR(full.g2_12 / approx.g2_12, 1.0, 1e-4);
    EXPECT_NEAR(full.g3_11 / approx.g3_11, 1.0, 1e-4);
    EXPECT_NEAR(g2_closed_form(p) / approx.g2_11, 1.0, 1e-6);
}

TEST(Correlations, LinearCavityIsCoherent) {
    // no Kerr, no backscattering: the driven cavity stays coherent
    SystemParams p;
    p.eps1 = p.eps2 = cplx{};
    p.chi = 0;
    p.delta0 = 0.4;
    p.xi = 0.05;
    const auto c = analytic_point(p).corr;
    EXPECT_NEAR(g2_closed_form(p), 1.0, 1e-12);
    EXPECT_NEAR(c.g2_11, 1.0, 1e-2);
}

TEST(Correlations, ResonatorAnchorValues) {
    const auto half = analytic_point(table_resonator(0.5 * pi)).corr;
    EXPECT_NEAR(half.g2_11, 0.014047, 2e-5);
    EXPECT_LT(half.g3_11, 1e-4);
    const auto full = analytic_point(table_resonator(pi)).corr;
    EXPECT_NEAR(full.g2_11, 37.08, 0.05);
    EXPECT_GT(full.g3_11, 100.0);
}

TEST(Spectrum, EmptyCavityLorentzian) {
    SystemParams p;
    p.eps1 = p.eps2 = cplx{};
    p.xi = 1e-4;
    p.spectrum_norm = SpectrumNorm::gamma;
    for (double d : {-2.0, -0.5, 0.0, 0.3, 1.0}) EXPECT_NEAR(spectrum_value(p.at_delta0(d), Mode::cw), 4.0 / (4.0 * d * d + 1.0), 1e-6);
    EXPECT_NEAR(spectrum_value(p, Mode::ccw), 0.0, 1e-12);
    EXPECT_EQ(excitation_spectrum(p, {0.0, 1.0}, Mode::cw).size(), 2u);
    EXPECT_THROW(excitation_spectrum(p, {}, Mode::cw), ConfigError);
}

TEST(Upb, ResonantFormulas) {
    const SystemParams p = table_resonator();
    const auto closed = upb_angles(p, UpbMode::resonant_closed_form);
    ASSERT_EQ(closed.size(), 4u);
    EXPECT_NEAR(closed[0].beta / pi, 0.38553, 1e-4);
    EXPECT_NEAR(closed[1].beta / pi, 0.61447, 1e-4);
    const auto phase = upb_angles(p, UpbMode::resonant_phase);
    ASSERT_EQ(phase.size(), 4u);
    EXPECT_NEAR(phase[0].beta / pi, 0.40451, 1e-4);
    for (const auto& u : phase) EXPECT_NEAR(u.delta0, resonant_delta0(p), 1e-12);
}

TEST(Upb, GeneralCubicZeroesTwoPhotonAmplitude) {
    for (double n2 : {table_kerr_n2, weak_kerr_n2, strong_kerr_n2}) {
        const SystemParams p = resonator_preset(n2);
        const auto pts = upb_angles(p, UpbMode::general_cubic);
        ASSERT_FALSE(pts.empty());
        for (const auto& u : pts) {
            const SystemParams q = p.at_beta(u.beta).at_delta0(u.delta0);
            const double c20 = std::abs(steady_amplitudes(q)(2, 0));
            const double c10 = std::abs(steady_amplitudes(q)(1, 0));
            EXPECT_LT(c20, 1e-10 * c10 * c10) << "beta " << u.beta / pi;
        }
    }
    const auto t = upb_angles(resonator_preset(table_kerr_n2), UpbMode::general_cubic);
    EXPECT_NEAR(t[0].beta / pi, 0.38603, 2e-4);
    EXPECT_NEAR(t[0].delta0, -3.0023, 1e-3);
}

TEST(Upb, AnglesFromCos) {
    const auto a = detail::angles_from_cos(0.0, 1);
    ASSERT_EQ(a.size(), 4u);
    EXPECT_NEAR(a[0], 0.25 * pi, 1e-14);
    EXPECT_NEAR(a[3], 1.75 * pi, 1e-14);
    EXPECT_TRUE(detail::angles_from_cos(1.5, 1).empty());
    EXPECT_EQ(pit_angles(1), (std::vector<double>{0.0, pi}));
}

TEST(Distribution, PoissonHasZeroRelativeDeviation) {
    const double mean = 0.3;
    std::vector<double> p;
    for (int m = 0; m < 6; ++m) p.push_back(std::exp(-mean) * std::pow(mean, m) / std::tgamma(m + 1.0));
    const auto r = relative_distribution(p);
    // the truncated tail shifts the mean slightly
    for (const auto& x : r) ASSERT_TRUE(x.has_value());
    for (const auto& x : r) EXPECT_LT(std::abs(*x), 1e-3);
    EXPECT_THROW(relative_distribution({1.0, 0.0}), ConfigError);
    const auto marg = cw_marginal(analytic_point(table_resonator()).probs);
    double total = 0;
    for (double x : marg) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Transitions, MiddleStateSkipsTheMixedComponent) {
    const SystemParams p = table_resonator(0.3);
    const TransitionElements t = transition_elements(p);
    for (double x : {t.u0, t.u_plus, t.u_minus, t.w0, t.w_plus, t.w_minus}) EXPECT_GE(x, 0.0);
    const auto one = closed_form_eigensystem(p, 1);
    const auto two = closed_form_eigensystem(p, 2);
    const double direct = p.xi * p.xi * std::norm(std::sqrt(2.0) * one.eigenvectors[1](1) * std::conj(two.eigenvectors[1](2)));
    EXPECT_NEAR(t.u0, direct, 1e-14);
}

TEST(Regime, Classification) {
    EXPECT_EQ(classify_regime(0.1, 0.01, {0.2, 0.1, 0.3}).label, Regime::onePB);
    EXPECT_EQ(classify_regime(0.1, 0.01, {0.05, 0.1, 0.3}).label, Regime::none);
    EXPECT_EQ(classify_regime(3.0, 0.5, {1.0, 3.0, 4.0}).label, Regime::twoPB);
    EXPECT_EQ(classify_regime(5.0, 9.0, {2.0, 5.0, 4.0}).label, Regime::PIT);
    EXPECT_EQ(classify_regime(5.0, 9.0, {6.0, 5.0, 4.0}).label, Regime::none);
    const RegimeLabel upb = classify_regime(0.1, 0.01, {0.2, 0.1, 0.3}, 0.39 * pi, {0.38553 * pi});
    EXPECT_TRUE(upb.interference);
    EXPECT_EQ(to_string(upb), "1PB-UPB");
    EXPECT_THROW(classify_regime(1, 1, {1, 1}), ConfigError);
}
