#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "epb/errors.hpp"

namespace epb {

using cplx = std::complex<double>;
using ComplexRate = cplx;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

namespace si {
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double c = 299792458.0;
inline constexpr double kb = 1.380649e-23;
} // namespace si

enum class Coupling { j12, j21 };
enum class LossModel { gamma_only, kappa };
enum class NthConvention { bose_einstein, paper_literal };
enum class SpectrumNorm { kappa, gamma };

/// Map any angle into [0, 2pi).
inline double normalize_angle(double beta) {
    double b = std::fmod(beta, two_pi);
    if (b < 0) b += two_pi;
    if (b >= two_pi) b = 0.0;
    return b;
}

/// All rates in units of gamma.
struct SystemParams {
    ComplexRate eps1{1.5, -0.1};
    ComplexRate eps2{1.485, -0.14};
    int sigma = 1;
    double beta = 0.0;
    double chi = 0.0;
    double delta0 = 0.0;
    double xi = 0.25;
    double gamma = 1.0;
    double nth = 0.0;
    LossModel loss_model = LossModel::gamma_only;
    SpectrumNorm spectrum_norm = SpectrumNorm::kappa;

    SystemParams at_beta(double b) const {
        SystemParams p = *this;
        p.beta = normalize_angle(b);
        return p;
    }
    SystemParams at_delta0(double d) const {
        SystemParams p = *this;
        p.delta0 = d;
        return p;
    }
};

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline void validate(const SystemParams& p) {
    if (!finite(p.eps1)) throw ConfigError("eps1 must be finite");
    if (!finite(p.eps2)) throw ConfigError("eps2 must be finite");
    if (p.sigma < 1) throw ConfigError("sigma must be >= 1");
    if (!std::isfinite(p.beta)) throw ConfigError("beta must be finite");
    if (!(p.beta >= 0.0 && p.beta < two_pi)) throw ConfigError("beta must lie in [0, 2pi)");
    if (!(p.chi >= 0.0) || !std::isfinite(p.chi)) throw ConfigError("chi must be finite and >= 0");
    if (!std::isfinite(p.delta0)) throw ConfigError("delta0 must be finite");
    if (!(p.xi >= 0.0) || !std::isfinite(p.xi)) throw ConfigError("xi must be finite and >= 0");
    if (p.gamma != 1.0) throw ConfigError("gamma is the rate unit and must equal 1");
    if (!(p.nth >= 0.0) || !std::isfinite(p.nth)) throw ConfigError("nth must be finite and >= 0");
}

/// J12 = eps1 + eps2 e^{+i 2 sigma beta}, J21 = eps1 + eps2 e^{-i 2 sigma beta}.
inline std::pair<cplx, cplx> coupling_rates(cplx eps1, cplx eps2, int sigma, double beta) {
    const double phase = 2.0 * sigma * beta;
    const cplx up = std::polar(1.0, phase);
    return {eps1 + eps2 * up, eps1 + eps2 * std::conj(up)};
}

struct DerivedRates {
    cplx j12, j21;
    cplx delta;
    double gamma_prime;
    double kappa;
    cplx delta1, delta2, delta3, delta4;
};

inline DerivedRates derive(const SystemParams& p) {
    DerivedRates r{};
    std::tie(r.j12, r.j21) = coupling_rates(p.eps1, p.eps2, p.sigma, p.beta);
    r.delta = p.delta0 + p.eps1 + p.eps2;
    r.gamma_prime = -(p.eps1 + p.eps2).imag();
    r.kappa = p.gamma + 2.0 * r.gamma_prime;
    r.delta1 = 2.0 * r.delta - cplx(0.0, p.gamma);
    r.delta2 = r.delta1 + 2.0 * p.chi;
    r.delta3 = r.delta1 + 4.0 * p.chi;
    r.delta4 = 3.0 * r.delta3 - 8.0 * p.chi;
    return r;
}

/// Detuning that puts the laser on the bare cavity frequency (Re Delta = 0).
inline double resonant_delta0(const SystemParams& p) { return -(p.eps1 + p.eps2).real(); }

/// chi / gamma from SI material and cavity data, with omega = 2 pi c / lambda and gamma = omega / Q.
inline double kerr_coefficient(double lambda, double n2, double n0, double veff, double q) {
    if (!(lambda > 0) || !(n2 > 0) || !(n0 > 0) || !(veff > 0) || !(q > 0))
        throw ConfigError("kerr_coefficient: all inputs must be positive");
    const double omega = two_pi * si::c / lambda;
    const double chi = si::hbar * omega * omega * si::c * n2 / (n0 * n0 * veff);
    return chi / (omega / q);
}

struct KerrPreset {
    double lambda = 1550e-9;
    double n2;
    double n0 = 1.4;
    double veff = 150e-18;
    double q = 5e9;
    double chi() const { return kerr_coefficient(lambda, n2, n0, veff, q); }
};

inline constexpr double strong_kerr_n2 = 3e-14;
inline constexpr double table_kerr_n2 = 1e-14;
inline constexpr double weak_kerr_n2 = 1e-15;

/// Resonator with the backscattering values used throughout, driven on the bare cavity line.
inline SystemParams resonator_preset(double n2) {
    SystemParams p;
    p.chi = KerrPreset{.n2 = n2}.chi();
    p.delta0 = resonant_delta0(p);
    return p;
}

struct EpAngle {
    double beta;
    Coupling vanishing;
    double refined_beta;
    double min_modulus;
};

namespace detail {

inline double refine_minimum(const auto& f, double lo, double hi) {
    return boost::math::tools::brent_find_minima(f, lo, hi, std::numeric_limits<double>::digits / 2).first;
}

} // namespace detail

/// Phase-condition EP angles plus the grid/Brent minimiser of the flagged coupling modulus.
inline std::vector<EpAngle> ep_angles(cplx eps1, cplx eps2, int sigma, int grid = 4000) {
    if (eps1 == cplx{} || eps2 == cplx{}) return {};
    if (sigma < 1) throw ConfigError("sigma must be >= 1");
    const double darg = std::arg(eps1) - std::arg(eps2);
    const double s2 = 2.0 * sigma;
    std::vector<EpAngle> out;
    for (Coupling which : {Coupling::j21, Coupling::j12}) {
        const double sign = which == Coupling::j21 ? -1.0 : 1.0;
        auto modulus = [&](double b) {
            auto [j12, j21] = coupling_rates(eps1, eps2, sigma, b);
            return std::abs(which == Coupling::j12 ? j12 : j21);
        };
        const double step = two_pi / grid;
        for (int z = -4 * sigma - 1; z <= 4 * sigma + 1; z += 2) {
            const double raw = z * pi / s2 + sign * darg / s2;
            if (raw < 0.0 || raw >= two_pi) continue;
            double best = raw;
            double fbest = modulus(raw);
            const int k0 = static_cast<int>(std::floor(raw / step));
            for (int k = k0 - 2; k <= k0 + 3; ++k) {
                const double b = k * step;
                if (modulus(b) < fbest) {
                    fbest = modulus(b);
                    best = b;
                }
            }
            double refined = detail::refine_minimum(modulus, best - step, best + step);
            refined = normalize_angle(refined);
            out.push_back({raw, which, refined, modulus(refined)});
        }
    }
    std::sort(out.begin(), out.end(), [](const EpAngle& a, const EpAngle& b) { return a.beta < b.beta; });
    return out;
}

/// Mean thermal photon number at the optical frequency 2 pi c / lambda.
inline double nth_from_temperature(double temperature, double lambda, NthConvention conv) {
    if (!(temperature > 0)) throw ConfigError("temperature must be > 0");
    if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
    const double x = si::hbar * two_pi * si::c / (lambda * si::kb * temperature);
    if (conv == NthConvention::paper_literal) return std::exp(-x);
    return 1.0 / std::expm1(x);
}

inline double temperature_from_nth(double nth, double lambda, NthConvention conv) {
    if (!(nth > 0)) return 0.0;
    const double theta = si::hbar * two_pi * si::c / (lambda * si::kb);
    if (conv == NthConvention::paper_literal) {
        if (nth >= 1.0) return INFINITY;
        return theta / -std::log(nth);
    }
    return theta / std::log1p(1.0 / nth);
}

inline std::string to_string(LossModel m) { return m == LossModel::kappa ? "kappa" : "gamma_only"; }
inline std::string to_string(NthConvention c) {
    return c == NthConvention::paper_literal ? "paper_literal" : "bose_einstein";
}
inline std::string to_string(Coupling c) { return c == Coupling::j12 ? "J12" : "J21"; }

} // namespace epb
