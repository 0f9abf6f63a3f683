#pragma once

// ITU-R P.2040 frequency power-law material model and the perpendicular
// polarization Fresnel reflection coefficient.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace refsim {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kSpeedOfLight = 299792458.0;             // m/s

// Power-law constants: eta'(f) = a * f^b, sigma(f) = c * f^d with f in GHz.
struct Material {
    std::string name;
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    bool pec = false;  // perfect electric conductor: reflection -1 regardless of eta

    bool valid() const { return a > 0.0 && c >= 0.0; }
};

// ITU-R P.2040-3 Table 3 constants for the materials used in the hallway.
namespace materials {
inline Material vacuum() { return {"vacuum", 1.0, 0.0, 0.0, 0.0, false}; }
inline Material concrete() { return {"concrete", 5.24, 0.0, 0.0462, 0.7822, false}; }
inline Material plasterboard() { return {"plasterboard", 2.73, 0.0, 0.0085, 0.9395, false}; }
inline Material wood() { return {"wood", 1.99, 0.0, 0.0047, 1.0718, false}; }
inline Material ceiling_board() { return {"ceiling_board", 1.48, 0.0, 0.0011, 1.0750, false}; }
inline Material metal() { return {"metal", 1.0, 0.0, 1e7, 0.0, true}; }
}  // namespace materials

// Relative permittivity eta' and conductivity sigma [S/m] at f_ghz.
inline std::pair<double, double> material_properties(const Material& m, double f_ghz) {
    if (!(f_ghz > 0.0)) throw std::invalid_argument("material_properties: frequency must be > 0");
    return {m.a * std::pow(f_ghz, m.b), m.c * std::pow(f_ghz, m.d)};
}

// eta = eta' - j sigma / (2 pi f eps0); imaginary part <= 0 for sigma >= 0.
inline std::complex<double> complex_permittivity(double eta_prime, double sigma, double f_hz) {
    if (!(f_hz > 0.0)) throw std::invalid_argument("complex_permittivity: frequency must be > 0");
    return {eta_prime, -sigma / (2.0 * 3.141592653589793238462643 * f_hz * kVacuumPermittivity)};
}

// Perpendicular-polarization Fresnel coefficient for incidence from vacuum,
// cos_theta_i measured from the surface normal.
inline std::complex<double> fresnel_reflection(const std::complex<double>& eta,
                                               double cos_theta_i) {
    if (!(cos_theta_i > 0.0) || cos_theta_i > 1.0) {
        throw std::invalid_argument("fresnel_reflection: cos_theta_i must be in (0, 1]");
    }
    const double sin2 = 1.0 - cos_theta_i * cos_theta_i;
    const std::complex<double> root = std::sqrt(eta - sin2);
    return (cos_theta_i - root) / (cos_theta_i + root);
}

// Coefficient for a Material at frequency f_hz; PEC short-circuits to -1.
inline std::complex<double> reflection_coefficient(const Material& m, double f_hz,
                                                   double cos_theta_i) {
    if (m.pec) return {-1.0, 0.0};
    const auto [eta_prime, sigma] = material_properties(m, f_hz / 1e9);
    return fresnel_reflection(complex_permittivity(eta_prime, sigma, f_hz), cos_theta_i);
}

}  // namespace refsim
