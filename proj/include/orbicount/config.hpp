#pragma once

// Numerical tolerances shared by every module. All comparisons in the
// library go through one of these named values.

namespace orbicount {

struct Tolerances {
    // |det - 1| allowed before an isometry is rescaled by 1/sqrt(det).
    double det_drift = 1e-12;
    // Band around |tr| = 2 that is classified as parabolic (or identity).
    double parabolic_band = 1e-9;
    // Residual allowed on every defining relation of a built group.
    double relator_residual = 1e-9;
    // Elliptic rotation angles must match 2*pi/m within this.
    double elliptic_angle = 1e-9;
    // Bisection stopping tolerance on the polygon angle defect.
    double polygon_bisection = 1e-12;
    // A holonomy closer than this (max-norm) to +-I is treated as identity.
    double identity_probe = 1e-6;
    // Equality of translation lengths between symbolic and numeric routes.
    double length_match = 1e-8;

    // Annulus geodesics: Clairaut first integral and unit speed drift.
    double clairaut_drift = 1e-6;
    double energy_drift = 1e-6;
    // Agreement of rho-geodesics with hyperbolic geodesics where phi = sinh.
    double metric_match = 1e-6;
    // Agreement of phi with sinh on [2 delta, 3 delta].
    double sinh_match = 1e-10;
    // Bisection resolution of the quasigeodesic constant.
    double quasi_resolution = 1e-3;

    // Desk-scale counting tolerances.
    double homogeneity = 0.25;
    double exponent_band = 0.4;
};

inline constexpr Tolerances kDefaultTolerances{};

}  // namespace orbicount
