#include "zorba/bounds.hpp"

#include <cmath>

namespace zorba {

namespace {

double cube(double x) { return x * x * x; }

// Coefficient of lambda inside omega: 3*L*eta^2*(d+Q-1)*N / (2Q).
double omega_slope(const BoundConstants& k) {
    return 3.0 * k.L_smooth * k.eta * k.eta * (k.d + k.Q - 1.0) * k.N / (2.0 * k.Q);
}

// Coefficient of lambda inside phi: d*eta^2*N*L*(kappa+2) / (2(d+2)).
double phi_slope(const BoundConstants& k) {
    return k.d * k.eta * k.eta * k.N * k.L_smooth * (k.kappa + 2.0) / (2.0 * (k.d + 2.0));
}

double theta1(const BoundConstants& k) {
    const double zo_term = 0.25 * k.mu * k.mu * k.L_smooth * k.L_smooth * k.eta *
                           cube(k.d + 3.0) * k.N;
    const double variance_coeff =
        3.0 * k.L_smooth * k.eta * k.eta * (k.d + k.Q - 1.0) * k.N / (2.0 * k.Q);
    return zo_term + (k.eta * k.N + variance_coeff) * k.sigma_G * k.sigma_G +
           variance_coeff * k.sigma * k.sigma;
}

double theta2(const BoundConstants& k) {
    const double hetero = k.eta * k.N *
                          (k.sigma_G * k.sigma_G +
                           0.25 * k.mu * k.mu * k.L_smooth * k.L_smooth * cube(k.d + 3.0));
    const double curvature = k.d * k.eta * k.eta * k.L_smooth * (k.kappa + 2.0) * k.sigma *
                             k.sigma / (2.0 * (k.d + 2.0));
    return hetero + curvature;
}

}  // namespace

double omega_t1(double lambda, const BoundConstants& k) {
    return k.eta / 2.0 - omega_slope(k) * lambda;
}

double phi_t2(double lambda, const BoundConstants& k) {
    return k.eta / 2.0 - phi_slope(k) * lambda;
}

double bias_term_t1(double lambda, const BoundConstants& k) {
    k.validate();
    if (lambda < 0.0) throw std::invalid_argument("bias_term_t1: lambda must be >= 0");
    // Keeps omega >= eta/4 on the whole feasible range lambda <= N.
    const double eta_max = k.Q / (6.0 * k.L_smooth * (k.d + k.Q - 1.0) * k.N * k.N);
    if (k.eta > eta_max)
        throw std::domain_error("bias_term_t1: step size violates the bound's condition");
    const double denom = omega_t1(lambda, k);
    if (denom <= 0.0) throw std::domain_error("bias_term_t1: descent margin non-positive");
    return theta1(k) * lambda / denom;
}

double bias_term_t2(double lambda, const BoundConstants& k) {
    k.validate();
    if (lambda < 0.0) throw std::invalid_argument("bias_term_t2: lambda must be >= 0");
    // Keeps phi >= eta/4 on the whole feasible range lambda <= N.
    const double eta_max =
        (k.d + 2.0) / (2.0 * k.L_smooth * k.d * k.N * k.N * (k.kappa + 2.0));
    if (k.eta > eta_max)
        throw std::domain_error("bias_term_t2: step size violates the bound's condition");
    const double denom = phi_t2(lambda, k);
    if (denom <= 0.0) throw std::domain_error("bias_term_t2: descent margin non-positive");
    return theta2(k) * lambda / denom;
}

}  // namespace zorba
