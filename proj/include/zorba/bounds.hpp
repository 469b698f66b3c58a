#pragma once

#include <stdexcept>

namespace zorba {

/// Constants entering the convergence-bound evaluators. All must be
/// positive; none are estimated from data here, callers supply them.
struct BoundConstants {
    double eta = 5e-5;      // learning rate
    double d = 1;           // model dimension
    double N = 1;           // number of clients
    double Q = 1;           // perturbations per round
    double L_smooth = 1;    // smoothness constant
    double kappa = 1;       // Hessian effective rank
    double mu = 1e-4;       // smoothing constant
    double sigma = 1;       // stochastic-gradient variance bound
    double sigma_G = 1;     // client-dissimilarity bound

    void validate() const {
        if (eta <= 0 || d <= 0 || N <= 0 || Q <= 0 || L_smooth <= 0 || kappa <= 0 || mu <= 0 ||
            sigma <= 0 || sigma_G <= 0)
            throw std::invalid_argument("BoundConstants: all constants must be positive");
    }
};

/// Descent margin of the standard bound: eta/2 - 3*L*eta^2*(d+Q-1)*N/(2Q) * lambda.
double omega_t1(double lambda, const BoundConstants& k);

/// Descent margin of the dimension-free bound:
/// eta/2 - d*eta^2*N*L*(kappa+2)/(2(d+2)) * lambda.
double phi_t2(double lambda, const BoundConstants& k);

/// Non-diminishing bias of the standard bound, Theta1 * lambda / omega(lambda).
/// Requires a step size small enough that omega stays positive for every
/// feasible lambda <= N; throws std::domain_error otherwise.
double bias_term_t1(double lambda, const BoundConstants& k);

/// Non-diminishing bias of the dimension-free bound,
/// Theta2 * lambda / phi(lambda). Requires
/// eta <= (d+2) / (2*L*d*N^2*(kappa+2)); throws std::domain_error otherwise.
double bias_term_t2(double lambda, const BoundConstants& k);

}  // namespace zorba
