#pragma once

#include <cstddef>
#include <vector>

namespace coarsen {

/// Becker-Doring rate coefficients a_l = a1 l^{1/3}, b_l = a_l (z_s + q l^{-1/3}).
class RateModel {
public:
    RateModel(double a1, double z_s, double q);

    double a1() const noexcept { return a1_; }
    double z_s() const noexcept { return z_s_; }
    double q() const noexcept { return q_; }

    /// Coagulation rate a_l. Throws InvalidArgument for l == 0.
    double attach(std::size_t ell) const;
    /// Evaporation rate b_l. Throws InvalidArgument for l == 0.
    double detach(std::size_t ell) const;

    bool operator==(const RateModel&) const = default;

private:
    double a1_;
    double z_s_;
    double q_;
};

struct ClusterRates {
    double attach;
    double detach;
};

ClusterRates cluster_rates(const RateModel& model, std::size_t ell);

/// Equilibrium coefficients Q_l with Q_1 = 1 and Q_{l+1} b_{l+1} = Q_l a_l.
///
/// Stored as logarithms; Q_l underflows a double well before l = 10^4.
class EquilibriumTable {
public:
    EquilibriumTable(const RateModel& model, std::size_t ell_max);

    std::size_t ell_max() const noexcept { return log_q_.size(); }
    double log_q(std::size_t ell) const;
    double q(std::size_t ell) const;
    /// Equilibrium density Q_l c1^l.
    double density(std::size_t ell, double c1) const;
    /// Full equilibrium profile c_l = Q_l c1^l for l = 1..ell_max (index l-1).
    std::vector<double> profile(double c1) const;

private:
    std::vector<double> log_q_;
};

EquilibriumTable equilibrium_table(const RateModel& model, std::size_t ell_max);

/// rho_crit = sum_l l Q_l z_s^l, truncated once l Q_l z_s^l < tol * partial sum
/// for five consecutive l. Throws SolverFailure if l reaches 10^6 first.
double critical_density(const RateModel& model, double tol);

}  // namespace coarsen
