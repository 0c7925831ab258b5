#include "coarsen/rates.hpp"

#include <cmath>
#include <string>

#include "coarsen/errors.hpp"

namespace coarsen {

RateModel::RateModel(double a1, double z_s, double q) : a1_(a1), z_s_(z_s), q_(q)
{
    // q = 0 is admitted as the degenerate model b_l = a_l z_s.
    if (!(a1 > 0.0) || !(z_s > 0.0) || !(q >= 0.0)) {
        throw InvalidArgument("RateModel requires a1 > 0, z_s > 0, q >= 0");
    }
}

double RateModel::attach(std::size_t ell) const
{
    if (ell == 0) throw InvalidArgument("cluster size must be >= 1");
    return a1_ * std::cbrt(static_cast<double>(ell));
}

double RateModel::detach(std::size_t ell) const
{
    if (ell == 0) throw InvalidArgument("cluster size must be >= 1");
    const double l13 = std::cbrt(static_cast<double>(ell));
    return a1_ * l13 * (z_s_ + q_ / l13);
}

ClusterRates cluster_rates(const RateModel& model, std::size_t ell)
{
    return {model.attach(ell), model.detach(ell)};
}

EquilibriumTable::EquilibriumTable(const RateModel& model, std::size_t ell_max)
{
    if (ell_max < 2) throw InvalidArgument("equilibrium table needs ell_max >= 2");
    log_q_.resize(ell_max);
    log_q_[0] = 0.0;
    for (std::size_t ell = 1; ell < ell_max; ++ell) {
        log_q_[ell] = log_q_[ell - 1] + std::log(model.attach(ell)) - std::log(model.detach(ell + 1));
    }
}

double EquilibriumTable::log_q(std::size_t ell) const
{
    if (ell == 0 || ell > log_q_.size()) {
        throw InvalidArgument("equilibrium index " + std::to_string(ell) + " out of range");
    }
    return log_q_[ell - 1];
}

double EquilibriumTable::q(std::size_t ell) const { return std::exp(log_q(ell)); }

double EquilibriumTable::density(std::size_t ell, double c1) const
{
    if (c1 <= 0.0) return 0.0;
    return std::exp(log_q(ell) + static_cast<double>(ell) * std::log(c1));
}

std::vector<double> EquilibriumTable::profile(double c1) const
{
    std::vector<double> c(log_q_.size());
    for (std::size_t ell = 1; ell <= c.size(); ++ell) c[ell - 1] = density(ell, c1);
    return c;
}

EquilibriumTable equilibrium_table(const RateModel& model, std::size_t ell_max)
{
    return EquilibriumTable(model, ell_max);
}

double critical_density(const RateModel& model, double tol)
{
    if (!(tol > 0.0)) throw InvalidArgument("critical_density: tol must be positive");
    constexpr std::size_t hard_cap = 1'000'000;
    constexpr int needed_small = 5;

    const double log_zs = std::log(model.z_s());
    double log_q = 0.0;
    double sum = 0.0;
    int small_run = 0;
    for (std::size_t ell = 1; ell <= hard_cap; ++ell) {
        if (ell > 1) {
            log_q += std::log(model.attach(ell - 1)) - std::log(model.detach(ell));
        }
        const double l = static_cast<double>(ell);
        const double term = l * std::exp(log_q + l * log_zs);
        sum += term;
        small_run = (term < tol * sum) ? small_run + 1 : 0;
        if (small_run >= needed_small) return sum;
    }
    throw SolverFailure("critical_density: series did not converge by l = 10^6");
}

}  // namespace coarsen
