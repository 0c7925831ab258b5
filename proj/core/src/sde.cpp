#include "coarsen/sde.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

#include "coarsen/errors.hpp"
#include "coarsen/philox.hpp"

namespace coarsen {

namespace {

// Paths are reduced in fixed chunks so sums do not depend on the worker count.
constexpr std::int64_t kChunk = 4096;

struct Partial {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t absorbed = 0;
};

template <class PathFn>
std::vector<Partial> run_chunks(const McConfig& config, PathFn&& path)
{
    const std::int64_t n_chunks = (config.n_paths + kChunk - 1) / kChunk;
    std::vector<Partial> parts(static_cast<std::size_t>(n_chunks));
    auto work = [&](std::int64_t first_chunk, std::int64_t stride) {
        for (std::int64_t k = first_chunk; k < n_chunks; k += stride) {
            Partial p;
            const std::int64_t end = std::min(config.n_paths, (k + 1) * kChunk);
            for (std::int64_t i = k * kChunk; i < end; ++i) {
                const auto [value, absorbed] = path(static_cast<std::uint64_t>(i));
                p.sum += value;
                p.sum_sq += value * value;
                p.absorbed += absorbed ? 1 : 0;
            }
            parts[static_cast<std::size_t>(k)] = p;
        }
    };
    const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(n_chunks)));
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::future<void>> jobs;
        for (int w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, work, w, workers));
        for (auto& j : jobs) j.get();
    }
    return parts;
}

McEstimate reduce(const McConfig& config, const std::vector<Partial>& parts, double scale)
{
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t absorbed = 0;
    for (const auto& p : parts) {
        sum += p.sum;
        sum_sq += p.sum_sq;
        absorbed += p.absorbed;
    }
    const auto n = static_cast<double>(config.n_paths);
    McEstimate e;
    e.n_paths = config.n_paths;
    e.n_absorbed = absorbed;
    e.n_survived = config.n_paths - absorbed;
    const double mean = sum / n;
    const double var = config.n_paths > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    e.mean = scale * mean;
    e.std_error = scale * std::sqrt(var / n);
    return e;
}

}  // namespace

void validate(const McConfig& config)
{
    if (!(config.eps >= 0.0)) throw InvalidArgument("mc.eps must be >= 0");
    if (config.L == nullptr || config.L->empty()) throw InvalidArgument("mc.L history is required");
    if (!(config.T > 0.0)) throw InvalidArgument("mc.T must be positive");
    if (config.n_paths < 1) throw InvalidArgument("mc.n_paths must be >= 1");
    if (!(config.dt > 0.0)) throw InvalidArgument("mc.dt must be positive");
    if (config.workers < 1) throw InvalidArgument("mc.workers must be >= 1");
    const double slack = 1e-12 * std::max(1.0, std::abs(config.t0 + config.T));
    if (config.t0 < config.L->t_begin() - slack || config.t0 + config.T > config.L->t_end() + slack) {
        throw InvalidArgument("mc: [t0, t0 + T] outside the L history");
    }
}

PathResult simulate_path(const McConfig& config, double x_start, std::uint64_t path_index)
{
    if (!(x_start >= 0.0)) throw InvalidArgument("simulate_path: x_start must be >= 0");
    PathResult r;
    if (x_start == 0.0) {
        r.absorbed = true;
        r.exit_time = config.t0;
        return r;
    }
    Philox4x32 rng(config.seed, path_index);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;

    const auto n_steps = static_cast<std::int64_t>(std::ceil(config.T / config.dt - 1e-9));
    const double h = config.T / static_cast<double>(n_steps);
    const double sqrt_h = std::sqrt(h);
    const double noise_scale = std::sqrt(2.0 * config.eps);
    const bool noisy = config.eps > 0.0;
    const auto knots = config.L->times();
    const auto values = config.L->values();
    std::size_t seg = 0;  // knot cursor; t only increases along a path
    auto L_at = [&](double t) {
        while (seg + 2 < knots.size() && t > knots[seg + 1]) ++seg;
        if (knots.size() == 1 || t <= knots[seg]) return values[seg];
        if (t >= knots[seg + 1]) return values[seg + 1];
        const double w = (t - knots[seg]) / (knots[seg + 1] - knots[seg]);
        return values[seg] + w * (values[seg + 1] - values[seg]);
    };

    double x = x_start;
    for (std::int64_t n = 0; n < n_steps; ++n) {
        const double t = config.t0 + static_cast<double>(n) * h;
        const double drift = -(1.0 - std::cbrt(x / L_at(t)));
        double sigma = 0.0;
        double x_next = x + drift * h;
        if (noisy) {
            sigma = noise_scale * std::sqrt(std::cbrt(1.0 + x / config.eps));
            x_next += sigma * sqrt_h * normal(rng);
        }
        if (x_next <= 0.0) {
            r.absorbed = true;
            r.exit_time = t + h * x / (x - x_next);
            return r;
        }
        if (noisy && config.boundary == BoundaryScheme::Bridge) {
            // frozen-coefficient Brownian bridge crossing probability
            const double a = 2.0 * x * x_next / (sigma * sigma * h);
            if (a < 50.0 && uniform(rng) < std::exp(-a)) {
                r.absorbed = true;
                r.exit_time = t + 0.5 * h;
                return r;
            }
        }
        x = x_next;
    }
    r.x_final = x;
    return r;
}

McEstimate estimate_survival_payoff(const McConfig& config, const Payoff& payoff, double x_start)
{
    validate(config);
    const auto parts = run_chunks(config, [&](std::uint64_t i) {
        const auto p = simulate_path(config, x_start, i);
        return std::pair<double, bool>{p.absorbed ? 0.0 : payoff(p.x_final), p.absorbed};
    });
    return reduce(config, parts, 1.0);
}

McEstimate estimate_pairing(const McConfig& config, const Payoff& payoff, const InitialProfile& initial)
{
    validate(config);
    const double N0 = initial.number();
    const auto parts = run_chunks(config, [&](std::uint64_t i) {
        // starting point from a separate stream of the same key
        Philox4x32 start_rng(config.seed, i | (std::uint64_t{1} << 63));
        double u = std::generate_canonical<double, 53>(start_rng);
        u = std::clamp(u, 1e-15, 1.0 - 1e-15);
        const double x = initial.quantile(u);
        const auto p = simulate_path(config, x, i);
        return std::pair<double, bool>{p.absorbed ? 0.0 : payoff(p.x_final), p.absorbed};
    });
    return reduce(config, parts, N0);
}

ExitTimeHistogram exit_time_histogram(const McConfig& config, double x_start, int bins)
{
    validate(config);
    if (bins < 1) throw InvalidArgument("exit_time_histogram: bins must be >= 1");
    ExitTimeHistogram hist;
    const double width = config.T / bins;
    for (int b = 0; b <= bins; ++b) hist.edges.push_back(config.t0 + b * width);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
    std::int64_t absorbed = 0;
    for (std::int64_t i = 0; i < config.n_paths; ++i) {
        const auto p = simulate_path(config, x_start, static_cast<std::uint64_t>(i));
        if (!p.absorbed) continue;
        ++absorbed;
        const auto b = std::clamp<std::int64_t>(static_cast<std::int64_t>((p.exit_time - config.t0) / width), 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    const auto n = static_cast<double>(config.n_paths);
    for (auto c : counts) hist.density.push_back(static_cast<double>(c) / (n * width));
    hist.absorbed_fraction = static_cast<double>(absorbed) / n;
    hist.survival_fraction = 1.0 - hist.absorbed_fraction;
    return hist;
}

}  // namespace coarsen
