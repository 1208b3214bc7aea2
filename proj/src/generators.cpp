#include "sqmean/generators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sqmean {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

double gaussian_cdf(double x, double mean, double sigma) {
    return 0.5 * std::erfc((mean - x) / (sigma * std::sqrt(2.0)));
}

// One-sided families on (lo, inf): cell [lo + k*step, lo + (k+1)*step) gets
// its mass at the midpoint; everything from the last cell boundary up goes
// to the cap point.
template <typename Cdf>
FiniteDistribution discretize_one_sided(double lo, double step, double cap, Cdf cdf) {
    require(step > 0.0, "generator: step must be positive");
    require(cap > lo + step, "generator: cap must leave room for at least one cell");
    auto cells = static_cast<std::size_t>(std::floor((cap - lo) / step));
    std::vector<double> support, weights;
    support.reserve(cells + 1);
    weights.reserve(cells + 1);
    double prev = cdf(lo);
    for (std::size_t k = 0; k < cells; ++k) {
        double right = lo + static_cast<double>(k + 1) * step;
        double cur = cdf(right);
        support.push_back(lo + (static_cast<double>(k) + 0.5) * step);
        weights.push_back(std::max(cur - prev, 0.0));
        prev = cur;
    }
    support.push_back(cap);
    weights.push_back(std::max(1.0 - prev, 0.0));
    return FiniteDistribution(std::move(support), std::move(weights));
}

double get_number(const nlohmann::json& spec, const char* key) {
    if (!spec.contains(key))
        throw std::invalid_argument(std::string("generator: missing field '") + key + "'");
    if (!spec[key].is_number())
        throw std::invalid_argument(std::string("generator: field '") + key +
                                    "' must be a number");
    return spec[key].get<double>();
}

}  // namespace

FiniteDistribution uniform_grid(double lo, double hi, std::size_t count) {
    require(count >= 1, "uniform_grid: count must be at least 1");
    require(lo <= hi, "uniform_grid: lo must not exceed hi");
    std::vector<double> support, weights;
    if (count == 1) {
        support.push_back(lo);
        weights.push_back(1.0);
    } else {
        double stride = (hi - lo) / static_cast<double>(count - 1);
        for (std::size_t i = 0; i < count; ++i) {
            support.push_back(i + 1 == count ? hi : lo + static_cast<double>(i) * stride);
            weights.push_back(1.0);
        }
    }
    return FiniteDistribution(std::move(support), std::move(weights));
}

FiniteDistribution two_point(double lo, double hi, double p_hi) {
    require(lo < hi, "two_point: lo must be below hi");
    require(p_hi >= 0.0 && p_hi <= 1.0, "two_point: p must lie in [0, 1]");
    return FiniteDistribution({lo, hi}, {1.0 - p_hi, p_hi});
}

FiniteDistribution discretized_gaussian(double mean, double sigma, double step, double cap) {
    require(sigma > 0.0, "discretized_gaussian: sigma must be positive");
    require(step > 0.0, "discretized_gaussian: step must be positive");
    require(cap >= step, "discretized_gaussian: cap must be at least one step");
    // Lattice mean + k*step for |k*step| <= cap; the edge points absorb the
    // tails, so total mass is exactly 1.
    auto half = static_cast<long long>(std::floor(cap / step));
    std::vector<double> support, weights;
    double prev = 0.0;
    for (long long k = -half; k <= half; ++k) {
        double x = mean + static_cast<double>(k) * step;
        double right = k == half ? 1.0 : gaussian_cdf(x + step / 2.0, mean, sigma);
        support.push_back(x);
        weights.push_back(std::max(right - prev, 0.0));
        prev = right;
    }
    return FiniteDistribution(std::move(support), std::move(weights));
}

FiniteDistribution discretized_lognormal(double mu, double sigma, double step, double cap) {
    require(sigma > 0.0, "discretized_lognormal: sigma must be positive");
    auto cdf = [&](double x) {
        return x <= 0.0 ? 0.0 : gaussian_cdf(std::log(x), mu, sigma);
    };
    return discretize_one_sided(0.0, step, cap, cdf);
}

FiniteDistribution discretized_pareto(double alpha, double x_min, double step, double cap) {
    require(alpha > 2.0, "discretized_pareto: alpha must exceed 2");
    require(x_min > 0.0, "discretized_pareto: x_min must be positive");
    auto cdf = [&](double x) {
        return x <= x_min ? 0.0 : 1.0 - std::pow(x_min / x, alpha);
    };
    return discretize_one_sided(x_min, step, cap, cdf);
}

FiniteDistribution generate_distribution(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
        throw std::invalid_argument("generator: spec must be an object with a 'kind' string");
    const std::string kind = spec["kind"].get<std::string>();
    if (kind == "uniform-grid") {
        double count = get_number(spec, "count");
        require(count >= 1.0 && count == std::floor(count),
                "uniform_grid: count must be a positive integer");
        return uniform_grid(get_number(spec, "lo"), get_number(spec, "hi"),
                            static_cast<std::size_t>(count));
    }
    if (kind == "two-point")
        return two_point(get_number(spec, "lo"), get_number(spec, "hi"), get_number(spec, "p"));
    if (kind == "point-mass") return FiniteDistribution::point_mass(get_number(spec, "value"));
    if (kind == "discretized-gaussian")
        return discretized_gaussian(get_number(spec, "mean"), get_number(spec, "sigma"),
                                    get_number(spec, "step"), get_number(spec, "cap"));
    if (kind == "discretized-lognormal")
        return discretized_lognormal(get_number(spec, "mu"), get_number(spec, "sigma"),
                                     get_number(spec, "step"), get_number(spec, "cap"));
    if (kind == "discretized-pareto")
        return discretized_pareto(get_number(spec, "alpha"), get_number(spec, "x_min"),
                                  get_number(spec, "step"), get_number(spec, "cap"));
    if (kind == "empirical-file") {
        if (!spec.contains("path") || !spec["path"].is_string())
            throw std::invalid_argument("generator: empirical-file needs a 'path' string");
        return load_distribution(spec["path"].get<std::string>());
    }
    throw std::invalid_argument("generator: unknown distribution kind: " + kind);
}

}  // namespace sqmean
