#include "sqmean/distribution.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sqmean {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

FiniteDistribution::FiniteDistribution(std::vector<double> support, std::vector<double> weights) {
    require(!support.empty(), "distribution: support must be non-empty");
    require(support.size() == weights.size(), "distribution: support/weight length mismatch");
    require(all_finite(support), "distribution: support values must be finite");
    require(all_finite(weights), "distribution: weights must be finite");
    for (double w : weights) require(w >= 0.0, "distribution: weights must be nonnegative");

    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });

    support_.reserve(support.size());
    weights_.reserve(support.size());
    for (std::size_t idx : order) {
        if (!support_.empty() && support_.back() == support[idx]) {
            weights_.back() += weights[idx];
        } else {
            support_.push_back(support[idx]);
            weights_.push_back(weights[idx]);
        }
    }

    CompensatedSum total;
    for (double w : weights_) total.add(w);
    double sum = total.value();
    require(sum > 0.0, "distribution: weights must have positive total mass");
    for (double& w : weights_) w /= sum;
}

bool FiniteDistribution::same_support(const FiniteDistribution& other) const {
    return support_ == other.support_ && weights_ == other.weights_;
}

Query::Query(DistPtr dist, std::vector<double> values, double declared_lo, double declared_hi)
    : dist_(std::move(dist)), values_(std::move(values)), lo_(declared_lo), hi_(declared_hi) {
    require(dist_ != nullptr, "query: distribution must not be null");
    require(values_.size() == dist_->size(), "query: one value per support point required");
    require(all_finite(values_), "query: values must be finite");
    require(std::isfinite(lo_) && std::isfinite(hi_) && lo_ <= hi_,
            "query: declared range must be a finite interval");
    for (double v : values_)
        require(lo_ <= v && v <= hi_, "query: value outside declared range");
}

Query Query::identity(DistPtr dist) {
    require(dist != nullptr, "query: distribution must not be null");
    std::vector<double> values = dist->support();
    double lo = dist->min_value();
    double hi = dist->max_value();
    return Query(std::move(dist), std::move(values), lo, hi);
}

Query Query::identity(DistPtr dist, double declared_lo, double declared_hi) {
    require(dist != nullptr, "query: distribution must not be null");
    std::vector<double> values = dist->support();
    return Query(std::move(dist), std::move(values), declared_lo, declared_hi);
}

Query Query::with_values(std::vector<double> values, double declared_lo, double declared_hi) const {
    return Query(dist_, std::move(values), declared_lo, declared_hi);
}

bool Query::bound_to(const FiniteDistribution& d) const {
    return dist_.get() == &d || dist_->same_support(d);
}

bool Query::boolean_valued() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return v == 0.0 || v == 1.0; });
}

double clamp(double z, double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("clamp: threshold must be nonnegative");
    if (z > a) return a;
    if (z < -a) return -a;
    return z;
}

double residual(double z, double a) { return z - clamp(z, a); }

Moments exact_moments(const Query& q) {
    CompensatedSum mean, second;
    const auto& w = q.dist().weights();
    const auto& v = q.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        mean.add(w[i] * v[i]);
        second.add(w[i] * v[i] * v[i]);
    }
    Moments m;
    m.mean = mean.value();
    m.second_moment = second.value();
    m.variance = m.second_moment - m.mean * m.mean;
    if (m.variance < 0.0) m.variance = 0.0;  // rounding noise only
    m.std_dev = std::sqrt(m.variance);
    return m;
}

double exact_tail(const Query& q, double t, bool strict) {
    CompensatedSum mass;
    const auto& w = q.dist().weights();
    const auto& v = q.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        bool in = strict ? (v[i] > t) : (v[i] >= t);
        if (in) mass.add(w[i]);
    }
    double p = mass.value();
    return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

Query discretize_round_down(const Query& q, double step, double cap) {
    require(step > 0.0 && std::isfinite(step), "discretize: step must be positive");
    require(cap > 0.0 && std::isfinite(cap), "discretize: cap must be positive");
    std::vector<double> out(q.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = q.values()[i];
        require(v >= 0.0, "discretize: values must be nonnegative");
        out[i] = step * std::floor(std::min(v, cap) / step);
    }
    return q.with_values(std::move(out), 0.0, cap);
}

FiniteDistribution load_distribution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open distribution file: " + path);
    std::vector<double> support, weights;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        double value, weight;
        if (!(fields >> value)) continue;  // blank or comment-only line
        if (!(fields >> weight))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'value weight'");
        support.push_back(value);
        weights.push_back(weight);
    }
    if (support.empty())
        throw std::runtime_error(path + ": no support points found");
    return FiniteDistribution(std::move(support), std::move(weights));
}

}  // namespace sqmean
