#include "sqmean/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "sqmean/rng.hpp"

namespace sqmean {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_binding(const Query& q, const DistPtr& dist) {
    if (!q.bound_to(*dist))
        throw std::invalid_argument("oracle: query is not bound to the oracle's distribution");
}

void check_unit_range(const Query& q) {
    for (double v : q.values())
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("oracle: query values must lie in [0, 1]");
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Exact answer perturbed per policy; tolerance is saturated exactly before
// clamping to [0, 1].
double apply_policy(double p, double tol, OraclePolicy policy, std::mt19937_64& gen) {
    switch (policy) {
        case OraclePolicy::HonestExact:
            return p;
        case OraclePolicy::AdversarialUp:
            return clamp01(p + tol);
        case OraclePolicy::AdversarialDown:
            return clamp01(p - tol);
        case OraclePolicy::AdversarialRandomSign:
            return clamp01((gen() & 1ULL) ? p + tol : p - tol);
    }
    throw std::logic_error("oracle: unknown policy");
}

}  // namespace

const char* policy_name(OraclePolicy policy) {
    switch (policy) {
        case OraclePolicy::HonestExact: return "honest-exact";
        case OraclePolicy::AdversarialUp: return "adversarial-up";
        case OraclePolicy::AdversarialDown: return "adversarial-down";
        case OraclePolicy::AdversarialRandomSign: return "adversarial-random-sign";
    }
    return "unknown";
}

OraclePolicy policy_from_name(const std::string& name) {
    if (name == "honest-exact") return OraclePolicy::HonestExact;
    if (name == "adversarial-up") return OraclePolicy::AdversarialUp;
    if (name == "adversarial-down") return OraclePolicy::AdversarialDown;
    if (name == "adversarial-random-sign") return OraclePolicy::AdversarialRandomSign;
    throw std::invalid_argument("unknown oracle policy: " + name);
}

double vstat_tolerance(double p, std::uint64_t n) {
    require(n >= 1, "vstat_tolerance: n must be at least 1");
    require(p >= 0.0 && p <= 1.0, "vstat_tolerance: p must lie in [0, 1]");
    double nn = static_cast<double>(n);
    return std::max(1.0 / nn, std::sqrt(p * (1.0 - p) / nn));
}

VstatOracle::VstatOracle(DistPtr dist, std::uint64_t n, OraclePolicy policy, std::uint64_t seed)
    : dist_(std::move(dist)), n_(n), policy_(policy), gen_(seed) {
    require(dist_ != nullptr, "oracle: distribution must not be null");
    require(n_ >= 1, "oracle: parameter must be at least 1");
}

double VstatOracle::answer(const Query& q) {
    check_binding(q, dist_);
    check_unit_range(q);
    ++ledger_.queries_asked;
    double p = exact_moments(q).mean;
    p = clamp01(p);  // compensated sum can land an ulp outside
    return apply_policy(p, vstat_tolerance(p, n_), policy_, gen_);
}

StatOracle::StatOracle(DistPtr dist, double tau, std::uint64_t n, OraclePolicy policy,
                       std::uint64_t seed)
    : dist_(std::move(dist)), tau_(tau), n_(n), policy_(policy), gen_(seed) {
    require(dist_ != nullptr, "oracle: distribution must not be null");
    require(tau_ > 0.0 && tau_ < 1.0, "oracle: tau must lie in (0, 1)");
}

StatOracle::StatOracle(DistPtr dist, double tau, OraclePolicy policy, std::uint64_t seed)
    : StatOracle(std::move(dist), tau,
                 static_cast<std::uint64_t>(std::llround(1.0 / tau)), policy, seed) {}

StatOracle StatOracle::with_parameter(DistPtr dist, std::uint64_t n, OraclePolicy policy,
                                      std::uint64_t seed) {
    require(n >= 2, "oracle: parameter must be at least 2 for a flat-tolerance oracle");
    return StatOracle(std::move(dist), 1.0 / static_cast<double>(n), n, policy, seed);
}

double StatOracle::answer(const Query& q) {
    check_binding(q, dist_);
    check_unit_range(q);
    ++ledger_.queries_asked;
    double p = clamp01(exact_moments(q).mean);
    return apply_policy(p, tau_, policy_, gen_);
}

CommOracle::CommOracle(DistPtr dist, std::uint64_t seed)
    : dist_(std::move(dist)), gen_(seed) {
    require(dist_ != nullptr, "oracle: distribution must not be null");
    cdf_.reserve(dist_->size());
    CompensatedSum acc;
    for (double w : dist_->weights()) {
        acc.add(w);
        cdf_.push_back(acc.value());
    }
    cdf_.back() = 1.0;
}

std::size_t CommOracle::draw_index() {
    ++ledger_.samples_drawn;
    double u = uniform01(gen_);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::size_t>(it - cdf_.begin());
}

int CommOracle::answer(const Query& q) {
    check_binding(q, dist_);
    if (!q.boolean_valued())
        throw std::invalid_argument("oracle: one-bit queries must be {0,1}-valued");
    ++ledger_.bits_consumed;
    return q.values()[draw_index()] > 0.5 ? 1 : 0;
}

int CommOracle::threshold_bit(const Query& q, double theta) {
    check_binding(q, dist_);
    check_unit_range(q);
    ++ledger_.bits_consumed;
    return q.values()[draw_index()] >= theta ? 1 : 0;
}

int randomized_rounding_bit(CommOracle& oracle, const Query& q, std::mt19937_64& gen) {
    return oracle.threshold_bit(q, uniform01(gen));
}

CommSimPlan comm_sim_plan(std::uint64_t n, std::uint64_t q_total, double delta) {
    require(n >= 1, "comm simulation: n must be at least 1");
    require(q_total >= 1, "comm simulation: q_total must be at least 1");
    require(delta > 0.0 && delta < 1.0, "comm simulation: delta must lie in (0, 1)");
    CommSimPlan plan;
    double groups = std::ceil(kCommGroupLogFactor *
                              std::log(2.0 * static_cast<double>(q_total) / delta));
    plan.groups = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(groups));
    plan.bits_per_group = kCommBitsPerUnit * n;
    return plan;
}

double vstat_via_comm_plan(CommOracle& oracle, const Query& q, const CommSimPlan& plan,
                           std::mt19937_64& gen) {
    std::vector<double> means;
    means.reserve(plan.groups);
    for (std::uint64_t g = 0; g < plan.groups; ++g) {
        std::uint64_t ones = 0;
        for (std::uint64_t b = 0; b < plan.bits_per_group; ++b)
            ones += static_cast<std::uint64_t>(randomized_rounding_bit(oracle, q, gen));
        means.push_back(static_cast<double>(ones) / static_cast<double>(plan.bits_per_group));
    }
    std::sort(means.begin(), means.end());
    std::size_t r = means.size();
    if (r % 2 == 1) return means[r / 2];
    return 0.5 * (means[r / 2 - 1] + means[r / 2]);
}

double vstat_via_comm(CommOracle& oracle, const Query& q, std::uint64_t n,
                      std::uint64_t q_total, double delta, std::mt19937_64& gen) {
    return vstat_via_comm_plan(oracle, q, comm_sim_plan(n, q_total, delta), gen);
}

CommVstatOracle::CommVstatOracle(DistPtr dist, std::uint64_t n, std::uint64_t q_total,
                                 double delta, std::uint64_t seed)
    : comm_(std::move(dist), mix_seed(seed, 0)),
      n_(n),
      q_total_(q_total),
      delta_(delta),
      gen_(mix_seed(seed, 1)) {
    require(n_ >= 1, "oracle: parameter must be at least 1");
    comm_sim_plan(n, q_total, delta);  // validates q_total and delta
}

double CommVstatOracle::answer(const Query& q) {
    double v = vstat_via_comm(comm_, q, n_, q_total_, delta_, gen_);
    ++ledger_.queries_asked;
    ledger_.bits_consumed = comm_.ledger().bits_consumed;
    ledger_.samples_drawn = comm_.ledger().samples_drawn;
    return v;
}

OracleFactory make_vstat_factory(DistPtr dist, OraclePolicy policy, std::uint64_t seed) {
    auto counter = std::make_shared<std::uint64_t>(0);
    return [dist = std::move(dist), policy, seed, counter](std::uint64_t n) -> OraclePtr {
        return std::make_shared<VstatOracle>(dist, n, policy, mix_seed(seed, (*counter)++));
    };
}

OracleFactory make_stat_factory(DistPtr dist, OraclePolicy policy, std::uint64_t seed) {
    auto counter = std::make_shared<std::uint64_t>(0);
    return [dist = std::move(dist), policy, seed, counter](std::uint64_t n) -> OraclePtr {
        return std::make_shared<StatOracle>(
            StatOracle::with_parameter(dist, n, policy, mix_seed(seed, (*counter)++)));
    };
}

OracleFactory make_comm_factory(DistPtr dist, std::uint64_t q_total, double delta,
                                std::uint64_t seed) {
    auto counter = std::make_shared<std::uint64_t>(0);
    return [dist = std::move(dist), q_total, delta, seed, counter](std::uint64_t n) -> OraclePtr {
        return std::make_shared<CommVstatOracle>(dist, n, q_total, delta,
                                                 mix_seed(seed, (*counter)++));
    };
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
        h ^= (word >> (8 * i)) & 0xFFULL;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t bits_of(double x) {
    std::uint64_t u;
    static_assert(sizeof(u) == sizeof(x));
    std::memcpy(&u, &x, sizeof(u));
    return u;
}

}  // namespace

RecordingOracle::RecordingOracle(OraclePtr inner, std::shared_ptr<std::vector<std::uint64_t>> log)
    : inner_(std::move(inner)), log_(std::move(log)) {
    if (!inner_ || !log_) throw std::invalid_argument("recording oracle: null argument");
}

double RecordingOracle::answer(const Query& q) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    h = fnv1a(h, inner_->parameter());
    h = fnv1a(h, bits_of(q.declared_lo()));
    h = fnv1a(h, bits_of(q.declared_hi()));
    for (double v : q.values()) h = fnv1a(h, bits_of(v));
    log_->push_back(h);
    return inner_->answer(q);
}

OracleFactory make_recording_factory(OracleFactory inner,
                                     std::shared_ptr<std::vector<std::uint64_t>> log) {
    return [inner = std::move(inner), log](std::uint64_t n) -> OraclePtr {
        return std::make_shared<RecordingOracle>(inner(n), log);
    };
}

}  // namespace sqmean
