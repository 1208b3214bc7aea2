#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>

#include "sqmean/distribution.hpp"

namespace sqmean {

// Running totals of everything an algorithm has consumed from an oracle.
struct BudgetLedger {
    std::uint64_t queries_asked = 0;
    std::uint64_t bits_consumed = 0;
    std::uint64_t samples_drawn = 0;
};

// How a simulated oracle positions its answer inside the allowed tolerance.
// Adversarial policies are oblivious: they saturate the tolerance in a fixed
// (or pre-seeded) direction and never react to the query sequence.
enum class OraclePolicy {
    HonestExact,            // answer = exact expectation
    AdversarialUp,          // answer = p + tol, clamped to [0, 1]
    AdversarialDown,        // answer = p - tol, clamped to [0, 1]
    AdversarialRandomSign,  // seeded coin picks +tol or -tol per query
};

const char* policy_name(OraclePolicy policy);
OraclePolicy policy_from_name(const std::string& name);

// Allowed deviation for an estimate of p from n samples' worth of accuracy:
// max(1/n, sqrt(p(1-p)/n)).
double vstat_tolerance(double p, std::uint64_t n);

// Answers [0,1]-valued queries about a fixed distribution with an accuracy
// contract governed by a single integer parameter n. Concrete oracles differ
// in how the answer is produced; every implementation keeps its answers
// within vstat_tolerance(p, parameter()) of the exact expectation p.
class SqOracle {
public:
    virtual ~SqOracle() = default;
    virtual double answer(const Query& q) = 0;
    virtual std::uint64_t parameter() const = 0;
    virtual const BudgetLedger& ledger() const = 0;
    virtual const DistPtr& dist_ptr() const = 0;
};

using OraclePtr = std::shared_ptr<SqOracle>;

// Creates oracles on demand for estimators that pick their own parameters.
using OracleFactory = std::function<OraclePtr(std::uint64_t n)>;

// Simulated oracle with tolerance max(1/n, sqrt(p(1-p)/n)).
class VstatOracle final : public SqOracle {
public:
    VstatOracle(DistPtr dist, std::uint64_t n, OraclePolicy policy, std::uint64_t seed = 0);

    double answer(const Query& q) override;
    std::uint64_t parameter() const override { return n_; }
    const BudgetLedger& ledger() const override { return ledger_; }
    const DistPtr& dist_ptr() const override { return dist_; }
    OraclePolicy policy() const { return policy_; }

private:
    DistPtr dist_;
    std::uint64_t n_;
    OraclePolicy policy_;
    std::mt19937_64 gen_;
    BudgetLedger ledger_;
};

// Simulated oracle with a flat tolerance tau, independent of p. Via
// parameter() it presents itself as the equivalent n = round(1/tau): a flat
// tau = 1/n never exceeds max(1/n, sqrt(p(1-p)/n)), so any guarantee stated
// against that tolerance carries over.
class StatOracle final : public SqOracle {
public:
    StatOracle(DistPtr dist, double tau, OraclePolicy policy, std::uint64_t seed = 0);
    static StatOracle with_parameter(DistPtr dist, std::uint64_t n, OraclePolicy policy,
                                     std::uint64_t seed = 0);

    double answer(const Query& q) override;
    std::uint64_t parameter() const override { return n_; }
    const BudgetLedger& ledger() const override { return ledger_; }
    const DistPtr& dist_ptr() const override { return dist_; }
    double tau() const { return tau_; }

private:
    StatOracle(DistPtr dist, double tau, std::uint64_t n, OraclePolicy policy, std::uint64_t seed);

    DistPtr dist_;
    double tau_;
    std::uint64_t n_;
    OraclePolicy policy_;
    std::mt19937_64 gen_;
    BudgetLedger ledger_;
};

// One-bit sampling oracle: each call draws one fresh sample from the
// distribution and reveals a single bit of a Boolean query evaluated on it.
class CommOracle {
public:
    CommOracle(DistPtr dist, std::uint64_t seed);

    // q must be {0,1}-valued.
    int answer(const Query& q);

    // Evaluates 1{q(x) >= theta} on one fresh sample; q must be [0,1]-valued.
    // Observable cost is identical to answer() on the materialized indicator.
    int threshold_bit(const Query& q, double theta);

    const BudgetLedger& ledger() const { return ledger_; }
    const DistPtr& dist_ptr() const { return dist_; }

private:
    std::size_t draw_index();

    DistPtr dist_;
    std::mt19937_64 gen_;
    std::vector<double> cdf_;
    BudgetLedger ledger_;
};

// One randomized-rounding bit for a [0,1]-valued query: draws theta uniform
// on [0,1) from `gen` and submits the Boolean query 1{q(x) >= theta}. The
// bit is an unbiased estimate of the expectation of q.
int randomized_rounding_bit(CommOracle& oracle, const Query& q, std::mt19937_64& gen);

// Group sizes used by the sampling-based simulation below. Calibrated with
// tools/calibrate_comm and then frozen; see that tool for the measurements.
inline constexpr std::uint64_t kCommBitsPerUnit = 8;   // bits per group = this * n
inline constexpr double kCommGroupLogFactor = 3.0;     // groups = ceil(this * ln(2q/delta))

struct CommSimPlan {
    std::uint64_t groups = 0;          // r
    std::uint64_t bits_per_group = 0;  // m
};
CommSimPlan comm_sim_plan(std::uint64_t n, std::uint64_t q_total, double delta);

// Simulates one accuracy-parameter-n answer for a [0,1]-valued query out of
// r*m randomized-rounding bits: r groups, each averaging m bits, median of
// the group means. With q_total queries total, each answer lands inside the
// parameter-n tolerance with probability at least 1 - delta/q_total.
double vstat_via_comm(CommOracle& oracle, const Query& q, std::uint64_t n,
                      std::uint64_t q_total, double delta, std::mt19937_64& gen);

// Same, with explicit group sizes (calibration hook).
double vstat_via_comm_plan(CommOracle& oracle, const Query& q, const CommSimPlan& plan,
                           std::mt19937_64& gen);

// Adapter: a full SqOracle whose every answer is produced by vstat_via_comm
// over an internally owned CommOracle. bits_consumed/samples_drawn mirror
// the underlying sampling oracle.
class CommVstatOracle final : public SqOracle {
public:
    CommVstatOracle(DistPtr dist, std::uint64_t n, std::uint64_t q_total, double delta,
                    std::uint64_t seed);

    double answer(const Query& q) override;
    std::uint64_t parameter() const override { return n_; }
    const BudgetLedger& ledger() const override { return ledger_; }
    const DistPtr& dist_ptr() const override { return comm_.dist_ptr(); }

private:
    CommOracle comm_;
    std::uint64_t n_;
    std::uint64_t q_total_;
    double delta_;
    std::mt19937_64 gen_;
    BudgetLedger ledger_;
};

// Standard factories used by the harness. Oracles created by one factory get
// distinct deterministic sub-seeds derived from `seed` in creation order.
OracleFactory make_vstat_factory(DistPtr dist, OraclePolicy policy, std::uint64_t seed);
OracleFactory make_stat_factory(DistPtr dist, OraclePolicy policy, std::uint64_t seed);
OracleFactory make_comm_factory(DistPtr dist, std::uint64_t q_total, double delta,
                                std::uint64_t seed);

// Pass-through oracle that fingerprints each query (value vector, declared
// range and the parameter of the oracle answering it) before delegating.
// Running an estimator against two differently-behaving inner oracles and
// comparing the fingerprint sequences certifies non-adaptivity.
class RecordingOracle final : public SqOracle {
public:
    RecordingOracle(OraclePtr inner, std::shared_ptr<std::vector<std::uint64_t>> log);

    double answer(const Query& q) override;
    std::uint64_t parameter() const override { return inner_->parameter(); }
    const BudgetLedger& ledger() const override { return inner_->ledger(); }
    const DistPtr& dist_ptr() const override { return inner_->dist_ptr(); }

private:
    OraclePtr inner_;
    std::shared_ptr<std::vector<std::uint64_t>> log_;
};

OracleFactory make_recording_factory(OracleFactory inner,
                                     std::shared_ptr<std::vector<std::uint64_t>> log);

}  // namespace sqmean
