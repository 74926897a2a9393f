#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sorql/errors.hpp"
#include "sorql/markov_game.hpp"
#include "sorql/matrix_game.hpp"
#include "sorql/rng.hpp"
#include "sorql/tabular.hpp"

namespace sorql {

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// Feature vectors psi(s,a,o), stored densely per flattened triple. One-hot
/// maps keep only the index table (implicit identity rows) so large models
/// stay cheap.
struct FeatureMap {
    int dim = 0;
    int num_triples = 0;
    std::vector<double> table;    // num_triples x dim, row-major; empty if one-hot
    std::vector<int> one_hot;     // per-triple coordinate; empty unless one-hot

    bool is_one_hot() const { return !one_hot.empty(); }

    const double* row(int t) const { return table.data() + static_cast<std::size_t>(t) * dim; }

    double dot(int t, const std::vector<double>& theta) const {
        if (is_one_hot()) return theta[one_hot[t]];
        const double* r = row(t);
        double acc = 0.0;
        for (int i = 0; i < dim; ++i) acc += r[i] * theta[i];
        return acc;
    }

    /// Largest Euclidean feature norm over all triples (1 for one-hot).
    double max_l2_norm() const {
        if (is_one_hot()) return 1.0;
        double best = 0.0;
        for (int t = 0; t < num_triples; ++t) {
            double s = 0.0;
            const double* r = row(t);
            for (int i = 0; i < dim; ++i) s += r[i] * r[i];
            best = std::max(best, s);
        }
        return std::sqrt(best);
    }

    double max_l1_norm() const {
        if (is_one_hot()) return 1.0;
        double best = 0.0;
        for (int t = 0; t < num_triples; ++t) {
            double s = 0.0;
            const double* r = row(t);
            for (int i = 0; i < dim; ++i) s += std::abs(r[i]);
            best = std::max(best, s);
        }
        return best;
    }
};

/// Identity features: coordinate (s,a,o) <-> flattened triple index, laid out
/// exactly like QTable::values so parameter vectors and tables correspond.
inline FeatureMap one_hot_features(const MarkovGameModel& m) {
    FeatureMap f;
    f.dim = m.triple_count();
    f.num_triples = m.triple_count();
    f.one_hot.resize(f.num_triples);
    for (int t = 0; t < f.num_triples; ++t) f.one_hot[t] = t;
    return f;
}

/// Dense Gaussian features, globally rescaled so every row has l1 norm <= 1
/// (which also bounds the l2 norm by 1 — the contraction arguments need the
/// induced payoffs to be 1-Lipschitz in the max-norm of theta, and
/// |psi^T dtheta| <= |psi|_1 |dtheta|_inf delivers exactly that).
inline FeatureMap random_features(const MarkovGameModel& m, int dim, Rng& rng) {
    if (dim < 1) throw InvalidParams("random_features: dim must be positive");
    FeatureMap f;
    f.dim = dim;
    f.num_triples = m.triple_count();
    f.table.resize(static_cast<std::size_t>(f.num_triples) * dim);
    for (double& v : f.table) v = rng.normal();
    double worst = 0.0;
    for (int t = 0; t < f.num_triples; ++t) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += std::abs(f.row(t)[i]);
        worst = std::max(worst, s);
    }
    if (worst > 0.0)
        for (double& v : f.table) v /= worst;
    return f;
}

/// The one-shot payoff matrix at state s induced by theta.
inline PayoffMatrix induced_payoff(const std::vector<double>& theta, const FeatureMap& phi,
                                   const MarkovGameModel& m, int s) {
    PayoffMatrix q(m.num_actions, m.num_opponent_actions);
    for (int a = 0; a < m.num_actions; ++a)
        for (int o = 0; o < m.num_opponent_actions; ++o)
            q(a, o) = phi.dot(m.triple_index(s, a, o), theta);
    return q;
}

// ---------------------------------------------------------------------------
// Projected update
// ---------------------------------------------------------------------------

/// Parameter vector with its projection radius.
struct LinearParams {
    std::vector<double> theta;
    double radius = 0.0;  // Euclidean ball radius Z
};

/// Euclidean projection onto the radius-Z ball: identity inside, radial
/// rescale outside.
inline std::vector<double> project_l2(std::vector<double> theta, double radius) {
    if (!(radius > 0.0)) throw RadiusNonPositive("project_l2: radius must be positive");
    double norm_sq = 0.0;
    for (double v : theta) norm_sq += v * v;
    if (norm_sq > radius * radius) {
        const double scale = radius / std::sqrt(norm_sq);
        for (double& v : theta) v *= scale;
    }
    return theta;
}

inline void project_l2_in_place(std::vector<double>& theta, double radius) {
    if (!(radius > 0.0)) throw RadiusNonPositive("project_l2: radius must be positive");
    double norm_sq = 0.0;
    for (double v : theta) norm_sq += v * v;
    if (norm_sq > radius * radius) {
        const double scale = radius / std::sqrt(norm_sq);
        for (double& v : theta) v *= scale;
    }
}

/// One stochastic semi-gradient step of the relaxed minimax rule on a linear
/// Q-function, followed by the ball projection:
///   theta += alpha * psi(s,a,o) * (w*[r + gamma*val(s')] + (1-w)*val(s)
///            - psi(s,a,o)^T theta),
/// where both val terms are LP values of the theta-induced payoffs and a
/// terminal s' contributes zero. With one-hot features and an inactive
/// projection this reproduces the tabular update arithmetic exactly.
inline void sor_linear_update(LinearParams& params, const MarkovGameModel& model,
                              const IndexedTransition& tr, double alpha,
                              const SorConfig& cfg, const FeatureMap& phi) {
    cfg.validate();
    if (!(params.radius > 0.0))
        throw RadiusNonPositive("sor_linear_update: projection radius must be positive");
    if (static_cast<int>(params.theta.size()) != phi.dim)
        throw DimensionMismatch("sor_linear_update: theta length != feature dim");
    if (phi.num_triples != model.triple_count())
        throw DimensionMismatch("sor_linear_update: feature map built for another model");
    if (!(alpha >= 0.0) || !(alpha <= 1.0))
        throw InvalidParams("sor_linear_update: alpha must lie in [0, 1]");
    if (alpha == 0.0) return;

    const double w = cfg.relaxation;
    const double v_next =
        tr.terminal ? 0.0
                    : game_value(induced_payoff(params.theta, phi, model, tr.next_state),
                                 cfg.lp_tol);
    const double v_here =
        game_value(induced_payoff(params.theta, phi, model, tr.state), cfg.lp_tol);
    const double target = w * (tr.reward + model.gamma * v_next) + (1.0 - w) * v_here;

    const int t = model.triple_index(tr.state, tr.action, tr.opponent_action);
    if (phi.is_one_hot()) {
        double& cell = params.theta[phi.one_hot[t]];
        cell += alpha * (target - cell);
    } else {
        const double pred = phi.dot(t, params.theta);
        const double* r = phi.row(t);
        const double step = alpha * (target - pred);
        for (int i = 0; i < phi.dim; ++i) params.theta[i] += step * r[i];
    }
    project_l2_in_place(params.theta, params.radius);
}

// ---------------------------------------------------------------------------
// Expected operator and contraction estimation
// ---------------------------------------------------------------------------

/// Relaxed one-step target at a triple under theta, with successors averaged
/// exactly over the model: w*[R + gamma*sum P(s'|s,a,o) val(s')] + (1-w)*val(s).
/// `state_vals` must hold val(induced payoff) per state, 0 at terminals.
inline double expected_target(const std::vector<double>& state_vals,
                              const MarkovGameModel& model, int triple, double w) {
    int s, a, o;
    model.unpack_triple(triple, s, a, o);
    double cont = 0.0;
    for (const auto& [next, p] : model.transitions[triple]) cont += p * state_vals[next];
    return w * (model.rewards[triple] + model.gamma * cont) + (1.0 - w) * state_vals[s];
}

inline std::vector<double> induced_state_values(const std::vector<double>& theta,
                                                const FeatureMap& phi,
                                                const MarkovGameModel& model,
                                                double lp_tol = 1e-9) {
    std::vector<double> v(model.num_states, 0.0);
    for (int s = 0; s < model.num_states; ++s)
        if (!model.is_terminal(s))
            v[s] = game_value(induced_payoff(theta, phi, model, s), lp_tol);
    return v;
}

/// Expected update direction: the average over uniform non-terminal triples
/// of psi(s,a,o) times the relaxed target, with exact successor expectations.
inline std::vector<double> expected_operator(const std::vector<double>& theta,
                                             const FeatureMap& phi,
                                             const MarkovGameModel& model,
                                             const SorConfig& cfg) {
    const std::vector<double> vals = induced_state_values(theta, phi, model, cfg.lp_tol);
    const std::vector<int> triples = model.non_terminal_triples();
    std::vector<double> out(phi.dim, 0.0);
    const double inv_n = 1.0 / static_cast<double>(triples.size());
    for (int t : triples) {
        const double target = expected_target(vals, model, t, cfg.relaxation) * inv_n;
        if (phi.is_one_hot()) {
            out[phi.one_hot[t]] += target;
        } else {
            const double* r = phi.row(t);
            for (int i = 0; i < phi.dim; ++i) out[i] += r[i] * target;
        }
    }
    return out;
}

enum class ContractionMode {
    kAveraged,  // expectation over uniform triples (includes the 1/N factor)
    kPerEntry,  // worst-case over triples of the target's Lipschitz ratio
};

/// Empirical max-norm contraction modulus of the expected update: draws
/// random parameter pairs and returns the largest ratio
/// |F(theta1)-F(theta2)|_inf / |theta1-theta2|_inf. Coincident pairs are
/// skipped (ratio convention 0).
inline double estimate_contraction(const FeatureMap& phi, const MarkovGameModel& model,
                                   const SorConfig& cfg, int num_pairs, Rng& rng,
                                   ContractionMode mode = ContractionMode::kAveraged,
                                   double theta_scale = 2.0) {
    check_sor_config(cfg, model);
    if (num_pairs < 1) throw InvalidParams("estimate_contraction: need at least one pair");
    const std::vector<int> triples = model.non_terminal_triples();
    double worst = 0.0;
    for (int k = 0; k < num_pairs; ++k) {
        std::vector<double> t1(phi.dim), t2(phi.dim);
        for (int i = 0; i < phi.dim; ++i) {
            t1[i] = rng.uniform(-theta_scale, theta_scale);
            t2[i] = rng.uniform(-theta_scale, theta_scale);
        }
        double dist = 0.0;
        for (int i = 0; i < phi.dim; ++i) dist = std::max(dist, std::abs(t1[i] - t2[i]));
        if (dist == 0.0) continue;

        double diff = 0.0;
        if (mode == ContractionMode::kAveraged) {
            const std::vector<double> f1 = expected_operator(t1, phi, model, cfg);
            const std::vector<double> f2 = expected_operator(t2, phi, model, cfg);
            for (int i = 0; i < phi.dim; ++i)
                diff = std::max(diff, std::abs(f1[i] - f2[i]));
        } else {
            const std::vector<double> v1 = induced_state_values(t1, phi, model, cfg.lp_tol);
            const std::vector<double> v2 = induced_state_values(t2, phi, model, cfg.lp_tol);
            for (int t : triples)
                diff = std::max(diff, std::abs(expected_target(v1, model, t, cfg.relaxation) -
                                               expected_target(v2, model, t, cfg.relaxation)));
        }
        worst = std::max(worst, diff / dist);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Finite-time bound
// ---------------------------------------------------------------------------

/// Constants of the high-probability finite-time error bound for the
/// projected recursion with step size alpha_t = gain/(t + offset).
struct BoundParams {
    double noise_bound = 0.0;   // almost-sure bound on the per-step noise
    double gain = 0.0;          // step-size numerator
    double offset = 0.0;        // step-size denominator offset
    double mixing_time = 1.0;   // steps until every coordinate has visit mass
    double failure_prob = 0.1;  // delta in (0,1)
    double contraction = 0.0;   // modulus of the expected operator, in (0,1)
    double radius = 0.0;        // projection ball radius
    int dim = 0;                // parameter dimension
    double visit_prob = 0.0;    // per-step lower bound on coordinate visitation

    void validate() const {
        if (!(noise_bound > 0.0) || !(gain > 0.0) || !(offset > 0.0) || !(radius > 0.0) ||
            !(mixing_time > 0.0) || dim < 1)
            throw InvalidParams("BoundParams: all magnitudes must be positive");
        if (!(failure_prob > 0.0 && failure_prob < 1.0))
            throw InvalidParams("BoundParams: failure probability must lie in (0,1)");
        if (!(contraction > 0.0 && contraction < 1.0))
            throw InvalidParams("BoundParams: contraction modulus must lie in (0,1)");
        if (!(visit_prob > 0.0 && visit_prob < 1.0))
            throw InvalidParams("BoundParams: visitation bound must lie in (0,1)");
        if (offset < std::max(4.0 * gain, mixing_time))
            throw InvalidParams("BoundParams: offset must be >= max(4*gain, mixing_time)");
        if (gain < 2.0 / (visit_prob * (1.0 - contraction)))
            throw InvalidParams("BoundParams: gain must be >= 2/(visit_prob*(1-contraction))");
    }
};

/// The bound in both published forms (their constants differ; both decay as
/// C/sqrt(T+offset) + C'/(T+offset)).
struct FiniteTimeBound {
    double statement = 0.0;   // 4*Mb*sqrt(gain*log(1/delta))/((1-delta)*sqrt(T+t0)) + 4Z(tau+t0)/((1-g')(T+t0))
    double proof_form = 0.0;  // sqrt_coeff/sqrt(T+t0) + linear_coeff/(T+t0)
    double sqrt_coeff = 0.0;  // (4*Mb/(1-g'))*sqrt(gain*log(2d/delta))
    double linear_coeff = 0.0;  // 4Z(tau+t0)/(1-g')
};

inline FiniteTimeBound finite_time_bound(const BoundParams& p, double steps) {
    p.validate();
    if (!(steps > 0.0)) throw InvalidParams("finite_time_bound: step count must be positive");
    const double total = steps + p.offset;
    FiniteTimeBound b;
    b.statement = 4.0 * p.noise_bound * std::sqrt(p.gain * std::log(1.0 / p.failure_prob)) /
                      ((1.0 - p.failure_prob) * std::sqrt(total)) +
                  4.0 * p.radius * (p.mixing_time + p.offset) /
                      ((1.0 - p.contraction) * total);
    b.sqrt_coeff = 4.0 * p.noise_bound / (1.0 - p.contraction) *
                   std::sqrt(p.gain * std::log(2.0 * p.dim / p.failure_prob));
    b.linear_coeff = 4.0 * p.radius * (p.mixing_time + p.offset) / (1.0 - p.contraction);
    b.proof_form = b.sqrt_coeff / std::sqrt(total) + b.linear_coeff / total;
    return b;
}

// ---------------------------------------------------------------------------
// Step-size sequence inequalities
// ---------------------------------------------------------------------------

/// Numeric verification of the decay inequalities behind the finite-time
/// bound, for alpha_t = gain/(t + offset) and the products
///   beta(h,t)  = prod_{l=h+1..t} (1 - alpha_l),
///   wbeta(h,t) = alpha_h * beta(h,t):
///   (i)   beta(h,t)  <= ((h+1+offset)/(t+1+offset))^gain          for 1<=h<=t
///   (ii)  wbeta(h,t) <= gain/(h+offset) * ((h+1+offset)/(t+1+offset))^gain
///   (iii) sum_{h=1..t} wbeta(h,t)^2 <= 2*gain/(t+1+offset)
///   (iv)  sum_{h=tau..t} wbeta(h,t) * (h+offset)^(-G)
///            <= 1/(sqrt(contraction) * (t+1+offset)^G)   for each exponent G
/// Slacks for (i)-(ii) are reported in the log domain (the quantities vanish
/// exponentially); (iii)-(iv) in the linear domain. All must be >= 0.
struct ScheduleSlackReport {
    double gain = 0.0;
    double offset = 0.0;
    int mixing_time = 1;
    long horizon = 0;
    double contraction = 0.0;
    std::vector<double> exponents;
    double min_decay_slack = 0.0;          // (i), log domain
    double min_weighted_decay_slack = 0.0; // (ii), log domain
    double min_square_sum_slack = 0.0;     // (iii)
    double min_power_sum_slack = 0.0;      // (iv), min over exponents
    bool all_nonnegative() const {
        return min_decay_slack >= 0.0 && min_weighted_decay_slack >= 0.0 &&
               min_square_sum_slack >= 0.0 && min_power_sum_slack >= 0.0;
    }
};

inline ScheduleSlackReport schedule_slack_report(double gain, double offset, int mixing_time,
                                                 long horizon,
                                                 std::vector<double> exponents = {0.5, 0.999},
                                                 double contraction = -1.0) {
    if (!(gain > 0.0) || !(offset >= std::max(4.0 * gain, double(mixing_time))))
        throw InvalidParams("schedule_slack_report: need offset >= max(4*gain, mixing_time)");
    if (mixing_time < 1 || horizon < mixing_time)
        throw InvalidParams("schedule_slack_report: horizon must reach the mixing time");
    for (double g : exponents)
        if (!(g > 0.0 && g < 1.0))
            throw InvalidParams("schedule_slack_report: exponents must lie in (0,1)");
    if (contraction < 0.0) {
        // Largest modulus compatible with gain*(1 - sqrt(modulus)) >= 1.
        const double root = 1.0 - 1.0 / gain;
        if (!(root > 0.0))
            throw InvalidParams("schedule_slack_report: gain too small for default modulus");
        contraction = root * root;
    }
    if (!(contraction > 0.0 && contraction < 1.0) ||
        gain * (1.0 - std::sqrt(contraction)) < 1.0 - 1e-12)
        throw InvalidParams("schedule_slack_report: modulus incompatible with gain");

    ScheduleSlackReport rep;
    rep.gain = gain;
    rep.offset = offset;
    rep.mixing_time = mixing_time;
    rep.horizon = horizon;
    rep.contraction = contraction;
    rep.exponents = exponents;

    // Prefix sums: S[t] = sum_{l=1..t} log(1-alpha_l), L[t] = log(t+1+offset).
    std::vector<double> s_prefix(horizon + 1, 0.0), l_val(horizon + 1, 0.0),
        log_alpha(horizon + 1, 0.0);
    for (long t = 1; t <= horizon; ++t) {
        const double alpha = gain / (t + offset);
        if (!(alpha < 1.0))
            throw InvalidParams("schedule_slack_report: step size reaches 1");
        s_prefix[t] = s_prefix[t - 1] + std::log1p(-alpha);
        log_alpha[t] = std::log(alpha);
    }
    for (long t = 0; t <= horizon; ++t) l_val[t] = std::log(t + 1.0 + offset);

    // (i) and (ii): all (h, t) pairs via the prefix representation.
    double min_i = std::numeric_limits<double>::infinity();
    double min_ii = std::numeric_limits<double>::infinity();
    for (long t = 1; t <= horizon; ++t) {
        for (long h = 1; h <= t; ++h) {
            const double log_beta = s_prefix[t] - s_prefix[h];
            const double log_rhs_i = gain * (l_val[h] - l_val[t]);
            min_i = std::min(min_i, log_rhs_i - log_beta);
            const double log_rhs_ii = std::log(gain) - std::log(h + offset) + log_rhs_i;
            min_ii = std::min(min_ii, log_rhs_ii - (log_alpha[h] + log_beta));
        }
    }
    rep.min_decay_slack = min_i;
    rep.min_weighted_decay_slack = min_ii;

    // (iii): running recurrence sum_h wbeta(h,t)^2.
    double min_iii = std::numeric_limits<double>::infinity();
    double square_sum = 0.0;
    for (long t = 1; t <= horizon; ++t) {
        const double alpha = gain / (t + offset);
        const double decay = 1.0 - alpha;
        square_sum = square_sum * decay * decay + alpha * alpha;
        min_iii = std::min(min_iii, 2.0 * gain / (t + 1.0 + offset) - square_sum);
    }
    rep.min_square_sum_slack = min_iii;

    // (iv): one recurrence per exponent, summing from h = mixing_time.
    double min_iv = std::numeric_limits<double>::infinity();
    for (double g : exponents) {
        double weighted = 0.0;
        for (long t = 1; t <= horizon; ++t) {
            const double alpha = gain / (t + offset);
            weighted *= (1.0 - alpha);
            if (t >= mixing_time) weighted += alpha * std::pow(t + offset, -g);
            if (t >= mixing_time) {
                const double rhs =
                    1.0 / (std::sqrt(contraction) * std::pow(t + 1.0 + offset, g));
                min_iv = std::min(min_iv, rhs - weighted);
            }
        }
    }
    rep.min_power_sum_slack = min_iv;
    return rep;
}

/// Throwing wrapper: verifies every schedule inequality has nonnegative slack.
inline ScheduleSlackReport check_schedule_inequalities(
    double gain, double offset, int mixing_time, long horizon,
    std::vector<double> exponents = {0.5, 0.999}, double contraction = -1.0) {
    ScheduleSlackReport rep =
        schedule_slack_report(gain, offset, mixing_time, horizon, exponents, contraction);
    if (!rep.all_nonnegative())
        throw InequalityViolated(
            "schedule inequalities violated: slacks " + std::to_string(rep.min_decay_slack) +
            ", " + std::to_string(rep.min_weighted_decay_slack) + ", " +
            std::to_string(rep.min_square_sum_slack) + ", " +
            std::to_string(rep.min_power_sum_slack));
    return rep;
}

// ---------------------------------------------------------------------------
// Error-vs-bound experiment
// ---------------------------------------------------------------------------

struct LinearRunResult {
    std::vector<long> recorded_steps;
    std::vector<std::vector<double>> error_curves;  // per seed, per recorded step
    std::vector<double> final_errors;               // per seed
    std::vector<double> bound_proof_curve;
    std::vector<double> bound_statement_curve;
    double coverage_proof = 0.0;      // fraction of seeds with final error <= proof bound
    double coverage_statement = 0.0;
    std::vector<double> theta_star;
    double theta_star_l2 = 0.0;
    double max_noise_observed = 0.0;  // largest |sampled target - expected target|
};

/// Runs the projected one-hot recursion from theta_0 = 0 against the exact
/// fixed point (vectorized Q* from value iteration) and evaluates the
/// finite-time bound alongside. Triples are sampled uniformly over the
/// non-terminal set; successors from the exact model row.
inline LinearRunResult run_linear_experiment(const MarkovGameModel& model,
                                             const SorConfig& cfg,
                                             const BoundParams& bound, long steps,
                                             int num_seeds, std::uint64_t base_seed,
                                             long record_stride = 100) {
    check_sor_config(cfg, model);
    bound.validate();
    if (steps < 1 || num_seeds < 1)
        throw InvalidParams("run_linear_experiment: steps and seeds must be positive");

    const FeatureMap phi = one_hot_features(model);
    const ValueIterationResult vi = value_iteration(model, cfg, 1e-12, 200000);

    LinearRunResult res;
    res.theta_star = vi.q.values;
    double l2 = 0.0;
    for (double v : res.theta_star) l2 += v * v;
    res.theta_star_l2 = std::sqrt(l2);

    for (long t = record_stride; t <= steps; t += record_stride)
        res.recorded_steps.push_back(t);
    if (res.recorded_steps.empty() || res.recorded_steps.back() != steps)
        res.recorded_steps.push_back(steps);
    for (long t : res.recorded_steps) {
        const FiniteTimeBound b = finite_time_bound(bound, static_cast<double>(t));
        res.bound_proof_curve.push_back(b.proof_form);
        res.bound_statement_curve.push_back(b.statement);
    }

    const std::vector<int> triples = model.non_terminal_triples();
    const double final_bound_proof = res.bound_proof_curve.back();
    const double final_bound_statement = res.bound_statement_curve.back();
    int covered_proof = 0, covered_statement = 0;

    for (int k = 0; k < num_seeds; ++k) {
        Rng rng(Rng::derive(base_seed, "linear-run-" + std::to_string(k)));
        LinearParams params{std::vector<double>(phi.dim, 0.0), bound.radius};
        std::vector<double> curve;
        curve.reserve(res.recorded_steps.size());
        std::size_t next_record = 0;

        for (long t = 1; t <= steps; ++t) {
            const int triple = triples[rng.uniform_int(static_cast<int>(triples.size()))];
            int s, a, o;
            model.unpack_triple(triple, s, a, o);
            IndexedTransition tr = model.sample_transition(s, a, o, rng);
            const double alpha = bound.gain / (static_cast<double>(t) + bound.offset);

            // Track the realized noise against its assumed bound: compare the
            // sampled target with its exact successor expectation.
            const std::vector<double> vals =
                induced_state_values(params.theta, phi, model, cfg.lp_tol);
            const double expected = expected_target(vals, model, triple, cfg.relaxation);
            const double sampled =
                cfg.relaxation * (tr.reward + model.gamma *
                                                  (tr.terminal ? 0.0 : vals[tr.next_state])) +
                (1.0 - cfg.relaxation) * vals[s];
            res.max_noise_observed =
                std::max(res.max_noise_observed, std::abs(sampled - expected));

            sor_linear_update(params, model, tr, alpha, cfg, phi);

            if (next_record < res.recorded_steps.size() &&
                t == res.recorded_steps[next_record]) {
                double err = 0.0;
                for (int i = 0; i < phi.dim; ++i)
                    err = std::max(err, std::abs(params.theta[i] - res.theta_star[i]));
                curve.push_back(err);
                ++next_record;
            }
        }
        const double final_err = curve.back();
        res.final_errors.push_back(final_err);
        res.error_curves.push_back(std::move(curve));
        if (final_err <= final_bound_proof) ++covered_proof;
        if (final_err <= final_bound_statement) ++covered_statement;
    }
    res.coverage_proof = static_cast<double>(covered_proof) / num_seeds;
    res.coverage_statement = static_cast<double>(covered_statement) / num_seeds;
    return res;
}

}  // namespace sorql
