#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sorql/errors.hpp"
#include "sorql/markov_game.hpp"
#include "sorql/matrix_game.hpp"

namespace sorql {

/// Dense Q(s,a,o) table for a finite two-player game.
struct QTable {
    int num_states = 0;
    int num_actions = 0;
    int num_opponent_actions = 0;
    std::vector<double> values;

    QTable() = default;
    QTable(int ns, int na, int no, double fill = 0.0)
        : num_states(ns), num_actions(na), num_opponent_actions(no),
          values(static_cast<std::size_t>(ns) * na * no, fill) {
        if (ns < 1 || na < 1 || no < 1)
            throw InvalidParams("QTable: dimensions must be positive");
    }

    static QTable zeros_like(const MarkovGameModel& m) {
        return QTable(m.num_states, m.num_actions, m.num_opponent_actions);
    }

    std::size_t index(int s, int a, int o) const {
        return (static_cast<std::size_t>(s) * num_actions + a) * num_opponent_actions + o;
    }
    double& at(int s, int a, int o) { return values[index(s, a, o)]; }
    double at(int s, int a, int o) const { return values[index(s, a, o)]; }

    bool shape_matches(const MarkovGameModel& m) const {
        return num_states == m.num_states && num_actions == m.num_actions &&
               num_opponent_actions == m.num_opponent_actions;
    }

    /// The one-shot game faced at state s.
    PayoffMatrix payoff(int s) const {
        PayoffMatrix q(num_actions, num_opponent_actions);
        for (int a = 0; a < num_actions; ++a)
            for (int o = 0; o < num_opponent_actions; ++o) q(a, o) = at(s, a, o);
        return q;
    }

    double sup_distance(const QTable& other) const {
        if (values.size() != other.values.size())
            throw DimensionMismatch("QTable::sup_distance: shapes differ");
        double d = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            d = std::max(d, std::abs(values[i] - other.values[i]));
        return d;
    }
};

/// Relaxation settings for the over-relaxed Bellman update.
///
/// w = 1 recovers the ordinary minimax Bellman operator. w > 1 over-relaxes:
/// the one-step map stays a sup-norm contraction with modulus 1 - w(1 - gamma)
/// whenever w <= w_star(model), and models with uniform self-loop mass gain a
/// strictly faster contraction. `strict` enforces the w <= w_star certificate
/// up front; the permissive default allows any w >= 1 (useful as a heuristic
/// where the certificate does not apply, e.g. deep training).
struct SorConfig {
    double relaxation = 1.0;  // w
    bool strict = false;
    double lp_tol = 1e-9;

    void validate() const {
        if (!(relaxation >= 1.0))
            throw InvalidParams("SorConfig: relaxation must be >= 1");
        if (!(lp_tol > 0.0)) throw InvalidParams("SorConfig: lp_tol must be positive");
    }
};

/// Largest relaxation factor with a contraction certificate:
/// w_star = 1 / (1 - gamma * p_min), p_min = min over (s,a,o) of the
/// self-transition probability P(s | s,a,o).
inline double w_star(const MarkovGameModel& model) {
    double p_min = 1.0;
    for (int s = 0; s < model.num_states; ++s)
        for (int a = 0; a < model.num_actions; ++a)
            for (int o = 0; o < model.num_opponent_actions; ++o)
                p_min = std::min(p_min, model.self_loop_probability(s, a, o));
    return 1.0 / (1.0 - model.gamma * p_min);
}

inline void check_sor_config(const SorConfig& cfg, const MarkovGameModel& model) {
    cfg.validate();
    if (cfg.strict) {
        double cap = w_star(model);
        if (cfg.relaxation > cap + 1e-12)
            throw InvalidParams("SorConfig: relaxation " + std::to_string(cfg.relaxation) +
                                " exceeds certified cap w_star = " + std::to_string(cap));
    }
}

/// val(Q(s,.,.)) for every state; terminal states have value zero.
inline std::vector<double> state_values(const QTable& q, const MarkovGameModel& model,
                                        double lp_tol = 1e-9) {
    if (!q.shape_matches(model))
        throw DimensionMismatch("state_values: table shape does not match model");
    std::vector<double> v(model.num_states, 0.0);
    for (int s = 0; s < model.num_states; ++s)
        if (!model.is_terminal(s)) v[s] = game_value(q.payoff(s), lp_tol);
    return v;
}

/// One synchronous sweep of the over-relaxed minimax Bellman operator:
///   (T_w Q)(s,a,o) = w * [R(s,a,o) + gamma * sum_s' P(s'|s,a,o) val(Q(s'))]
///                    + (1 - w) * val(Q(s)),
/// with val(Q(x)) = 0 at terminal x. Terminal-state entries are left at zero.
inline QTable sor_bellman_apply(const MarkovGameModel& model, const QTable& q,
                                const SorConfig& cfg) {
    check_sor_config(cfg, model);
    if (!q.shape_matches(model))
        throw DimensionMismatch("sor_bellman_apply: table shape does not match model");
    const double w = cfg.relaxation;
    const std::vector<double> v = state_values(q, model, cfg.lp_tol);
    QTable out = QTable::zeros_like(model);
    for (int s = 0; s < model.num_states; ++s) {
        if (model.is_terminal(s)) continue;
        for (int a = 0; a < model.num_actions; ++a) {
            for (int o = 0; o < model.num_opponent_actions; ++o) {
                int t = model.triple_index(s, a, o);
                double expected = 0.0;
                for (const auto& [next, p] : model.transitions[t]) expected += p * v[next];
                out.at(s, a, o) =
                    w * (model.rewards[t] + model.gamma * expected) + (1.0 - w) * v[s];
            }
        }
    }
    return out;
}

struct ValueIterationResult {
    QTable q;
    int iterations = 0;
    double final_residual = 0.0;
    std::vector<double> residuals;  // sup-norm change per sweep
};

/// Iterates sor_bellman_apply from `init` (zeros by default) until the
/// sup-norm change drops below tol. Throws NoConvergence at max_iters.
inline ValueIterationResult value_iteration(
    const MarkovGameModel& model, const SorConfig& cfg, double tol = 1e-10,
    int max_iters = 100000, const QTable* init = nullptr,
    const std::function<void(int, const QTable&, double)>& observer = nullptr) {
    check_sor_config(cfg, model);
    if (!(tol > 0.0)) throw InvalidParams("value_iteration: tol must be positive");
    ValueIterationResult res;
    res.q = init ? *init : QTable::zeros_like(model);
    if (!res.q.shape_matches(model))
        throw DimensionMismatch("value_iteration: init table shape does not match model");
    for (int it = 1; it <= max_iters; ++it) {
        QTable next = sor_bellman_apply(model, res.q, cfg);
        double delta = next.sup_distance(res.q);
        res.q = std::move(next);
        res.iterations = it;
        res.final_residual = delta;
        res.residuals.push_back(delta);
        if (observer) observer(it, res.q, delta);
        if (delta < tol) return res;
    }
    throw NoConvergence("value_iteration: no convergence after " +
                        std::to_string(max_iters) + " sweeps (last residual " +
                        std::to_string(res.final_residual) + ")");
}

/// One asynchronous stochastic update of the over-relaxed minimax Q-learning
/// rule at the visited triple:
///   Q(s,a,o) += alpha * (w * [r + gamma * val(Q(s'))] + (1-w) * val(Q(s))
///               - Q(s,a,o)),
/// where val(Q(s')) = 0 when s' is terminal. Only entry (s,a,o) changes.
inline void sor_q_learning_step(QTable& q, const MarkovGameModel& model,
                                const IndexedTransition& tr, double alpha,
                                const SorConfig& cfg) {
    if (!q.shape_matches(model))
        throw DimensionMismatch("sor_q_learning_step: table shape does not match model");
    if (!(alpha > 0.0) || !(alpha <= 1.0))
        throw InvalidParams("sor_q_learning_step: alpha must lie in (0, 1]");
    cfg.validate();
    const double w = cfg.relaxation;
    const double v_next =
        tr.terminal ? 0.0 : game_value(q.payoff(tr.next_state), cfg.lp_tol);
    const double v_here = game_value(q.payoff(tr.state), cfg.lp_tol);
    const double target = w * (tr.reward + model.gamma * v_next) + (1.0 - w) * v_here;
    double& cell = q.at(tr.state, tr.action, tr.opponent_action);
    cell += alpha * (target - cell);
}

/// LP-optimal mixed strategy of the maximizer at every non-terminal state;
/// terminal states get a uniform placeholder.
inline std::vector<MixedStrategy> extract_policy(const QTable& q, const MarkovGameModel& model,
                                                 double lp_tol = 1e-9) {
    if (!q.shape_matches(model))
        throw DimensionMismatch("extract_policy: table shape does not match model");
    std::vector<MixedStrategy> pi(model.num_states);
    for (int s = 0; s < model.num_states; ++s) {
        if (model.is_terminal(s)) {
            pi[s].assign(model.num_actions, 1.0 / model.num_actions);
        } else {
            pi[s] = solve_matrix_game(q.payoff(s), lp_tol).strategy;
        }
    }
    return pi;
}

}  // namespace sorql
