#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sorql/errors.hpp"
#include "sorql/rng.hpp"

namespace sorql {

/// One sampled interaction (s, a, o, r, s') with a terminal flag for s'.
struct IndexedTransition {
    int state = 0;
    int action = 0;
    int opponent_action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool terminal = false;  // s' ends the episode (no bootstrap from s')
};

/// Explicit two-player zero-sum Markov game over index sets
/// {0..num_states-1} x {0..num_actions-1} x {0..num_opponent_actions-1}.
///
/// Transition rows are sparse (next-state, probability) lists keyed by the
/// flattened triple index; rewards are dense per triple. States flagged
/// terminal have zero continuation value; their rows should be absorbing.
struct MarkovGameModel {
    int num_states = 0;
    int num_actions = 0;
    int num_opponent_actions = 0;
    double gamma = 0.0;
    std::vector<std::vector<std::pair<int, double>>> transitions;  // per triple
    std::vector<double> rewards;                                   // per triple
    std::vector<std::uint8_t> terminal;                            // per state

    int triple_count() const { return num_states * num_actions * num_opponent_actions; }

    int triple_index(int s, int a, int o) const {
        return (s * num_actions + a) * num_opponent_actions + o;
    }

    bool is_terminal(int s) const { return terminal[static_cast<std::size_t>(s)] != 0; }

    std::vector<int> non_terminal_states() const {
        std::vector<int> out;
        for (int s = 0; s < num_states; ++s)
            if (!is_terminal(s)) out.push_back(s);
        return out;
    }

    /// Every (s,a,o) with s non-terminal, as flattened triple indices.
    std::vector<int> non_terminal_triples() const {
        std::vector<int> out;
        for (int s = 0; s < num_states; ++s) {
            if (is_terminal(s)) continue;
            for (int a = 0; a < num_actions; ++a)
                for (int o = 0; o < num_opponent_actions; ++o)
                    out.push_back(triple_index(s, a, o));
        }
        return out;
    }

    void unpack_triple(int t, int& s, int& a, int& o) const {
        o = t % num_opponent_actions;
        t /= num_opponent_actions;
        a = t % num_actions;
        s = t / num_actions;
    }

    double self_loop_probability(int s, int a, int o) const {
        for (const auto& [next, p] : transitions[triple_index(s, a, o)])
            if (next == s) return p;
        return 0.0;
    }

    /// Checks shape and stochasticity; throws InvalidParams on any defect.
    void validate(double row_tol = 1e-9) const {
        if (num_states < 1 || num_actions < 1 || num_opponent_actions < 1)
            throw InvalidParams("model: state/action counts must be positive");
        if (!(gamma > 0.0 && gamma < 1.0))
            throw InvalidParams("model: gamma must lie in (0, 1)");
        if (static_cast<int>(transitions.size()) != triple_count() ||
            static_cast<int>(rewards.size()) != triple_count() ||
            static_cast<int>(terminal.size()) != num_states)
            throw InvalidParams("model: tensor sizes disagree with declared shape");
        for (int t = 0; t < triple_count(); ++t) {
            if (!std::isfinite(rewards[t]))
                throw InvalidParams("model: non-finite reward at triple " + std::to_string(t));
            double sum = 0.0;
            for (const auto& [next, p] : transitions[t]) {
                if (next < 0 || next >= num_states)
                    throw InvalidParams("model: next state out of range");
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw InvalidParams("model: bad transition probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > row_tol)
                throw InvalidParams("model: transition row " + std::to_string(t) +
                                    " sums to " + std::to_string(sum));
        }
    }

    int sample_next(int s, int a, int o, Rng& rng) const {
        const auto& row = transitions[triple_index(s, a, o)];
        double u = rng.uniform();
        double cum = 0.0;
        for (const auto& [next, p] : row) {
            cum += p;
            if (u < cum) return next;
        }
        return row.back().first;
    }

    IndexedTransition sample_transition(int s, int a, int o, Rng& rng) const {
        if (is_terminal(s))
            throw SteppingTerminalState("sample_transition: state " + std::to_string(s) +
                                        " is terminal");
        IndexedTransition tr;
        tr.state = s;
        tr.action = a;
        tr.opponent_action = o;
        tr.reward = rewards[triple_index(s, a, o)];
        tr.next_state = sample_next(s, a, o, rng);
        tr.terminal = is_terminal(tr.next_state);
        return tr;
    }
};

/// Random dense model: each transition row is Dirichlet-like (normalized
/// exponentials), optionally mixed with extra self-loop mass; rewards are
/// U(-1, 1); no terminal states.
inline MarkovGameModel random_model(int num_states, int num_actions, int num_opponent_actions,
                                    double gamma, Rng& rng, double self_loop_mass = 0.0) {
    if (!(self_loop_mass >= 0.0 && self_loop_mass < 1.0))
        throw InvalidParams("random_model: self_loop_mass must lie in [0, 1)");
    MarkovGameModel m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.num_opponent_actions = num_opponent_actions;
    m.gamma = gamma;
    m.transitions.resize(m.triple_count());
    m.rewards.resize(m.triple_count());
    m.terminal.assign(num_states, 0);
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            for (int o = 0; o < num_opponent_actions; ++o) {
                std::vector<double> p(num_states);
                double total = 0.0;
                for (int k = 0; k < num_states; ++k) {
                    double u = rng.uniform();
                    while (u <= 0.0) u = rng.uniform();
                    p[k] = -std::log(u);
                    total += p[k];
                }
                auto& row = m.transitions[m.triple_index(s, a, o)];
                for (int k = 0; k < num_states; ++k) {
                    double prob = (1.0 - self_loop_mass) * p[k] / total +
                                  (k == s ? self_loop_mass : 0.0);
                    if (prob > 0.0) row.emplace_back(k, prob);
                }
                m.rewards[m.triple_index(s, a, o)] = rng.uniform(-1.0, 1.0);
            }
        }
    }
    m.validate();
    return m;
}

/// Model in which every (s,a,o) stays put with probability one. Useful for
/// studying relaxation: here the relaxed one-step operator contracts at
/// 1 - w(1 - gamma) instead of gamma.
inline MarkovGameModel self_loop_model(int num_states, int num_actions,
                                       int num_opponent_actions, double gamma, Rng& rng) {
    MarkovGameModel m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.num_opponent_actions = num_opponent_actions;
    m.gamma = gamma;
    m.transitions.resize(m.triple_count());
    m.rewards.resize(m.triple_count());
    m.terminal.assign(num_states, 0);
    for (int t = 0; t < m.triple_count(); ++t) {
        int s, a, o;
        m.unpack_triple(t, s, a, o);
        m.transitions[t].emplace_back(s, 1.0);
        m.rewards[t] = rng.uniform(-1.0, 1.0);
    }
    m.validate();
    return m;
}

}  // namespace sorql
