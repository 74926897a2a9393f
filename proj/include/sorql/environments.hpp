#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "sorql/errors.hpp"
#include "sorql/markov_game.hpp"
#include "sorql/rng.hpp"

namespace sorql {

struct GridPos {
    int row = 0;
    int col = 0;
    bool operator==(const GridPos&) const = default;
};

/// One environment interaction. `reward` is normalized to [-1, 1];
/// `raw_reward` keeps the unscaled value.
template <class State>
struct Transition {
    State state;
    int action = 0;
    int opponent_action = 0;
    double reward = 0.0;
    double raw_reward = 0.0;
    State next;
    bool terminal = false;
};

/// One branch of the exact transition law at (s, a, o).
template <class State>
struct Outcome {
    double prob = 0.0;
    double reward = 0.0;  // normalized
    State next;
    bool terminal = false;
};

namespace detail {
/// Applies a move delta; off-grid destinations collapse to "stay".
inline GridPos move_on_grid(GridPos p, int drow, int dcol, int n) {
    GridPos q{p.row + drow, p.col + dcol};
    if (q.row < 0 || q.row >= n || q.col < 0 || q.col >= n) return p;
    return q;
}

inline void check_action(int a, const char* who) {
    if (a < 0 || a >= 5)
        throw InvalidAction(std::string(who) + " action " + std::to_string(a) +
                            " outside {0..4}");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Guard-Invader
// ---------------------------------------------------------------------------

/// Joint state of the pursuit game. The door and grid side are constant for
/// an instance but kept on the state so that a state is self-describing
/// (feature encoding needs them).
struct GuardInvaderState {
    GridPos guard;
    GridPos invader;
    GridPos door;
    int grid_side = 0;
    bool operator==(const GuardInvaderState&) const = default;
};

/// Guard moves: up, down, left, right, stay.
inline constexpr std::array<std::pair<int, int>, 5> kGuardInvaderMoves = {
    {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {0, 0}}};

inline bool gi_terminal(const GuardInvaderState& s) {
    return s.invader == s.door || s.guard == s.invader;
}

/// Largest raw reward magnitude; used to normalize into [-1, 1].
inline double gi_reward_scale(int n) { return std::max(10.0, 2.0 * (n - 1)); }

/// Simultaneous-move pursuit dynamics, rewards from the guard's perspective:
/// the invader standing on the door after the joint move is an invasion
/// (-10, even if the guard arrives there too); the guard sharing the
/// invader's cell anywhere else is a capture worth +Manhattan(invader, door);
/// anything else continues at reward 0. The dynamics are deterministic; the
/// rng parameter exists for interface symmetry with the stochastic game.
inline Transition<GuardInvaderState> gi_step(const GuardInvaderState& s, int a, int o,
                                             Rng& /*rng*/) {
    detail::check_action(a, "guard");
    detail::check_action(o, "invader");
    if (gi_terminal(s)) throw SteppingTerminalState("gi_step: episode already over");

    const int n = s.grid_side;
    Transition<GuardInvaderState> tr;
    tr.state = s;
    tr.action = a;
    tr.opponent_action = o;
    tr.next = s;
    tr.next.guard = detail::move_on_grid(s.guard, kGuardInvaderMoves[a].first,
                                         kGuardInvaderMoves[a].second, n);
    tr.next.invader = detail::move_on_grid(s.invader, kGuardInvaderMoves[o].first,
                                           kGuardInvaderMoves[o].second, n);

    if (tr.next.invader == s.door) {
        tr.raw_reward = -10.0;
        tr.terminal = true;
    } else if (tr.next.guard == tr.next.invader) {
        tr.raw_reward = std::abs(tr.next.invader.row - s.door.row) +
                        std::abs(tr.next.invader.col - s.door.col);
        tr.terminal = true;
    }
    tr.reward = tr.raw_reward / gi_reward_scale(n);
    return tr;
}

/// Coordinates scaled to [0,1]: guard, invader, then door.
inline std::vector<double> encode_features(const GuardInvaderState& s) {
    const double d = s.grid_side > 1 ? s.grid_side - 1.0 : 1.0;
    return {s.guard.row / d,   s.guard.col / d, s.invader.row / d,
            s.invader.col / d, s.door.row / d,  s.door.col / d};
}

class GuardInvaderEnv {
  public:
    using State = GuardInvaderState;

    explicit GuardInvaderEnv(int grid_side) : n_(grid_side) {
        if (grid_side < 2) throw InvalidParams("GuardInvaderEnv: grid side must be >= 2");
    }

    std::string id() const { return "guard-invader"; }
    int grid_side() const { return n_; }
    GridPos door() const { return {n_ / 2, 0}; }
    int num_actions() const { return 5; }
    int num_opponent_actions() const { return 5; }
    double reward_scale() const { return gi_reward_scale(n_); }

    bool is_state_terminal(const State& s) const { return gi_terminal(s); }

    /// Guard and invader drawn uniformly from distinct non-door cells.
    State sample_initial(Rng& rng) const {
        State s;
        s.door = door();
        s.grid_side = n_;
        do {
            s.guard = {rng.uniform_int(n_), rng.uniform_int(n_)};
        } while (s.guard == s.door);
        do {
            s.invader = {rng.uniform_int(n_), rng.uniform_int(n_)};
        } while (s.invader == s.door || s.invader == s.guard);
        return s;
    }

    Transition<State> step(const State& s, int a, int o, Rng& rng) const {
        return gi_step(s, a, o, rng);
    }

    /// Deterministic joint moves: exactly one outcome with probability 1.
    std::vector<Outcome<State>> outcomes(const State& s, int a, int o) const {
        Rng unused(0);
        Transition<State> tr = gi_step(s, a, o, unused);
        return {{1.0, tr.reward, tr.next, tr.terminal}};
    }

    int state_count() const { return n_ * n_ * n_ * n_; }
    bool valid_id(int) const { return true; }

    int state_id(const State& s) const {
        int g = s.guard.row * n_ + s.guard.col;
        int i = s.invader.row * n_ + s.invader.col;
        return g * n_ * n_ + i;
    }

    State state_from_id(int id) const {
        int i = id % (n_ * n_);
        int g = id / (n_ * n_);
        State s;
        s.guard = {g / n_, g % n_};
        s.invader = {i / n_, i % n_};
        s.door = door();
        s.grid_side = n_;
        return s;
    }

    int feature_dim() const { return 6; }
    std::vector<double> features(const State& s) const { return encode_features(s); }

  private:
    int n_;
};

// ---------------------------------------------------------------------------
// Soccer
// ---------------------------------------------------------------------------

struct SoccerState {
    GridPos pos_a;
    GridPos pos_b;
    bool ball_with_a = true;
    int grid_side = 0;
    bool operator==(const SoccerState&) const = default;
};

/// Player moves: N, S, E, W, stand.
inline constexpr std::array<std::pair<int, int>, 5> kSoccerMoves = {
    {{-1, 0}, {1, 0}, {0, 1}, {0, -1}, {0, 0}}};

/// Goal geometry: the middle ceil(n/2) rows of the two outer columns.
/// A attacks the right column (n-1), B attacks the left column (0).
inline int soccer_goal_band(int n) { return (n + 1) / 2; }
inline int soccer_goal_top_row(int n) { return (n - soccer_goal_band(n)) / 2; }

inline bool soccer_is_goal_cell(GridPos p, bool attacking_right, int n) {
    int target_col = attacking_right ? n - 1 : 0;
    int r0 = soccer_goal_top_row(n);
    return p.col == target_col && p.row >= r0 && p.row < r0 + soccer_goal_band(n);
}

namespace detail {

struct SoccerHalfMove {
    SoccerState state;
    double reward = 0.0;  // +1 A scored, -1 B scored
    bool terminal = false;
};

/// Resolves one player's move against the current joint configuration.
/// A move into the other player's cell is aborted and flips possession;
/// a completed move whose destination is the mover's target goal cell while
/// the mover holds the ball scores.
inline SoccerHalfMove soccer_half_move(const SoccerState& s, bool mover_is_a, int action) {
    const int n = s.grid_side;
    SoccerHalfMove out{s, 0.0, false};
    GridPos me = mover_is_a ? s.pos_a : s.pos_b;
    GridPos other = mover_is_a ? s.pos_b : s.pos_a;
    GridPos dest = move_on_grid(me, kSoccerMoves[action].first, kSoccerMoves[action].second, n);
    if (dest == other) {
        // Collision: move aborted, possession changes hands.
        out.state.ball_with_a = !s.ball_with_a;
        return out;
    }
    if (mover_is_a)
        out.state.pos_a = dest;
    else
        out.state.pos_b = dest;
    const bool has_ball = mover_is_a ? out.state.ball_with_a : !out.state.ball_with_a;
    if (has_ball && !(dest == me) && soccer_is_goal_cell(dest, mover_is_a, n)) {
        out.reward = mover_is_a ? 1.0 : -1.0;
        out.terminal = true;
    }
    return out;
}

inline Outcome<SoccerState> soccer_resolve(const SoccerState& s, int a, int o, bool a_first) {
    SoccerHalfMove first = a_first ? soccer_half_move(s, true, a)
                                   : soccer_half_move(s, false, o);
    if (first.terminal) return {0.5, first.reward, first.state, true};
    SoccerHalfMove second = a_first ? soccer_half_move(first.state, false, o)
                                    : soccer_half_move(first.state, true, a);
    return {0.5, second.reward, second.state, second.terminal};
}

}  // namespace detail

/// Littman-style grid soccer: the two moves execute in uniformly random
/// order; a move into the other player's current cell is aborted and flips
/// ball possession; the ball carrier completing a move into its target goal
/// cells scores (+1 when A scores, -1 when B does) and ends the episode.
/// Rewards are already in [-1, 1].
inline Transition<SoccerState> soccer_step(const SoccerState& s, int a, int o, Rng& rng) {
    detail::check_action(a, "player A");
    detail::check_action(o, "player B");
    if (s.pos_a == s.pos_b)
        throw SteppingTerminalState("soccer_step: players share a cell; state is not reachable");
    const bool a_first = rng.uniform() < 0.5;
    Outcome<SoccerState> out = detail::soccer_resolve(s, a, o, a_first);
    Transition<SoccerState> tr;
    tr.state = s;
    tr.action = a;
    tr.opponent_action = o;
    tr.reward = out.reward;
    tr.raw_reward = out.reward;
    tr.next = out.next;
    tr.terminal = out.terminal;
    return tr;
}

/// Positions scaled to [0,1] plus a possession flag.
inline std::vector<double> encode_features(const SoccerState& s) {
    const double d = s.grid_side > 1 ? s.grid_side - 1.0 : 1.0;
    return {s.pos_a.row / d, s.pos_a.col / d, s.pos_b.row / d, s.pos_b.col / d,
            s.ball_with_a ? 1.0 : 0.0};
}

class SoccerEnv {
  public:
    using State = SoccerState;

    explicit SoccerEnv(int grid_side) : n_(grid_side) {
        if (grid_side < 2) throw InvalidParams("SoccerEnv: grid side must be >= 2");
    }

    std::string id() const { return "soccer"; }
    int grid_side() const { return n_; }
    int num_actions() const { return 5; }
    int num_opponent_actions() const { return 5; }
    double reward_scale() const { return 1.0; }

    /// Scoring is an event, not a configuration: no joint state is terminal
    /// by itself (a carrier standing on its goal after a possession steal
    /// still has to re-enter).
    bool is_state_terminal(const State&) const { return false; }

    /// Distinct uniform cells, uniform possession.
    State sample_initial(Rng& rng) const {
        State s;
        s.grid_side = n_;
        s.pos_a = {rng.uniform_int(n_), rng.uniform_int(n_)};
        do {
            s.pos_b = {rng.uniform_int(n_), rng.uniform_int(n_)};
        } while (s.pos_b == s.pos_a);
        s.ball_with_a = rng.uniform() < 0.5;
        return s;
    }

    Transition<State> step(const State& s, int a, int o, Rng& rng) const {
        return soccer_step(s, a, o, rng);
    }

    /// The two execution orders, merged when they coincide.
    std::vector<Outcome<State>> outcomes(const State& s, int a, int o) const {
        detail::check_action(a, "player A");
        detail::check_action(o, "player B");
        Outcome<State> first = detail::soccer_resolve(s, a, o, true);
        Outcome<State> second = detail::soccer_resolve(s, a, o, false);
        if (first.next == second.next && first.reward == second.reward &&
            first.terminal == second.terminal) {
            first.prob = 1.0;
            return {first};
        }
        return {first, second};
    }

    int state_count() const { return n_ * n_ * n_ * n_ * 2; }

    /// Same-cell configurations are unreachable; enumerated as placeholders.
    bool valid_id(int id) const {
        State s = state_from_id(id);
        return !(s.pos_a == s.pos_b);
    }

    int state_id(const State& s) const {
        int a = s.pos_a.row * n_ + s.pos_a.col;
        int b = s.pos_b.row * n_ + s.pos_b.col;
        return (a * n_ * n_ + b) * 2 + (s.ball_with_a ? 1 : 0);
    }

    State state_from_id(int id) const {
        State s;
        s.ball_with_a = (id & 1) != 0;
        id >>= 1;
        int b = id % (n_ * n_);
        int a = id / (n_ * n_);
        s.pos_a = {a / n_, a % n_};
        s.pos_b = {b / n_, b % n_};
        s.grid_side = n_;
        return s;
    }

    int feature_dim() const { return 5; }
    std::vector<double> features(const State& s) const { return encode_features(s); }

  private:
    int n_;
};

// ---------------------------------------------------------------------------
// Exact model enumeration
// ---------------------------------------------------------------------------

/// Builds the exact (P, R) tensors of a finite environment instance. The
/// state set is every encodable joint state plus one absorbing sink at the
/// last index; episode-ending transitions land in the sink, and terminal or
/// unreachable-placeholder states are absorbing with zero reward. Rewards
/// are the normalized per-triple expectations.
template <class Env>
MarkovGameModel enumerate_model(const Env& env, double gamma, int max_states = 200000) {
    const int base = env.state_count();
    if (base + 1 > max_states)
        throw StateSpaceTooLarge("enumerate_model: " + std::to_string(base + 1) +
                                 " states exceeds cap " + std::to_string(max_states));
    const int sink = base;
    MarkovGameModel m;
    m.num_states = base + 1;
    m.num_actions = env.num_actions();
    m.num_opponent_actions = env.num_opponent_actions();
    m.gamma = gamma;
    m.transitions.resize(m.triple_count());
    m.rewards.assign(m.triple_count(), 0.0);
    m.terminal.assign(m.num_states, 0);
    m.terminal[sink] = 1;

    for (int id = 0; id <= base; ++id) {
        const bool dead = id == sink || !env.valid_id(id) ||
                          env.is_state_terminal(env.state_from_id(id));
        if (dead) {
            if (id != sink) m.terminal[id] = 1;
            for (int a = 0; a < m.num_actions; ++a)
                for (int o = 0; o < m.num_opponent_actions; ++o)
                    m.transitions[m.triple_index(id, a, o)].emplace_back(id, 1.0);
            continue;
        }
        const typename Env::State s = env.state_from_id(id);
        for (int a = 0; a < m.num_actions; ++a) {
            for (int o = 0; o < m.num_opponent_actions; ++o) {
                const int t = m.triple_index(id, a, o);
                std::map<int, double> row;
                double reward = 0.0;
                for (const auto& out : env.outcomes(s, a, o)) {
                    const int nid = out.terminal ? sink : env.state_id(out.next);
                    row[nid] += out.prob;
                    reward += out.prob * out.reward;
                }
                m.rewards[t] = reward;
                for (const auto& [nid, p] : row) m.transitions[t].emplace_back(nid, p);
            }
        }
    }
    m.validate();
    return m;
}

}  // namespace sorql
