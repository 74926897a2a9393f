#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sorql/environments.hpp"
#include "sorql/errors.hpp"
#include "sorql/matrix_game.hpp"
#include "sorql/mlp.hpp"
#include "sorql/replay.hpp"
#include "sorql/rng.hpp"

namespace sorql {

/// Configuration of the deep relaxed minimax Q-learning run.
struct AlgoConfig {
    double relaxation = 1.0;     // w >= 1; the over-relaxation weight
    double gamma = 0.95;
    int target_period = 100;     // steps between target-network refreshes
    int eval_loops = 5;          // target refreshes per evaluation-network refresh
    int batch_size = 64;
    double learning_rate = 5e-5;
    std::string optimizer = "adam";  // "adam" | "sgd"
    double eps_start = 1.0;
    double eps_end = 0.1;
    double eps_decay = 20000.0;  // exponential decay constant, in steps
    long steps = 150000;
    std::size_t buffer_capacity = 10000;
    std::vector<int> hidden = {256, 128};
    int probe_count = 32;        // fixed probe states for the value curve
    int probe_stride = 25;       // steps between probe evaluations
    int episode_cap = 500;       // truncation length (not a bootstrap terminal)
    int loss_window = 100;       // moving-average window for the loss column
    double lp_tol = 1e-9;
    std::uint64_t seed = 1;
    bool baseline_path = false;  // plain minimax targets (no relaxation terms)

    void validate() const {
        if (!(relaxation >= 1.0)) throw InvalidParams("AlgoConfig: relaxation must be >= 1");
        if (!(gamma > 0.0 && gamma < 1.0))
            throw InvalidParams("AlgoConfig: gamma must lie in (0,1)");
        if (target_period < 1 || eval_loops < 1 || batch_size < 1 || probe_count < 1 ||
            probe_stride < 1 || episode_cap < 1 || loss_window < 1 || steps < 1 ||
            buffer_capacity < 1)
            throw InvalidParams("AlgoConfig: counts and periods must be positive");
        if (!(learning_rate > 0.0)) throw InvalidParams("AlgoConfig: learning rate must be positive");
        if (!(eps_end >= 0.0 && eps_end <= eps_start && eps_start <= 1.0))
            throw InvalidParams("AlgoConfig: epsilon range must satisfy 0 <= end <= start <= 1");
        if (!(eps_decay > 0.0)) throw InvalidParams("AlgoConfig: epsilon decay must be positive");
        if (optimizer != "adam" && optimizer != "sgd")
            throw InvalidParams("AlgoConfig: optimizer must be adam or sgd");
        if (!(lp_tol > 0.0)) throw InvalidParams("AlgoConfig: lp_tol must be positive");
    }

    /// eps(t) = end + (start-end)*exp(-t/decay), t counted from 0.
    double epsilon(long t) const {
        return eps_end + (eps_start - eps_end) * std::exp(-static_cast<double>(t) / eps_decay);
    }
};

/// The three parameter sets of the training loop.
struct TrainState {
    MlpParams online;
    MlpParams target;
    MlpParams eval;
    long step = 0;
};

struct LogRow {
    long step = 0;      // 1-based
    long episode = 0;   // 1-based
    double loss_raw = 0.0;
    double loss_ma = 0.0;
    double probe_q = 0.0;
    double epsilon = 0.0;
};

struct TrainResult {
    std::vector<LogRow> rows;
    MlpParams params;  // final online parameters
    long episodes = 0;
    std::vector<int> probe_states;
    double converged_loss_mean = 0.0;  // over the last 10% of steps
    double converged_loss_std = 0.0;
    double wall_seconds = 0.0;
};

/// Optional per-step callbacks for tests and trace dumps.
template <class Env>
struct TrainHooks {
    std::function<void(long step, const MlpParams& online, const MlpParams& target,
                       const MlpParams& eval)>
        after_step;
    std::function<void(long step, const Transition<typename Env::State>& tr)> on_transition;
};

/// Relaxed one-step target from already-evaluated payoff matrices:
///   w * (r + gamma * [terminal ? 0 : min_o sum_a pi_next(a) q_next(a,o)])
///   + (1-w) * min_o sum_a pi_here(a) q_here(a,o).
inline double sor_target(double reward, bool terminal, const PayoffMatrix& q_next,
                         const MixedStrategy& pi_next, const PayoffMatrix& q_here,
                         const MixedStrategy& pi_here, double w, double gamma) {
    const double boot = terminal ? 0.0 : response_value(pi_next, q_next);
    return w * (reward + gamma * boot) + (1.0 - w) * response_value(pi_here, q_here);
}

/// Plain minimax target (the dedicated non-relaxed baseline path).
inline double minimax_target(double reward, bool terminal, const PayoffMatrix& q_next,
                             const MixedStrategy& pi_next, double gamma) {
    const double boot = terminal ? 0.0 : response_value(pi_next, q_next);
    return reward + gamma * boot;
}

/// Epsilon-greedy draw: explore uniformly with probability eps, otherwise
/// sample from the LP-optimal mixed strategy of the given payoff matrix.
inline int select_action(const PayoffMatrix& q, double eps, Rng& rng, double lp_tol = 1e-9) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidParams("select_action: eps outside [0,1]");
    if (rng.uniform() < eps) return rng.uniform_int(q.rows());
    return rng.sample_categorical(solve_matrix_game(q, lp_tol).strategy);
}

/// Minimizer's best pure reply to the evaluation policy under the online
/// network's payoffs.
inline int opponent_action(const MixedStrategy& pi_eval, const PayoffMatrix& q_online) {
    return best_response_column(pi_eval, q_online);
}

namespace detail {

/// Per-state caches of network outputs that stay valid between network
/// refreshes: payoffs under the target network and LP policies under the
/// evaluation network.
class StateCache {
  public:
    void reset(int num_states, int payoff_size) {
        payoffs_.setZero(payoff_size, num_states);
        have_payoff_.assign(num_states, 0);
        policies_.assign(num_states, {});
        have_policy_.assign(num_states, 0);
    }

    void invalidate_payoffs() { std::fill(have_payoff_.begin(), have_payoff_.end(), 0); }
    void invalidate_policies() { std::fill(have_policy_.begin(), have_policy_.end(), 0); }

    /// Ensures target-network outputs exist for each listed state (one
    /// batched forward pass over the misses).
    void ensure_payoffs(const std::vector<int>& states, const MlpParams& net,
                        const Eigen::MatrixXd& features, MlpWorkspace& ws) {
        miss_.clear();
        for (int s : states)
            if (!have_payoff_[s]) {
                have_payoff_[s] = 1;
                miss_.push_back(s);
            }
        if (miss_.empty()) return;
        Eigen::MatrixXd x(features.rows(), miss_.size());
        for (std::size_t i = 0; i < miss_.size(); ++i) x.col(i) = features.col(miss_[i]);
        const Eigen::MatrixXd& y = mlp_forward_batch(net, x, ws);
        for (std::size_t i = 0; i < miss_.size(); ++i) payoffs_.col(miss_[i]) = y.col(i);
    }

    PayoffMatrix payoff(int s, int na, int no) const {
        PayoffMatrix q(na, no);
        for (int a = 0; a < na; ++a)
            for (int o = 0; o < no; ++o) q(a, o) = payoffs_(a * no + o, s);
        return q;
    }

    /// Ensures evaluation policies exist for each listed state (batched
    /// forward pass + one LP per miss).
    void ensure_policies(const std::vector<int>& states, const MlpParams& net,
                         const Eigen::MatrixXd& features, MlpWorkspace& ws, int na, int no,
                         double lp_tol) {
        miss_.clear();
        for (int s : states)
            if (!have_policy_[s]) {
                have_policy_[s] = 1;
                miss_.push_back(s);
            }
        if (miss_.empty()) return;
        Eigen::MatrixXd x(features.rows(), miss_.size());
        for (std::size_t i = 0; i < miss_.size(); ++i) x.col(i) = features.col(miss_[i]);
        const Eigen::MatrixXd& y = mlp_forward_batch(net, x, ws);
        PayoffMatrix q(na, no);
        for (std::size_t i = 0; i < miss_.size(); ++i) {
            for (int a = 0; a < na; ++a)
                for (int o = 0; o < no; ++o) q(a, o) = y(a * no + o, i);
            policies_[miss_[i]] = solve_matrix_game(q, lp_tol).strategy;
        }
    }

    const MixedStrategy& policy(int s) const { return policies_[s]; }

  private:
    Eigen::MatrixXd payoffs_;  // output_dim x num_states, target-network values
    std::vector<std::uint8_t> have_payoff_;
    std::vector<MixedStrategy> policies_;  // evaluation-network LP strategies
    std::vector<std::uint8_t> have_policy_;
    std::vector<int> miss_;
};

}  // namespace detail

/// Full training loop: act with the online network (epsilon-greedy over its
/// LP strategy) against the best-response opponent, store transitions, and
/// descend the half-mean-squared target loss each step; the target network
/// refreshes every `target_period` updates and the evaluation network every
/// `eval_loops` target refreshes. Episodes are truncated (not terminal) at
/// `episode_cap` steps. Logs one row per step.
template <class Env>
TrainResult train(const Env& env, const AlgoConfig& cfg,
                  const TrainHooks<Env>* hooks = nullptr) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    const int na = env.num_actions();
    const int no = env.num_opponent_actions();
    const int out_dim = na * no;
    const int num_states = env.state_count();

    // Per-state feature table: one column per encodable state.
    Eigen::MatrixXd features(env.feature_dim(), num_states);
    for (int s = 0; s < num_states; ++s) {
        if (!env.valid_id(s)) {
            features.col(s).setZero();
            continue;
        }
        const std::vector<double> f = env.features(env.state_from_id(s));
        for (int i = 0; i < env.feature_dim(); ++i) features(i, s) = f[i];
    }

    Rng init_rng(Rng::derive(cfg.seed, "init"));
    Rng env_rng(Rng::derive(cfg.seed, "env"));
    Rng act_rng(Rng::derive(cfg.seed, "act"));
    Rng replay_rng(Rng::derive(cfg.seed, "replay"));
    Rng probe_rng(Rng::derive(cfg.seed, "probe"));

    TrainState nets;
    nets.online = make_mlp(env.feature_dim(), cfg.hidden, out_dim, init_rng);
    nets.target = nets.online;
    nets.eval = nets.online;

    TrainResult res;
    res.probe_states.reserve(cfg.probe_count);
    for (int i = 0; i < cfg.probe_count; ++i)
        res.probe_states.push_back(env.state_id(env.sample_initial(probe_rng)));

    ReplayBuffer buffer(cfg.buffer_capacity);
    detail::StateCache cache;
    cache.reset(num_states, out_dim);

    MlpWorkspace ws_online, ws_act, ws_cache, ws_probe;
    MlpGradient grad;
    AdamState adam;

    Eigen::MatrixXd batch_x(env.feature_dim(), cfg.batch_size);
    std::vector<int> batch_units(cfg.batch_size);
    std::vector<double> batch_targets(cfg.batch_size);
    std::vector<StoredTransition> batch(cfg.batch_size);
    std::vector<int> wanted_states;

    std::vector<double> loss_ring(cfg.loss_window, 0.0);
    double loss_sum = 0.0;
    long loss_count = 0;

    res.rows.reserve(cfg.steps);

    typename Env::State state{};
    bool need_reset = true;
    long episode = 0;
    int ep_len = 0;
    double probe_q = 0.0;

    for (long t = 0; t < cfg.steps; ++t) {
        if (need_reset) {
            state = env.sample_initial(env_rng);
            ++episode;
            ep_len = 0;
            need_reset = false;
        }
        const int sid = env.state_id(state);

        // Online payoffs at the current state (used for both players).
        Eigen::MatrixXd x_s = features.col(sid);
        const Eigen::MatrixXd& y_s = mlp_forward_batch(nets.online, x_s, ws_act);
        PayoffMatrix q_online(na, no);
        for (int a = 0; a < na; ++a)
            for (int o = 0; o < no; ++o) q_online(a, o) = y_s(a * no + o, 0);

        if (t % cfg.probe_stride == 0) {
            Eigen::MatrixXd px(env.feature_dim(), res.probe_states.size());
            for (std::size_t i = 0; i < res.probe_states.size(); ++i)
                px.col(i) = features.col(res.probe_states[i]);
            const Eigen::MatrixXd& py = mlp_forward_batch(nets.online, px, ws_probe);
            PayoffMatrix pq(na, no);
            double acc = 0.0;
            for (std::size_t i = 0; i < res.probe_states.size(); ++i) {
                for (int a = 0; a < na; ++a)
                    for (int o = 0; o < no; ++o) pq(a, o) = py(a * no + o, i);
                acc += game_value(pq, cfg.lp_tol);
            }
            probe_q = acc / static_cast<double>(res.probe_states.size());
        }

        const double eps = cfg.epsilon(t);
        const int a = select_action(q_online, eps, act_rng, cfg.lp_tol);

        wanted_states.assign(1, sid);
        cache.ensure_policies(wanted_states, nets.eval, features, ws_cache, na, no, cfg.lp_tol);
        const int o = opponent_action(cache.policy(sid), q_online);

        const Transition<typename Env::State> tr = env.step(state, a, o, env_rng);
        ++ep_len;
        if (hooks && hooks->on_transition) hooks->on_transition(t + 1, tr);

        buffer.push({sid, a, o, tr.reward, env.state_id(tr.next), tr.terminal});
        state = tr.next;
        need_reset = tr.terminal || ep_len >= cfg.episode_cap;

        double loss = 0.0;
        if (buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
            wanted_states.clear();
            for (int k = 0; k < cfg.batch_size; ++k) {
                batch[k] = buffer.sample(replay_rng);
                wanted_states.push_back(batch[k].state);
                wanted_states.push_back(batch[k].next_state);
            }
            cache.ensure_payoffs(wanted_states, nets.target, features, ws_cache);
            cache.ensure_policies(wanted_states, nets.eval, features, ws_cache, na, no,
                                  cfg.lp_tol);
            for (int k = 0; k < cfg.batch_size; ++k) {
                const StoredTransition& b = batch[k];
                const PayoffMatrix q_next = cache.payoff(b.next_state, na, no);
                const MixedStrategy& pi_next = cache.policy(b.next_state);
                if (cfg.baseline_path) {
                    batch_targets[k] =
                        minimax_target(b.reward, b.terminal, q_next, pi_next, cfg.gamma);
                } else {
                    const PayoffMatrix q_here = cache.payoff(b.state, na, no);
                    const MixedStrategy& pi_here = cache.policy(b.state);
                    batch_targets[k] = sor_target(b.reward, b.terminal, q_next, pi_next,
                                                  q_here, pi_here, cfg.relaxation, cfg.gamma);
                }
                batch_x.col(k) = features.col(b.state);
                batch_units[k] = b.action * no + b.opponent_action;
            }
            loss = mlp_gradient(nets.online, batch_x, batch_units, batch_targets, grad,
                                ws_online);
            if (!std::isfinite(loss))
                throw NumericalDivergence("train: non-finite loss at step " +
                                          std::to_string(t + 1));
            if (cfg.optimizer == "adam")
                adam_step(nets.online, grad, adam, cfg.learning_rate);
            else
                sgd_step(nets.online, grad, cfg.learning_rate);
        }

        // Moving average over the last `loss_window` raw losses.
        const long ring_pos = t % cfg.loss_window;
        if (loss_count >= cfg.loss_window) loss_sum -= loss_ring[ring_pos];
        loss_ring[ring_pos] = loss;
        loss_sum += loss;
        ++loss_count;
        const double ma = loss_sum / std::min<long>(loss_count, cfg.loss_window);

        res.rows.push_back({t + 1, episode, loss, ma, probe_q, eps});

        if ((t + 1) % cfg.target_period == 0) {
            nets.target = nets.online;
            cache.invalidate_payoffs();
            if ((t + 1) % (static_cast<long>(cfg.target_period) * cfg.eval_loops) == 0) {
                nets.eval = nets.online;
                cache.invalidate_policies();
            }
        }
        nets.step = t + 1;
        if (hooks && hooks->after_step)
            hooks->after_step(t + 1, nets.online, nets.target, nets.eval);
    }

    if (!nets.online.all_finite())
        throw NumericalDivergence("train: non-finite parameters after the final step");

    res.params = nets.online;
    res.episodes = episode;

    // Converged loss: mean/std of raw losses over the final 10% of steps.
    const long tail_start = cfg.steps - std::max<long>(1, cfg.steps / 10);
    double mean = 0.0;
    long n = 0;
    for (long t = tail_start; t < cfg.steps; ++t) {
        mean += res.rows[t].loss_raw;
        ++n;
    }
    mean /= n;
    double var = 0.0;
    for (long t = tail_start; t < cfg.steps; ++t) {
        const double d = res.rows[t].loss_raw - mean;
        var += d * d;
    }
    res.converged_loss_mean = mean;
    res.converged_loss_std = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

}  // namespace sorql
