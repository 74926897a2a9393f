#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sorql/errors.hpp"

namespace sorql {

/// Probability vector over one player's actions.
using MixedStrategy = std::vector<double>;

/// Dense payoff table of a one-shot zero-sum matrix game. Rows index the
/// maximizer's actions, columns the minimizer's; entries are payoffs to the
/// maximizer (the minimizer pays them).
class PayoffMatrix {
  public:
    PayoffMatrix() = default;

    PayoffMatrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 1 || cols < 1)
            throw InvalidParams("PayoffMatrix: needs at least one row and one column");
    }

    PayoffMatrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = static_cast<int>(init.size());
        if (rows_ == 0) throw InvalidParams("PayoffMatrix: empty initializer");
        cols_ = static_cast<int>(init.begin()->size());
        if (cols_ == 0) throw InvalidParams("PayoffMatrix: empty row in initializer");
        data_.reserve(static_cast<std::size_t>(rows_) * cols_);
        for (const auto& row : init) {
            if (static_cast<int>(row.size()) != cols_)
                throw DimensionMismatch("PayoffMatrix: ragged initializer rows");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int a, int o) { return data_[static_cast<std::size_t>(a) * cols_ + o]; }
    double operator()(int a, int o) const { return data_[static_cast<std::size_t>(a) * cols_ + o]; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Payoff table of the role-swapped game: transpose and negate, so the
    /// swapped game's maximizer is this game's minimizer.
    PayoffMatrix role_swapped() const {
        PayoffMatrix g(cols_, rows_);
        for (int a = 0; a < rows_; ++a)
            for (int o = 0; o < cols_; ++o) g(o, a) = -(*this)(a, o);
        return g;
    }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// Value and an optimal maximizer strategy for a matrix game.
struct GameSolution {
    MixedStrategy strategy;  // over rows, sums to 1
    double value = 0.0;
    MixedStrategy opponent_strategy;  // over columns, sums to 1
};

/// Expected payoff of playing mixed row strategy `pi` when the minimizer
/// replies with its best pure column: min_o sum_a pi[a] * q(a,o).
inline double response_value(const MixedStrategy& pi, const PayoffMatrix& q) {
    if (static_cast<int>(pi.size()) != q.rows())
        throw DimensionMismatch("response_value: strategy length != row count");
    double best = std::numeric_limits<double>::infinity();
    for (int o = 0; o < q.cols(); ++o) {
        double v = 0.0;
        for (int a = 0; a < q.rows(); ++a) v += pi[a] * q(a, o);
        best = std::min(best, v);
    }
    return best;
}

/// Index of the minimizer's best pure reply to `pi` (lowest index on ties).
inline int best_response_column(const MixedStrategy& pi, const PayoffMatrix& q) {
    if (static_cast<int>(pi.size()) != q.rows())
        throw DimensionMismatch("best_response_column: strategy length != row count");
    int arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int o = 0; o < q.cols(); ++o) {
        double v = 0.0;
        for (int a = 0; a < q.rows(); ++a) v += pi[a] * q(a, o);
        if (v < best) {
            best = v;
            arg = o;
        }
    }
    return arg;
}

namespace detail {

/// Dense primal simplex with Bland's rule on the standard matrix-game LP.
///
/// The game is shifted so every payoff is >= 1, which makes its value v' > 0.
/// In the minimizer's form the LP is
///     maximize sum(y)  subject to  Q' y <= 1,  y >= 0,
/// whose optimum is 1/v'; the minimizer's strategy is y * v' and the
/// maximizer's optimal strategy appears (scaled the same way) in the
/// objective-row entries under the slack columns at optimality. Bland's rule
/// (lowest eligible index for both entering and leaving variables) makes the
/// iteration immune to cycling on degenerate games.
struct SimplexResult {
    double shifted_value = 0.0;       // v' of the shifted game
    std::vector<double> row_strategy; // maximizer, sums to ~1
    std::vector<double> col_strategy; // minimizer, sums to ~1
};

inline SimplexResult solve_shifted_game(const PayoffMatrix& shifted) {
    const int m = shifted.rows();  // constraints (maximizer actions)
    const int n = shifted.cols();  // variables (minimizer actions)
    const int cols = n + m + 1;    // variables + slacks + rhs
    const int rhs = n + m;

    std::vector<std::vector<double>> t(m + 1, std::vector<double>(cols, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) t[i][j] = shifted(i, j);
        t[i][n + i] = 1.0;
        t[i][rhs] = 1.0;
    }
    // Objective row holds reduced costs of "minimize -sum(y)".
    for (int j = 0; j < n; ++j) t[m][j] = -1.0;

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    const double eps = 1e-11 * std::max(1.0, shifted.max_abs());
    const long pivot_cap = 2000L * (m + n + 2);
    long pivots = 0;

    while (true) {
        // Entering column: lowest index with a negative reduced cost.
        int enter = -1;
        for (int j = 0; j < n + m; ++j) {
            if (t[m][j] < -eps) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;  // optimal

        // Leaving row: minimum ratio, ties broken by lowest basis index.
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i)
            if (t[i][enter] > eps)
                best_ratio = std::min(best_ratio, t[i][rhs] / t[i][enter]);
        if (!std::isfinite(best_ratio))
            throw SolverFailure("matrix game LP is unbounded; payoff shift failed");
        int leave = -1;
        for (int i = 0; i < m; ++i) {
            if (t[i][enter] > eps &&
                t[i][rhs] / t[i][enter] <= best_ratio + eps &&
                (leave < 0 || basis[i] < basis[leave]))
                leave = i;
        }

        // Pivot.
        double piv = t[leave][enter];
        for (int j = 0; j < cols; ++j) t[leave][j] /= piv;
        t[leave][enter] = 1.0;
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            double f = t[i][enter];
            if (f == 0.0) continue;
            for (int j = 0; j < cols; ++j) t[i][j] -= f * t[leave][j];
            t[i][enter] = 0.0;
        }
        basis[leave] = enter;

        if (++pivots > pivot_cap)
            throw SolverFailure("matrix game LP exceeded pivot cap (" +
                                std::to_string(pivot_cap) + ")");
    }

    double sum_y = t[m][rhs];  // optimum of max sum(y) = 1/v'
    if (!(sum_y > 0.0))
        throw SolverFailure("matrix game LP reached a non-positive objective");

    SimplexResult res;
    res.shifted_value = 1.0 / sum_y;

    res.col_strategy.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) res.col_strategy[basis[i]] = t[i][rhs];

    // Dual values sit in the objective row under the slack columns.
    res.row_strategy.assign(m, 0.0);
    for (int i = 0; i < m; ++i) res.row_strategy[i] = t[m][n + i];

    auto normalize = [](std::vector<double>& p) {
        double s = 0.0;
        for (double& v : p) {
            if (v < 0.0) v = 0.0;  // clip simplex round-off
            s += v;
        }
        if (!(s > 0.0)) throw SolverFailure("matrix game LP produced a zero strategy");
        for (double& v : p) v /= s;
    };
    normalize(res.row_strategy);
    normalize(res.col_strategy);
    return res;
}

}  // namespace detail

/// Solves the zero-sum matrix game exactly (up to LP round-off).
///
/// Returns the game value and optimal mixed strategies for both players.
/// After solving, the result is checked against the saddle-point conditions:
/// min_o pi^T q >= value - tol and max_a (q nu)_a <= value + tol, where tol
/// is scaled by the payoff magnitude. Throws SolverFailure if the certificate
/// fails, NonFiniteInput on NaN/inf entries, InvalidParams on tol <= 0.
inline GameSolution solve_matrix_game(const PayoffMatrix& q, double tol = 1e-9) {
    if (!(tol > 0.0)) throw InvalidParams("solve_matrix_game: tol must be positive");
    if (q.rows() < 1 || q.cols() < 1)
        throw InvalidParams("solve_matrix_game: empty payoff matrix");
    if (!q.all_finite()) throw NonFiniteInput("solve_matrix_game: non-finite payoff entry");

    // Shift payoffs by 1 + max(0, -min) so every entry is >= 1 and the game
    // value is strictly positive (required by the reciprocal-form LP).
    double lo = q(0, 0);
    for (int a = 0; a < q.rows(); ++a)
        for (int o = 0; o < q.cols(); ++o) lo = std::min(lo, q(a, o));
    const double shift = 1.0 + std::max(0.0, -lo);
    PayoffMatrix shifted(q.rows(), q.cols());
    for (int a = 0; a < q.rows(); ++a)
        for (int o = 0; o < q.cols(); ++o) shifted(a, o) = q(a, o) + shift;

    detail::SimplexResult lp = detail::solve_shifted_game(shifted);

    GameSolution sol;
    sol.value = lp.shifted_value - shift;
    sol.strategy = std::move(lp.row_strategy);
    sol.opponent_strategy = std::move(lp.col_strategy);

    // Saddle-point certificate on the original payoffs.
    const double scale = std::max(1.0, q.max_abs());
    const double guarantee = response_value(sol.strategy, q);
    double exposure = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.rows(); ++a) {
        double v = 0.0;
        for (int o = 0; o < q.cols(); ++o) v += sol.opponent_strategy[o] * q(a, o);
        exposure = std::max(exposure, v);
    }
    const double residual =
        std::max({sol.value - guarantee, exposure - sol.value, guarantee - exposure});
    if (residual > tol * scale)
        throw SolverFailure("solve_matrix_game: saddle-point residual " +
                            std::to_string(residual) + " exceeds tolerance");
    return sol;
}

/// Value of the matrix game (the `val` operator).
inline double game_value(const PayoffMatrix& q, double tol = 1e-9) {
    return solve_matrix_game(q, tol).value;
}

}  // namespace sorql
