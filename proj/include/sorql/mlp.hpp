#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sorql/errors.hpp"
#include "sorql/matrix_game.hpp"
#include "sorql/rng.hpp"

namespace sorql {

/// Fully-connected network: rectified-linear hidden layers, linear output.
/// weights[l] has shape (units_out x units_in); the output is reshaped into a
/// PayoffMatrix row-major (unit index = a * num_opponent_actions + o).
struct MlpParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    int layer_count() const { return static_cast<int>(weights.size()); }

    long param_count() const {
        long n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            n += weights[l].size() + biases[l].size();
        return n;
    }

    bool all_finite() const {
        for (std::size_t l = 0; l < weights.size(); ++l)
            if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
        return true;
    }

    void set_zero() {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l].setZero();
            biases[l].setZero();
        }
    }
};

/// Gradients share the parameter layout.
using MlpGradient = MlpParams;

/// Uniform fan-in initialization: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// biases zero. `hidden` may be empty (single linear layer).
inline MlpParams make_mlp(int input, const std::vector<int>& hidden, int output, Rng& rng) {
    if (input < 1 || output < 1) throw InvalidParams("make_mlp: empty input or output layer");
    for (int h : hidden)
        if (h < 1) throw InvalidParams("make_mlp: hidden layer sizes must be positive");
    std::vector<int> sizes;
    sizes.push_back(input);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output);

    MlpParams p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return p;
}

inline MlpParams zeros_like(const MlpParams& p) {
    MlpParams z = p;
    z.set_zero();
    return z;
}

/// Reusable forward/backward buffers; activations[0] aliases the input batch.
struct MlpWorkspace {
    std::vector<Eigen::MatrixXd> activations;
    std::vector<Eigen::MatrixXd> deltas;
};

/// Batched forward pass: X is (input_dim x m); returns (output_dim x m) in
/// ws.activations.back().
inline const Eigen::MatrixXd& mlp_forward_batch(const MlpParams& p, const Eigen::MatrixXd& x,
                                                MlpWorkspace& ws) {
    if (x.rows() != p.input_dim())
        throw DimensionMismatch("mlp_forward_batch: feature rows " + std::to_string(x.rows()) +
                                " != input dim " + std::to_string(p.input_dim()));
    const int layers = p.layer_count();
    ws.activations.resize(layers + 1);
    ws.activations[0] = x;
    for (int l = 0; l < layers; ++l) {
        Eigen::MatrixXd& out = ws.activations[l + 1];
        out.noalias() = p.weights[l] * ws.activations[l];
        out.colwise() += p.biases[l];
        if (l + 1 < layers) out = out.cwiseMax(0.0);  // rectifier on hidden layers
    }
    return ws.activations.back();
}

/// Single-state forward pass returning the induced payoff matrix.
inline PayoffMatrix mlp_forward(const MlpParams& p, const std::vector<double>& features,
                                int num_actions, int num_opponent_actions) {
    if (num_actions * num_opponent_actions != p.output_dim())
        throw DimensionMismatch("mlp_forward: output dim does not factor into |A|x|O|");
    Eigen::MatrixXd x(features.size(), 1);
    for (std::size_t i = 0; i < features.size(); ++i) x(static_cast<int>(i), 0) = features[i];
    MlpWorkspace ws;
    const Eigen::MatrixXd& y = mlp_forward_batch(p, x, ws);
    PayoffMatrix q(num_actions, num_opponent_actions);
    for (int a = 0; a < num_actions; ++a)
        for (int o = 0; o < num_opponent_actions; ++o)
            q(a, o) = y(a * num_opponent_actions + o, 0);
    return q;
}

/// Loss and exact gradient of the half-mean-squared objective
///   L = (1/2m) * sum_k (output(unit_k, k) - target_k)^2
/// over a batch X of m columns. Only the selected output unit of each sample
/// carries error; the gradient is accumulated into `grad` (overwritten).
inline double mlp_gradient(const MlpParams& p, const Eigen::MatrixXd& x,
                           const std::vector<int>& units, const std::vector<double>& targets,
                           MlpGradient& grad, MlpWorkspace& ws) {
    const int m = static_cast<int>(x.cols());
    if (m == 0) throw InvalidParams("mlp_gradient: empty batch");
    if (static_cast<int>(units.size()) != m || static_cast<int>(targets.size()) != m)
        throw DimensionMismatch("mlp_gradient: batch arrays disagree in length");

    const Eigen::MatrixXd& out = mlp_forward_batch(p, x, ws);
    const int layers = p.layer_count();

    double loss = 0.0;
    Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(out.rows(), m);
    for (int k = 0; k < m; ++k) {
        if (units[k] < 0 || units[k] >= out.rows())
            throw DimensionMismatch("mlp_gradient: output unit out of range");
        const double err = out(units[k], k) - targets[k];
        loss += err * err;
        dz(units[k], k) = err / m;
    }
    loss /= 2.0 * m;

    if (grad.weights.size() != p.weights.size()) grad = zeros_like(p);
    for (int l = layers - 1; l >= 0; --l) {
        grad.weights[l].noalias() = dz * ws.activations[l].transpose();
        grad.biases[l] = dz.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd da;
            da.noalias() = p.weights[l].transpose() * dz;
            // Rectifier mask: a > 0 iff z > 0 for hidden activations.
            dz = da.cwiseProduct(
                (ws.activations[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

inline void sgd_step(MlpParams& p, const MlpGradient& grad, double lr) {
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        p.weights[l] -= lr * grad.weights[l];
        p.biases[l] -= lr * grad.biases[l];
    }
}

/// Adaptive-moment optimizer state (decay 0.9/0.999, epsilon 1e-8).
struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long t = 0;
};

inline void adam_step(MlpParams& p, const MlpGradient& grad, AdamState& st, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    if (st.mw.size() != p.weights.size()) {
        st.mw.clear();
        st.vw.clear();
        st.mb.clear();
        st.vb.clear();
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            st.mw.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
            st.vw.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
            st.mb.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
            st.vb.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
        }
    }
    ++st.t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        st.mw[l] = beta1 * st.mw[l] + (1.0 - beta1) * grad.weights[l];
        st.vw[l] = beta2 * st.vw[l] + (1.0 - beta2) * grad.weights[l].cwiseAbs2();
        p.weights[l].array() -=
            lr * (st.mw[l].array() / c1) / ((st.vw[l].array() / c2).sqrt() + eps);
        st.mb[l] = beta1 * st.mb[l] + (1.0 - beta1) * grad.biases[l];
        st.vb[l] = beta2 * st.vb[l] + (1.0 - beta2) * grad.biases[l].cwiseAbs2();
        p.biases[l].array() -=
            lr * (st.mb[l].array() / c1) / ((st.vb[l].array() / c2).sqrt() + eps);
    }
}

// ---------------------------------------------------------------------------
// Hashing and persistence
// ---------------------------------------------------------------------------

/// FNV-1a over the raw parameter bytes; used to assert that parameter sets
/// change only when they are supposed to.
inline std::uint64_t params_hash(const MlpParams& p) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const double* data, long n) {
        for (long i = 0; i < n; ++i) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        }
    };
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        mix(p.weights[l].data(), p.weights[l].size());
        mix(p.biases[l].data(), p.biases[l].size());
    }
    return h;
}

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian float64; big-endian hosts need byte swaps");

/// Writes parameters as a flat binary of little-endian 64-bit floats
/// (weights then bias per layer, column-major matrix storage) plus a JSON
/// shape manifest alongside.
inline void save_mlp(const MlpParams& p, const std::string& bin_path,
                     const std::string& manifest_path) {
    std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
    if (!bin) throw Error("save_mlp: cannot open " + bin_path);
    long offset = 0;
    std::string manifest = "{\n  \"dtype\": \"float64-le\",\n  \"order\": \"column-major\",\n  \"layers\": [\n";
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const auto& w = p.weights[l];
        const auto& b = p.biases[l];
        bin.write(reinterpret_cast<const char*>(w.data()),
                  static_cast<std::streamsize>(sizeof(double) * w.size()));
        bin.write(reinterpret_cast<const char*>(b.data()),
                  static_cast<std::streamsize>(sizeof(double) * b.size()));
        manifest += "    {\"weight_shape\": [" + std::to_string(w.rows()) + ", " +
                    std::to_string(w.cols()) + "], \"bias_shape\": [" +
                    std::to_string(b.size()) + "], \"offset\": " + std::to_string(offset) +
                    "}";
        manifest += (l + 1 < p.weights.size()) ? ",\n" : "\n";
        offset += w.size() + b.size();
    }
    manifest += "  ],\n  \"total_values\": " + std::to_string(offset) + "\n}\n";
    if (!bin) throw Error("save_mlp: write failed for " + bin_path);
    bin.close();
    std::ofstream man(manifest_path, std::ios::trunc);
    if (!man) throw Error("save_mlp: cannot open " + manifest_path);
    man << manifest;
}

inline MlpParams load_mlp(const std::string& bin_path, const MlpParams& shape_like) {
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw Error("load_mlp: cannot open " + bin_path);
    MlpParams p = shape_like;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        bin.read(reinterpret_cast<char*>(p.weights[l].data()),
                 static_cast<std::streamsize>(sizeof(double) * p.weights[l].size()));
        bin.read(reinterpret_cast<char*>(p.biases[l].data()),
                 static_cast<std::streamsize>(sizeof(double) * p.biases[l].size()));
    }
    if (!bin) throw Error("load_mlp: file too short: " + bin_path);
    return p;
}

}  // namespace sorql
