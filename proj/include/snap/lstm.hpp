#pragma once

#include "snap/matrix.hpp"
#include "snap/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace snap {

// Recurrent cell with ReLU-activated input/forget/output gates, tanh cell
// candidate, and dropout applied to the non-recurrent input only:
//
//   a = W^T [drop(x); h_prev] + b,  a split into [input|forget|output|g]
//   i,f,o = act(a_*),  g = tanh(a_g)
//   c = f . c_prev + i . g
//   h = o . tanh(c)
//
// ReLU gates are unbounded, so callers can opt into a gate-output cap;
// the default leaves gates uncapped. Sigmoid gates are available as a
// configuration alternative.

enum class GateActivation { relu, sigmoid };

struct LstmOptions {
    GateActivation gate_act = GateActivation::relu;
    double gate_cap = 0.0; // cap on ReLU gate outputs; 0 = off
};

struct LstmLayerParams {
    std::size_t input_dim = 0;  // d_in
    std::size_t hidden_dim = 0; // d
    Matrix W;                   // (d_in + d) x 4d, gate blocks [i|f|o|g]
    std::vector<double> b;      // 4d
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;

    static LstmState zeros(std::size_t d) { return {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)}; }
};

/// Inverted-scaling dropout mask: entries are 0 or 1/keep_prob, so
/// evaluation mode needs no rescale. keep_prob = 1 is the identity.
struct DropoutMask {
    double keep_prob = 1.0;
    std::vector<double> mask;

    static DropoutMask identity(std::size_t n);
    static DropoutMask sample(Rng& rng, std::size_t n, double keep_prob);
};

struct LstmStack {
    std::vector<LstmLayerParams> layers;
    LstmOptions opts;

    std::size_t hidden_dim() const { return layers.back().hidden_dim; }
    std::size_t input_dim() const { return layers.front().input_dim; }
};

/// Everything the backward pass needs, recorded per (layer, timestep)
/// during a cached forward.
struct LstmCache {
    struct Layer {
        std::vector<std::vector<double>> x_drop; // post-dropout input, T x d_in
        std::vector<std::vector<double>> preact; // T x 4d
        std::vector<std::vector<double>> gates;  // activated [i|f|o|g], T x 4d
        std::vector<std::vector<double>> c;      // T x d
        std::vector<std::vector<double>> tanh_c; // T x d
        std::vector<std::vector<double>> h;      // T x d
    };
    std::size_t T = 0;
    std::vector<Layer> layers;
    std::vector<DropoutMask> masks; // per layer, applied at every timestep
};

struct LstmLayerGrads {
    Matrix dW;
    std::vector<double> db;
};

struct LstmGrads {
    std::vector<LstmLayerGrads> layers;
    // Gradient w.r.t. the raw (pre-dropout) sequence inputs, T x input_dim.
    std::vector<std::vector<double>> d_inputs;
};

/// One cell update. x is the layer input after dropout.
LstmState lstm_step(const LstmLayerParams& params, std::span<const double> x,
                    const LstmState& prev, const LstmOptions& opts = {});

/// Runs the stack over the sequence from zero initial states and returns the
/// top layer's hidden state at the last timestep. masks has one entry per
/// layer (pass {} for evaluation mode); the same per-layer mask is applied
/// at every timestep, to the non-recurrent input only. If cache is non-null
/// it is filled for a subsequent lstm_backward.
std::vector<double> lstm_forward(const LstmStack& stack,
                                 std::span<const std::span<const double>> sequence,
                                 const std::vector<DropoutMask>& masks,
                                 LstmCache* cache = nullptr);

/// Reverse-mode gradients of a scalar loss through the cached forward, given
/// the upstream gradient on the final hidden state. ReLU subgradient at 0
/// is 0.
LstmGrads lstm_backward(const LstmStack& stack, const LstmCache& cache,
                        std::span<const double> d_h_final);

/// Glorot-uniform weights; biases zero except the forget-gate block.
LstmLayerParams init_params(Rng& rng, std::size_t input_dim, std::size_t hidden_dim,
                            double forget_bias = 1.0);

std::size_t param_count(const LstmStack& stack);

} // namespace snap
