#include "snap/lstm.hpp"

#include "snap/error.hpp"
#include "snap/kernels.hpp"

#include <cmath>

namespace snap {

namespace {

inline double gate_act(double a, const LstmOptions& opts) {
    if (opts.gate_act == GateActivation::sigmoid) return 1.0 / (1.0 + std::exp(-a));
    double v = a > 0.0 ? a : 0.0;
    if (opts.gate_cap > 0.0 && v > opts.gate_cap) v = opts.gate_cap;
    return v;
}

// Derivative in terms of preactivation a and activated value v.
inline double gate_act_deriv(double a, double v, const LstmOptions& opts) {
    if (opts.gate_act == GateActivation::sigmoid) return v * (1.0 - v);
    if (a <= 0.0) return 0.0; // subgradient at 0 fixed to 0
    if (opts.gate_cap > 0.0 && a >= opts.gate_cap) return 0.0;
    return 1.0;
}

// preact = W^T [x; h_prev] + b, accumulated row-by-row so each term is a
// contiguous axpy over the 4d gate row.
void preactivation(const LstmLayerParams& p, std::span<const double> x,
                   std::span<const double> h_prev, std::vector<double>& preact) {
    const std::size_t n4d = 4 * p.hidden_dim;
    preact.assign(p.b.begin(), p.b.end());
    for (std::size_t i = 0; i < p.input_dim; ++i)
        if (x[i] != 0.0) kernels::axpy(n4d, x[i], p.W.row(i), preact.data());
    for (std::size_t j = 0; j < p.hidden_dim; ++j)
        if (h_prev[j] != 0.0)
            kernels::axpy(n4d, h_prev[j], p.W.row(p.input_dim + j), preact.data());
    for (double v : preact)
        if (!std::isfinite(v)) throw NumericError("lstm: non-finite preactivation");
}

void check_layer(const LstmLayerParams& p) {
    if (p.W.rows != p.input_dim + p.hidden_dim || p.W.cols != 4 * p.hidden_dim ||
        p.b.size() != 4 * p.hidden_dim)
        throw ShapeError("lstm: layer parameter shapes inconsistent");
}

} // namespace

DropoutMask DropoutMask::identity(std::size_t n) {
    return {1.0, std::vector<double>(n, 1.0)};
}

DropoutMask DropoutMask::sample(Rng& rng, std::size_t n, double keep_prob) {
    if (keep_prob <= 0.0 || keep_prob > 1.0)
        throw ParamError("DropoutMask: keep_prob must be in (0,1]");
    DropoutMask m{keep_prob, std::vector<double>(n)};
    const double inv = 1.0 / keep_prob;
    for (auto& v : m.mask) v = rng.uniform() < keep_prob ? inv : 0.0;
    return m;
}

LstmState lstm_step(const LstmLayerParams& params, std::span<const double> x,
                    const LstmState& prev, const LstmOptions& opts) {
    check_layer(params);
    if (x.size() != params.input_dim) throw ShapeError("lstm_step: input length");
    if (prev.h.size() != params.hidden_dim || prev.c.size() != params.hidden_dim)
        throw ShapeError("lstm_step: state length");

    const std::size_t d = params.hidden_dim;
    std::vector<double> a;
    preactivation(params, x, prev.h, a);

    LstmState next = LstmState::zeros(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double i_g = gate_act(a[j], opts);
        const double f_g = gate_act(a[d + j], opts);
        const double o_g = gate_act(a[2 * d + j], opts);
        const double g = std::tanh(a[3 * d + j]);
        next.c[j] = f_g * prev.c[j] + i_g * g;
        next.h[j] = o_g * std::tanh(next.c[j]);
    }
    return next;
}

std::vector<double> lstm_forward(const LstmStack& stack,
                                 std::span<const std::span<const double>> sequence,
                                 const std::vector<DropoutMask>& masks,
                                 LstmCache* cache) {
    if (sequence.empty()) throw InputError("lstm_forward: empty sequence");
    if (stack.layers.empty()) throw InputError("lstm_forward: empty stack");
    const std::size_t L = stack.layers.size();
    const std::size_t T = sequence.size();
    if (!masks.empty() && masks.size() != L)
        throw ShapeError("lstm_forward: one mask per layer expected");
    for (std::size_t l = 0; l < L; ++l) {
        check_layer(stack.layers[l]);
        const std::size_t expect =
            l == 0 ? sequence[0].size() : stack.layers[l - 1].hidden_dim;
        if (stack.layers[l].input_dim != expect)
            throw ShapeError("lstm_forward: layer input dim mismatch");
        if (!masks.empty() && masks[l].mask.size() != stack.layers[l].input_dim)
            throw ShapeError("lstm_forward: mask length mismatch");
    }

    if (cache) {
        cache->T = T;
        cache->layers.assign(L, {});
        cache->masks = masks.empty()
                           ? std::vector<DropoutMask>{}
                           : masks;
        if (cache->masks.empty())
            for (std::size_t l = 0; l < L; ++l)
                cache->masks.push_back(DropoutMask::identity(stack.layers[l].input_dim));
        for (std::size_t l = 0; l < L; ++l) {
            auto& cl = cache->layers[l];
            cl.x_drop.resize(T);
            cl.preact.resize(T);
            cl.gates.resize(T);
            cl.c.resize(T);
            cl.tanh_c.resize(T);
            cl.h.resize(T);
        }
    }

    // layer_out holds h^l_t for the layer just processed, across all t.
    std::vector<std::vector<double>> layer_in(T);
    for (std::size_t t = 0; t < T; ++t)
        layer_in[t].assign(sequence[t].begin(), sequence[t].end());

    std::vector<double> x_drop, a, gates;
    for (std::size_t l = 0; l < L; ++l) {
        const auto& p = stack.layers[l];
        const std::size_t d = p.hidden_dim;
        const bool apply_mask = !masks.empty() && masks[l].keep_prob < 1.0;
        LstmState state = LstmState::zeros(d);
        std::vector<std::vector<double>> layer_out(T);

        for (std::size_t t = 0; t < T; ++t) {
            x_drop = layer_in[t];
            if (apply_mask)
                for (std::size_t i = 0; i < x_drop.size(); ++i)
                    x_drop[i] *= masks[l].mask[i];

            preactivation(p, x_drop, state.h, a);
            gates.resize(4 * d);
            std::vector<double> c_new(d), tanh_c(d), h_new(d);
            for (std::size_t j = 0; j < d; ++j) {
                gates[j] = gate_act(a[j], stack.opts);
                gates[d + j] = gate_act(a[d + j], stack.opts);
                gates[2 * d + j] = gate_act(a[2 * d + j], stack.opts);
                gates[3 * d + j] = std::tanh(a[3 * d + j]);
                c_new[j] = gates[d + j] * state.c[j] + gates[j] * gates[3 * d + j];
                tanh_c[j] = std::tanh(c_new[j]);
                h_new[j] = gates[2 * d + j] * tanh_c[j];
            }
            if (cache) {
                auto& cl = cache->layers[l];
                cl.x_drop[t] = x_drop;
                cl.preact[t] = a;
                cl.gates[t] = gates;
                cl.c[t] = c_new;
                cl.tanh_c[t] = tanh_c;
                cl.h[t] = h_new;
            }
            state.c = std::move(c_new);
            state.h = h_new;
            layer_out[t] = std::move(h_new);
        }
        layer_in = std::move(layer_out);
    }
    return layer_in[T - 1];
}

LstmGrads lstm_backward(const LstmStack& stack, const LstmCache& cache,
                        std::span<const double> d_h_final) {
    const std::size_t L = stack.layers.size();
    const std::size_t T = cache.T;
    if (cache.layers.size() != L || cache.masks.size() != L)
        throw Error("lstm_backward: cache does not match stack");
    if (d_h_final.size() != stack.hidden_dim())
        throw ShapeError("lstm_backward: upstream gradient length");

    LstmGrads grads;
    grads.layers.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        grads.layers[l].dW = Matrix(stack.layers[l].W.rows, stack.layers[l].W.cols);
        grads.layers[l].db.assign(stack.layers[l].b.size(), 0.0);
    }

    // dh_extra[t]: gradient injected into the current layer's h_t from above
    // (the head for layer L, the next layer's input path otherwise).
    std::vector<std::vector<double>> dh_extra(T);
    for (std::size_t t = 0; t + 1 < T; ++t)
        dh_extra[t].assign(stack.hidden_dim(), 0.0);
    dh_extra[T - 1].assign(d_h_final.begin(), d_h_final.end());

    for (std::size_t li = L; li-- > 0;) {
        const auto& p = stack.layers[li];
        const auto& cl = cache.layers[li];
        const auto& mask = cache.masks[li];
        const std::size_t d = p.hidden_dim;
        const std::size_t din = p.input_dim;

        std::vector<std::vector<double>> below(T);
        std::vector<double> dh_next(d, 0.0), dc_next(d, 0.0);
        std::vector<double> da(4 * d), du(din + d);

        for (std::size_t t = T; t-- > 0;) {
            const auto& a = cl.preact[t];
            const auto& gates = cl.gates[t];
            const auto& tanh_c = cl.tanh_c[t];
            const std::vector<double>* c_prev = t > 0 ? &cl.c[t - 1] : nullptr;
            const std::vector<double>* h_prev = t > 0 ? &cl.h[t - 1] : nullptr;

            for (std::size_t j = 0; j < d; ++j) {
                const double dh = dh_extra[t][j] + dh_next[j];
                const double i_g = gates[j];
                const double f_g = gates[d + j];
                const double o_g = gates[2 * d + j];
                const double g = gates[3 * d + j];
                const double tc = tanh_c[j];
                const double cp = c_prev ? (*c_prev)[j] : 0.0;

                const double do_ = dh * tc;
                const double dc = dc_next[j] + dh * o_g * (1.0 - tc * tc);
                const double di = dc * g;
                const double df = dc * cp;
                const double dg = dc * i_g;
                dc_next[j] = dc * f_g;

                da[j] = di * gate_act_deriv(a[j], i_g, stack.opts);
                da[d + j] = df * gate_act_deriv(a[d + j], f_g, stack.opts);
                da[2 * d + j] = do_ * gate_act_deriv(a[2 * d + j], o_g, stack.opts);
                da[3 * d + j] = dg * (1.0 - g * g);
            }

            // dW += u da^T with u = [x_drop; h_prev]; db += da; du = W da.
            auto& gl = grads.layers[li];
            const auto& x = cl.x_drop[t];
            for (std::size_t i = 0; i < din; ++i)
                if (x[i] != 0.0) kernels::axpy(4 * d, x[i], da.data(), gl.dW.row(i));
            for (std::size_t j = 0; j < d; ++j) {
                const double hp = h_prev ? (*h_prev)[j] : 0.0;
                if (hp != 0.0) kernels::axpy(4 * d, hp, da.data(), gl.dW.row(din + j));
            }
            kernels::axpy(4 * d, 1.0, da.data(), gl.db.data());

            for (std::size_t i = 0; i < din + d; ++i)
                du[i] = kernels::dot(p.W.row(i), da.data(), 4 * d);

            below[t].resize(din);
            for (std::size_t i = 0; i < din; ++i)
                below[t][i] = du[i] * mask.mask[i];
            for (std::size_t j = 0; j < d; ++j) dh_next[j] = du[din + j];
        }
        dh_extra = std::move(below);
    }
    grads.d_inputs = std::move(dh_extra);
    return grads;
}

LstmLayerParams init_params(Rng& rng, std::size_t input_dim, std::size_t hidden_dim,
                            double forget_bias) {
    if (input_dim == 0 || hidden_dim == 0)
        throw ParamError("init_params: dims must be positive");
    LstmLayerParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    const std::size_t fan_in = input_dim + hidden_dim;
    const std::size_t fan_out = 4 * hidden_dim;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    p.W = Matrix(fan_in, fan_out);
    for (auto& w : p.W.data) w = rng.uniform(-bound, bound);
    p.b.assign(4 * hidden_dim, 0.0);
    for (std::size_t j = 0; j < hidden_dim; ++j) p.b[hidden_dim + j] = forget_bias;
    return p;
}

std::size_t param_count(const LstmStack& stack) {
    std::size_t n = 0;
    for (const auto& l : stack.layers) n += l.W.size() + l.b.size();
    return n;
}

} // namespace snap
