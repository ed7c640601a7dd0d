#include "spikeprune/mlp.hpp"

#include <cmath>

namespace spikeprune {

namespace {

// Largest double below 1.0; keeps squashed outputs inside [0,1).
constexpr double kBelowOne = 0x1.fffffffffffffp-1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

MlpNet MlpNet::make(std::vector<int> sizes, Output output, Rng& rng) {
    require(sizes.size() >= 2, "MLP needs at least input and output sizes");
    require(sizes.back() == 1, "MLP output is scalar");
    MlpNet net;
    net.sizes = std::move(sizes);
    net.output = output;
    for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
        int in = net.sizes[l], out = net.sizes[l + 1];
        TensorND w = TensorND::zeros({out, in});
        TensorND b = TensorND::zeros({out});
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& v : w.data) v = uniform_range(rng, -bound, bound);
        for (double& v : b.data) v = uniform_range(rng, -bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

double MlpNet::forward(std::span<const double> in, Trace* trace) const {
    require(static_cast<int>(in.size()) == input_dim(), "MLP input size mismatch");
    std::vector<double> cur(in.begin(), in.end());
    if (trace) {
        trace->act.clear();
        trace->act.push_back(cur);
    }
    const std::size_t L = weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        const int n_out = sizes[l + 1], n_in = sizes[l];
        std::vector<double> next(n_out);
        for (int o = 0; o < n_out; ++o) {
            const double* wrow = weights[l].ptr() + static_cast<std::int64_t>(o) * n_in;
            double acc = biases[l][o];
            for (int i = 0; i < n_in; ++i) acc += wrow[i] * cur[i];
            if (l + 1 < L)
                next[o] = std::tanh(acc);
            else
                next[o] = output == Output::Squashed ? sigmoid(acc) : acc;
        }
        cur = std::move(next);
        if (trace) trace->act.push_back(cur);
    }
    double out = cur[0];
    return output == Output::Squashed ? std::min(out, kBelowOne) : out;
}

MlpNet::Grads MlpNet::Grads::like(const MlpNet& net) {
    Grads g;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.dw.push_back(TensorND::zeros(net.weights[l].shape));
        g.db.push_back(TensorND::zeros(net.biases[l].shape));
    }
    return g;
}

void MlpNet::Grads::zero() {
    for (auto& t : dw) t.fill(0.0);
    for (auto& t : db) t.fill(0.0);
}

void MlpNet::backward(const Trace& trace, double dout, Grads& grads,
                      std::vector<double>* dinput) const {
    const std::size_t L = weights.size();
    require(trace.act.size() == L + 1, "MLP trace does not match net");

    std::vector<double> delta(1, dout);
    // Output nonlinearity.
    if (output == Output::Squashed) {
        double y = trace.act.back()[0];
        delta[0] *= y * (1.0 - y);
    }
    for (std::size_t l = L; l-- > 0;) {
        const int n_out = sizes[l + 1], n_in = sizes[l];
        const auto& x = trace.act[l];
        std::vector<double> dprev(n_in, 0.0);
        for (int o = 0; o < n_out; ++o) {
            const double g = delta[o];
            grads.db[l][o] += g;
            double* dwrow = grads.dw[l].ptr() + static_cast<std::int64_t>(o) * n_in;
            const double* wrow = weights[l].ptr() + static_cast<std::int64_t>(o) * n_in;
            for (int i = 0; i < n_in; ++i) {
                dwrow[i] += g * x[i];
                dprev[i] += g * wrow[i];
            }
        }
        if (l > 0) {
            // tanh derivative from the stored activations
            for (int i = 0; i < n_in; ++i) dprev[i] *= 1.0 - trace.act[l][i] * trace.act[l][i];
        }
        delta = std::move(dprev);
    }
    if (dinput) *dinput = std::move(delta);
}

AdamState AdamState::like(const MlpNet& net) {
    AdamState s;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        s.m_w.push_back(TensorND::zeros(net.weights[l].shape));
        s.v_w.push_back(TensorND::zeros(net.weights[l].shape));
        s.m_b.push_back(TensorND::zeros(net.biases[l].shape));
        s.v_b.push_back(TensorND::zeros(net.biases[l].shape));
    }
    return s;
}

namespace {

void adam_update(double* w, const double* g, double* m, double* v, std::int64_t n, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2) {
    for (std::int64_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        double mh = m[i] / bc1;
        double vh = v[i] / bc2;
        w[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

}  // namespace

void adam_step(MlpNet& net, const MlpNet::Grads& grads, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        adam_update(net.weights[l].ptr(), grads.dw[l].ptr(), state.m_w[l].ptr(),
                    state.v_w[l].ptr(), net.weights[l].numel(), lr, beta1, beta2, eps, bc1, bc2);
        adam_update(net.biases[l].ptr(), grads.db[l].ptr(), state.m_b[l].ptr(),
                    state.v_b[l].ptr(), net.biases[l].numel(), lr, beta1, beta2, eps, bc1, bc2);
    }
}

void soft_update(MlpNet& target, const MlpNet& online, double tau) {
    require(target.sizes == online.sizes, "soft_update: size mismatch");
    for (std::size_t l = 0; l < target.weights.size(); ++l) {
        for (std::int64_t i = 0; i < target.weights[l].numel(); ++i)
            target.weights[l][i] = tau * online.weights[l][i] + (1.0 - tau) * target.weights[l][i];
        for (std::int64_t i = 0; i < target.biases[l].numel(); ++i)
            target.biases[l][i] = tau * online.biases[l][i] + (1.0 - tau) * target.biases[l][i];
    }
}

}  // namespace spikeprune
