#pragma once

#include <span>
#include <vector>

#include "spikeprune/rng.hpp"
#include "spikeprune/tensor.hpp"

namespace spikeprune {

// Small fully-connected net with tanh hidden units and a scalar output,
// either squashed to [0,1) (actor) or linear (critic). Forward/backward are
// written out by hand; Adam drives the updates.
struct MlpNet {
    enum class Output { Squashed, Linear };

    std::vector<int> sizes;  // e.g. {10, 64, 64, 1}
    Output output = Output::Linear;
    std::vector<TensorND> weights;  // per layer, (out, in)
    std::vector<TensorND> biases;   // per layer, (out)

    static MlpNet make(std::vector<int> sizes, Output output, Rng& rng);

    int input_dim() const { return sizes.front(); }

    struct Trace {
        std::vector<std::vector<double>> act;  // act[0] = input, act[i] = post-layer i
    };

    // Scalar forward; fills `trace` when given. Squashed output is capped
    // strictly below 1 so it always lies in [0,1).
    double forward(std::span<const double> in, Trace* trace = nullptr) const;

    struct Grads {
        std::vector<TensorND> dw, db;

        static Grads like(const MlpNet& net);
        void zero();
    };

    // Backprop of a scalar output gradient; accumulates into `grads` and
    // optionally produces the input gradient.
    void backward(const Trace& trace, double dout, Grads& grads,
                  std::vector<double>* dinput = nullptr) const;
};

struct AdamState {
    std::vector<TensorND> m_w, v_w, m_b, v_b;
    std::int64_t step = 0;

    static AdamState like(const MlpNet& net);
};

void adam_step(MlpNet& net, const MlpNet::Grads& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// target <- tau * online + (1 - tau) * target
void soft_update(MlpNet& target, const MlpNet& online, double tau);

}  // namespace spikeprune
