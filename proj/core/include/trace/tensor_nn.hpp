#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "trace/event_model.hpp"

namespace trace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexMatrix = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic>;

struct EmbeddingSpec {
    int rows = 0;
    int dim = 0;
    bool operator==(const EmbeddingSpec&) const = default;
};

/// Feedforward network shape: [numeric | embeddings] -> hidden ReLU layers -> linear outputs.
struct NetSpec {
    int numeric_dim = 0;
    std::vector<EmbeddingSpec> embeddings;
    std::vector<int> hidden;
    int outputs = 1;

    int input_dim() const;
    bool operator==(const NetSpec&) const = default;
};

/// A batch of network inputs, one row per example.
struct InputBatch {
    Matrix numeric;         // batch x numeric_dim
    IndexMatrix categorical;  // batch x embedding fields

    Eigen::Index size() const { return numeric.rows(); }

    static InputBatch from_features(std::span<const FeatureVector> xs);
};

/// One tensor per parameter block, in DenseNet::parameters() order.
struct Gradients {
    std::vector<Matrix> tensors;

    void add_scaled(const Gradients& other, double scale);
    bool same_shape(const std::vector<Matrix>& params) const;
};

class DenseNet {
public:
    DenseNet() = default;
    DenseNet(NetSpec spec, std::uint64_t seed);

    const NetSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t param_count() const;

    /// Runs the network and records the activations needed by backward().
    Matrix forward(const InputBatch& x);
    Vector forward(const FeatureVector& x);

    /// Runs the network without touching the recorded tape.
    Matrix infer(const InputBatch& x) const;

    /// Gradients of sum_i <upstream_i, logits_i> w.r.t. every parameter,
    /// for the most recent forward(). Throws std::logic_error without one.
    Gradients backward(const Matrix& upstream) const;

    /// Block layout: embedding tables, then (weight, bias) per layer.
    std::vector<Matrix>& parameters() { return params_; }
    const std::vector<Matrix>& parameters() const { return params_; }
    Gradients zero_gradients() const;

    /// Sum of squared parameters.
    double squared_norm() const;
    /// FNV-1a over the raw parameter bytes.
    std::uint64_t checksum() const;
    /// Throws std::runtime_error if any parameter is NaN or infinite.
    void check_finite() const;

    /// Layer count including the output layer.
    int layer_count() const { return static_cast<int>(spec_.hidden.size()) + 1; }
    Matrix& weight(int layer) { return params_[weight_index(layer)]; }
    Matrix& bias(int layer) { return params_[weight_index(layer) + 1]; }

private:
    std::size_t weight_index(int layer) const { return spec_.embeddings.size() + 2 * static_cast<std::size_t>(layer); }
    Matrix assemble_input(const InputBatch& x) const;

    NetSpec spec_;
    std::uint64_t seed_ = 0;
    std::vector<Matrix> params_;

    struct Tape {
        IndexMatrix categorical;
        std::vector<Matrix> inputs;  // input to each layer
        std::vector<Matrix> pre;     // pre-activation of each layer
    };
    std::optional<Tape> tape_;
};

/// Gradient of l2 * ||params||^2.
Gradients l2_gradients(const DenseNet& net, double l2);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double l2 = 1e-6;
};

struct OptimizerState {
    AdamConfig config;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::int64_t step = 0;

    static OptimizerState for_net(const DenseNet& net, AdamConfig config);
};

/// Adam with bias correction. The L2 term enters as 2*l2*p added to the
/// gradient (a loss term, not decoupled decay).
void adam_step(DenseNet& net, const Gradients& grads, OptimizerState& opt);

/// Binary checkpoint: "TRACE-NET 1" line, one-line JSON header, raw doubles.
void save_checkpoint(const std::filesystem::path& path, const DenseNet& net,
                     const OptimizerState* opt = nullptr);
DenseNet load_checkpoint(const std::filesystem::path& path, OptimizerState* opt = nullptr);

}  // namespace trace
