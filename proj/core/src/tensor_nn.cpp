#include "trace/tensor_nn.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

namespace trace {

int NetSpec::input_dim() const {
    int dim = numeric_dim;
    for (const auto& e : embeddings) dim += e.dim;
    return dim;
}

InputBatch InputBatch::from_features(std::span<const FeatureVector> xs) {
    InputBatch b;
    const auto n = static_cast<Eigen::Index>(xs.size());
    const auto nd = xs.empty() ? 0 : static_cast<Eigen::Index>(xs.front().numeric.size());
    const auto nc = xs.empty() ? 0 : static_cast<Eigen::Index>(xs.front().categorical.size());
    b.numeric.resize(n, nd);
    b.categorical.resize(n, nc);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& x = xs[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(x.numeric.size()) != nd || static_cast<Eigen::Index>(x.categorical.size()) != nc) {
            throw std::invalid_argument("InputBatch: feature arity differs within batch");
        }
        for (Eigen::Index j = 0; j < nd; ++j) b.numeric(i, j) = x.numeric[static_cast<std::size_t>(j)];
        for (Eigen::Index j = 0; j < nc; ++j) b.categorical(i, j) = x.categorical[static_cast<std::size_t>(j)];
    }
    return b;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
    if (other.tensors.size() != tensors.size()) {
        throw std::invalid_argument("Gradients: block count mismatch");
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        tensors[i].noalias() += scale * other.tensors[i];
    }
}

bool Gradients::same_shape(const std::vector<Matrix>& params) const {
    if (params.size() != tensors.size()) return false;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].rows() != tensors[i].rows() || params[i].cols() != tensors[i].cols()) return false;
    }
    return true;
}

DenseNet::DenseNet(NetSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    if (spec_.outputs <= 0 || spec_.input_dim() <= 0) {
        throw std::invalid_argument("DenseNet: empty input or output layer");
    }
    std::mt19937_64 rng(seed);
    auto glorot = [&rng](Matrix& m, double fan_in, double fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    };
    for (const auto& e : spec_.embeddings) {
        if (e.rows <= 0 || e.dim <= 0) throw std::invalid_argument("DenseNet: bad embedding shape");
        Matrix table(e.rows, e.dim);
        // A lookup is a layer with a single active input.
        glorot(table, 1.0, e.dim);
        params_.push_back(std::move(table));
    }
    int in = spec_.input_dim();
    for (int l = 0; l < layer_count(); ++l) {
        const bool last = l == layer_count() - 1;
        const int out = last ? spec_.outputs : spec_.hidden[static_cast<std::size_t>(l)];
        if (out <= 0) throw std::invalid_argument("DenseNet: non-positive layer width");
        Matrix w(out, in);
        glorot(w, in, out);
        params_.push_back(std::move(w));
        params_.push_back(Matrix::Zero(out, 1));
        in = out;
    }
}

std::size_t DenseNet::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
}

Matrix DenseNet::assemble_input(const InputBatch& x) const {
    if (x.numeric.cols() != spec_.numeric_dim ||
        x.categorical.cols() != static_cast<Eigen::Index>(spec_.embeddings.size()) ||
        x.categorical.rows() != x.numeric.rows()) {
        throw std::invalid_argument("DenseNet: input arity does not match network schema");
    }
    Matrix in(x.size(), spec_.input_dim());
    in.leftCols(spec_.numeric_dim) = x.numeric;
    Eigen::Index col = spec_.numeric_dim;
    for (std::size_t f = 0; f < spec_.embeddings.size(); ++f) {
        const auto& table = params_[f];
        const auto dim = spec_.embeddings[f].dim;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const auto idx = x.categorical(i, static_cast<Eigen::Index>(f));
            if (idx >= static_cast<std::uint32_t>(table.rows())) {
                throw std::invalid_argument("DenseNet: categorical index outside embedding table");
            }
            in.block(i, col, 1, dim) = table.row(idx);
        }
        col += dim;
    }
    return in;
}

Matrix DenseNet::infer(const InputBatch& x) const {
    Matrix a = assemble_input(x);
    for (int l = 0; l < layer_count(); ++l) {
        const auto wi = weight_index(l);
        Matrix z = a * params_[wi].transpose();
        z.rowwise() += params_[wi + 1].col(0).transpose();
        if (l + 1 < layer_count()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

Matrix DenseNet::forward(const InputBatch& x) {
    Tape tape;
    tape.categorical = x.categorical;
    Matrix a = assemble_input(x);
    for (int l = 0; l < layer_count(); ++l) {
        const auto wi = weight_index(l);
        Matrix z = a * params_[wi].transpose();
        z.rowwise() += params_[wi + 1].col(0).transpose();
        tape.inputs.push_back(std::move(a));
        a = (l + 1 < layer_count()) ? Matrix(z.cwiseMax(0.0)) : z;
        tape.pre.push_back(std::move(z));
    }
    tape_ = std::move(tape);
    return a;
}

Vector DenseNet::forward(const FeatureVector& x) {
    return forward(InputBatch::from_features({&x, 1})).row(0).transpose();
}

Gradients DenseNet::zero_gradients() const {
    Gradients g;
    for (const auto& p : params_) g.tensors.push_back(Matrix::Zero(p.rows(), p.cols()));
    return g;
}

Gradients DenseNet::backward(const Matrix& upstream) const {
    if (!tape_) {
        throw std::logic_error("DenseNet::backward called without a recorded forward pass");
    }
    const auto& tape = *tape_;
    const auto batch = tape.inputs.front().rows();
    if (upstream.rows() != batch || upstream.cols() != spec_.outputs) {
        throw std::invalid_argument("DenseNet::backward: upstream gradient shape mismatch");
    }
    Gradients g = zero_gradients();
    Matrix delta = upstream;
    for (int l = layer_count() - 1; l >= 0; --l) {
        const auto wi = weight_index(l);
        const auto& in = tape.inputs[static_cast<std::size_t>(l)];
        g.tensors[wi].noalias() = delta.transpose() * in;
        g.tensors[wi + 1] = delta.colwise().sum().transpose();
        Matrix prev = delta * params_[wi];
        if (l > 0) {
            prev.array() *= (tape.pre[static_cast<std::size_t>(l - 1)].array() > 0.0).cast<double>();
        }
        delta = std::move(prev);
    }
    Eigen::Index col = spec_.numeric_dim;
    for (std::size_t f = 0; f < spec_.embeddings.size(); ++f) {
        const auto dim = spec_.embeddings[f].dim;
        auto& table_grad = g.tensors[f];
        for (Eigen::Index i = 0; i < batch; ++i) {
            table_grad.row(tape.categorical(i, static_cast<Eigen::Index>(f))) += delta.block(i, col, 1, dim);
        }
        col += dim;
    }
    return g;
}

double DenseNet::squared_norm() const {
    double s = 0.0;
    for (const auto& p : params_) s += p.squaredNorm();
    return s;
}

std::uint64_t DenseNet::checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& p : params_) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p.data());
        for (std::size_t i = 0; i < static_cast<std::size_t>(p.size()) * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

void DenseNet::check_finite() const {
    for (const auto& p : params_) {
        if (!p.allFinite()) throw std::runtime_error("DenseNet: non-finite parameter");
    }
}

Gradients l2_gradients(const DenseNet& net, double l2) {
    Gradients g;
    for (const auto& p : net.parameters()) g.tensors.push_back(2.0 * l2 * p);
    return g;
}

OptimizerState OptimizerState::for_net(const DenseNet& net, AdamConfig config) {
    OptimizerState s;
    s.config = config;
    for (const auto& p : net.parameters()) {
        s.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
        s.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
    return s;
}

void adam_step(DenseNet& net, const Gradients& grads, OptimizerState& opt) {
    auto& params = net.parameters();
    if (!grads.same_shape(params) || opt.first_moment.size() != params.size() ||
        opt.second_moment.size() != params.size()) {
        throw std::invalid_argument("adam_step: gradient or moment shapes do not match parameters");
    }
    const auto& c = opt.config;
    opt.step += 1;
    const double t = static_cast<double>(opt.step);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (opt.first_moment[i].rows() != params[i].rows() || opt.first_moment[i].cols() != params[i].cols()) {
            throw std::invalid_argument("adam_step: moment shape mismatch");
        }
        const Matrix g = grads.tensors[i] + 2.0 * c.l2 * params[i];
        opt.first_moment[i] = c.beta1 * opt.first_moment[i] + (1.0 - c.beta1) * g;
        opt.second_moment[i] = c.beta2 * opt.second_moment[i] + (1.0 - c.beta2) * g.cwiseAbs2();
        params[i].array() -= c.learning_rate * (opt.first_moment[i].array() / correction1) /
                             ((opt.second_moment[i].array() / correction2).sqrt() + c.epsilon);
    }
    net.check_finite();
}

}  // namespace trace
