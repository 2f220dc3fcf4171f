// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace spbench::deepse {

/// Dimensions of the network. The same embedding + LSTM prefix is shared by
/// the regression network and the pre-training language model.
struct Shape {
    Eigen::Index vocab = 0;
    Eigen::Index embed = 0;
    Eigen::Index hidden = 0;
    Eigen::Index layers = 0;
    Eigen::Index steps = 0;
};

/// A (rows x cols) block of a flat parameter vector.
struct Block {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 1;

    Eigen::Index size() const noexcept { return rows * cols; }
    Eigen::Index end() const noexcept { return offset + size(); }
};

/// Offsets of every tensor. Embedding and LSTM come first so a pre-trained
/// encoder is a prefix of the parameter vector.
struct Layout {
    Block embedding;   // embed x vocab, one column per token
    Block lstm_input;  // 4h x embed, gate order i, f, o, g
    Block lstm_recurrent;  // 4h x h
    Block lstm_bias;       // 4h
    std::vector<Block> highway_weight;  // h x h per layer
    std::vector<Block> highway_bias;
    std::vector<Block> gate_weight;  // transform gate
    std::vector<Block> gate_bias;
    Block out_weight;  // h (regression) or vocab x h (language model)
    Block out_bias;    // 1 or vocab
    Eigen::Index total = 0;

    Eigen::Index encoder_size() const noexcept { return lstm_bias.end(); }

    static Layout regression(const Shape& s) {
        Layout l;
        Eigen::Index at = 0;
        auto take = [&](Eigen::Index rows, Eigen::Index cols) {
            Block b{at, rows, cols};
            at += rows * cols;
            return b;
        };
        l.embedding = take(s.embed, s.vocab);
        l.lstm_input = take(4 * s.hidden, s.embed);
        l.lstm_recurrent = take(4 * s.hidden, s.hidden);
        l.lstm_bias = take(4 * s.hidden, 1);
        for (Eigen::Index k = 0; k < s.layers; ++k) {
            l.highway_weight.push_back(take(s.hidden, s.hidden));
            l.highway_bias.push_back(take(s.hidden, 1));
            l.gate_weight.push_back(take(s.hidden, s.hidden));
            l.gate_bias.push_back(take(s.hidden, 1));
        }
        l.out_weight = take(s.hidden, 1);
        l.out_bias = take(1, 1);
        l.total = at;
        return l;
    }

    static Layout language_model(const Shape& s) {
        Layout l;
        Eigen::Index at = 0;
        auto take = [&](Eigen::Index rows, Eigen::Index cols) {
            Block b{at, rows, cols};
            at += rows * cols;
            return b;
        };
        l.embedding = take(s.embed, s.vocab);
        l.lstm_input = take(4 * s.hidden, s.embed);
        l.lstm_recurrent = take(4 * s.hidden, s.hidden);
        l.lstm_bias = take(4 * s.hidden, 1);
        l.out_weight = take(s.vocab, s.hidden);
        l.out_bias = take(s.vocab, 1);
        l.total = at;
        return l;
    }
};

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Eigen::Map<MatrixT<Scalar>> view(VectorT<Scalar>& flat, const Block& b) {
    return {flat.data() + b.offset, b.rows, b.cols};
}

template <typename Scalar>
Eigen::Map<const MatrixT<Scalar>> view(const VectorT<Scalar>& flat, const Block& b) {
    return {flat.data() + b.offset, b.rows, b.cols};
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    return x.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
}

/// Number of tokens before the first padding index (0).
inline Eigen::Index document_length(std::span<const int> tokens) {
    Eigen::Index n = 0;
    while (n < static_cast<Eigen::Index>(tokens.size()) && tokens[static_cast<std::size_t>(n)] != 0) ++n;
    return n;
}

/// Activations of one LSTM pass, one column per time step.
template <typename Scalar>
struct LstmCache {
    std::vector<int> tokens;
    MatrixT<Scalar> x;      // embed x T
    MatrixT<Scalar> gates;  // 4h x T, post-activation
    MatrixT<Scalar> cell;   // h x T
    MatrixT<Scalar> cell_tanh;
    MatrixT<Scalar> hidden;  // h x T
};

template <typename Scalar>
void lstm_forward(const VectorT<Scalar>& params, const Layout& layout, std::span<const int> tokens,
                  LstmCache<Scalar>& cache) {
    const auto E = view(params, layout.embedding);
    const auto W = view(params, layout.lstm_input);
    const auto U = view(params, layout.lstm_recurrent);
    const auto b = view(params, layout.lstm_bias);
    const Eigen::Index h = U.cols();
    const Eigen::Index T = document_length(tokens);

    cache.tokens.assign(tokens.begin(), tokens.begin() + T);
    cache.x.resize(E.rows(), T);
    for (Eigen::Index t = 0; t < T; ++t) cache.x.col(t) = E.col(cache.tokens[static_cast<std::size_t>(t)]);
    cache.gates.noalias() = W * cache.x;
    cache.gates.colwise() += b.col(0);
    cache.cell.resize(h, T);
    cache.cell_tanh.resize(h, T);
    cache.hidden.resize(h, T);

    VectorT<Scalar> h_prev = VectorT<Scalar>::Zero(h);
    VectorT<Scalar> c_prev = VectorT<Scalar>::Zero(h);
    for (Eigen::Index t = 0; t < T; ++t) {
        auto z = cache.gates.col(t);
        z.noalias() += U * h_prev;
        z.head(3 * h) = sigmoid(z.head(3 * h));
        z.tail(h) = z.tail(h).array().tanh().matrix();
        cache.cell.col(t) = z.segment(h, h).cwiseProduct(c_prev) + z.head(h).cwiseProduct(z.tail(h));
        cache.cell_tanh.col(t) = cache.cell.col(t).array().tanh().matrix();
        cache.hidden.col(t) = z.segment(2 * h, h).cwiseProduct(cache.cell_tanh.col(t));
        h_prev = cache.hidden.col(t);
        c_prev = cache.cell.col(t);
    }
}

/// Backpropagation through time. `d_hidden` holds dLoss/dh_t from outside the
/// recurrence (one column per step); gradients accumulate into `grad`.
template <typename Scalar>
void lstm_backward(const VectorT<Scalar>& params, const Layout& layout, const LstmCache<Scalar>& cache,
                   const MatrixT<Scalar>& d_hidden, VectorT<Scalar>& grad) {
    const auto W = view(params, layout.lstm_input);
    const auto U = view(params, layout.lstm_recurrent);
    const Eigen::Index h = U.cols();
    const Eigen::Index T = cache.hidden.cols();
    if (T == 0) return;

    MatrixT<Scalar> dz(4 * h, T);
    VectorT<Scalar> dh_next = VectorT<Scalar>::Zero(h);
    VectorT<Scalar> dc_next = VectorT<Scalar>::Zero(h);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        const auto z = cache.gates.col(t);
        const auto i = z.head(h);
        const auto f = z.segment(h, h);
        const auto o = z.segment(2 * h, h);
        const auto g = z.tail(h);
        const VectorT<Scalar> dh = d_hidden.col(t) + dh_next;
        const auto tc = cache.cell_tanh.col(t);
        const VectorT<Scalar> dc =
            dh.cwiseProduct(o).cwiseProduct((Scalar(1) - tc.array().square()).matrix()) + dc_next;
        const VectorT<Scalar> c_prev = t > 0 ? VectorT<Scalar>(cache.cell.col(t - 1)) : VectorT<Scalar>::Zero(h);

        auto col = dz.col(t);
        col.head(h) = dc.cwiseProduct(g).cwiseProduct((i.array() * (Scalar(1) - i.array())).matrix());
        col.segment(h, h) = dc.cwiseProduct(c_prev).cwiseProduct((f.array() * (Scalar(1) - f.array())).matrix());
        col.segment(2 * h, h) = dh.cwiseProduct(tc).cwiseProduct((o.array() * (Scalar(1) - o.array())).matrix());
        col.tail(h) = dc.cwiseProduct(i).cwiseProduct((Scalar(1) - g.array().square()).matrix());

        dc_next = dc.cwiseProduct(f);
        dh_next.noalias() = U.transpose() * col;
    }

    auto dW = view(grad, layout.lstm_input);
    auto dU = view(grad, layout.lstm_recurrent);
    auto db = view(grad, layout.lstm_bias);
    auto dE = view(grad, layout.embedding);
    dW.noalias() += dz * cache.x.transpose();
    if (T > 1) dU.noalias() += dz.rightCols(T - 1) * cache.hidden.leftCols(T - 1).transpose();
    db.col(0) += dz.rowwise().sum();
    const MatrixT<Scalar> dx = W.transpose() * dz;
    for (Eigen::Index t = 0; t < T; ++t) dE.col(cache.tokens[static_cast<std::size_t>(t)]) += dx.col(t);
}

/// Forward state of the regression head for one document.
template <typename Scalar>
struct RegressionCache {
    LstmCache<Scalar> lstm;
    VectorT<Scalar> document;                 // mean-pooled hidden state
    std::vector<VectorT<Scalar>> state;        // highway input of every application, plus the final state
    std::vector<VectorT<Scalar>> candidate;    // tanh(W s + b)
    std::vector<VectorT<Scalar>> gate;         // sigmoid(Wt s + bt)
    Scalar output = 0;
};

/// Embedding -> LSTM -> mean pooling -> recurrent highway layers -> linear output.
/// Each highway layer is applied `steps` times with shared weights:
///   s <- t * tanh(W s + b) + (1 - t) * s,   t = sigmoid(Wt s + bt)
template <typename Scalar>
class RegressionNetwork {
public:
    using Vector = VectorT<Scalar>;
    using Matrix = MatrixT<Scalar>;

    explicit RegressionNetwork(const Shape& shape) : shape_(shape), layout_(Layout::regression(shape)) {}

    const Shape& shape() const noexcept { return shape_; }
    const Layout& layout() const noexcept { return layout_; }
    Eigen::Index parameter_count() const noexcept { return layout_.total; }

    Vector document_vector(const Vector& params, std::span<const int> tokens) const {
        RegressionCache<Scalar> cache;
        encode(params, tokens, cache);
        return cache.document;
    }

    /// Applies the highway stack to a document vector.
    Vector highway(const Vector& params, const Vector& document) const {
        RegressionCache<Scalar> cache;
        cache.document = document;
        run_highway(params, cache);
        return cache.state.back();
    }

    Scalar forward(const Vector& params, std::span<const int> tokens, RegressionCache<Scalar>& cache) const {
        encode(params, tokens, cache);
        run_highway(params, cache);
        const auto w = view(params, layout_.out_weight);
        const auto b = view(params, layout_.out_bias);
        cache.output = w.col(0).dot(cache.state.back()) + b(0, 0);
        return cache.output;
    }

    Scalar predict(const Vector& params, std::span<const int> tokens) const {
        RegressionCache<Scalar> cache;
        return forward(params, tokens, cache);
    }

    /// Accumulates d(scale * output)/d(params) into `grad`.
    void backward(const Vector& params, const RegressionCache<Scalar>& cache, Scalar scale, Vector& grad) const {
        const auto w = view(params, layout_.out_weight);
        view(grad, layout_.out_weight).col(0) += scale * cache.state.back();
        view(grad, layout_.out_bias)(0, 0) += scale;

        Vector ds = scale * w.col(0);
        std::size_t app = cache.candidate.size();
        for (Eigen::Index layer = shape_.layers - 1; layer >= 0; --layer) {
            const auto Wh = view(params, layout_.highway_weight[static_cast<std::size_t>(layer)]);
            const auto Wt = view(params, layout_.gate_weight[static_cast<std::size_t>(layer)]);
            auto dWh = view(grad, layout_.highway_weight[static_cast<std::size_t>(layer)]);
            auto dbh = view(grad, layout_.highway_bias[static_cast<std::size_t>(layer)]);
            auto dWt = view(grad, layout_.gate_weight[static_cast<std::size_t>(layer)]);
            auto dbt = view(grad, layout_.gate_bias[static_cast<std::size_t>(layer)]);
            for (Eigen::Index step = 0; step < shape_.steps; ++step) {
                --app;
                const Vector& s = cache.state[app];
                const Vector& hc = cache.candidate[app];
                const Vector& tg = cache.gate[app];
                const Vector da = ds.cwiseProduct(tg).cwiseProduct((Scalar(1) - hc.array().square()).matrix());
                const Vector dgate = ds.cwiseProduct(hc - s).cwiseProduct((tg.array() * (Scalar(1) - tg.array())).matrix());
                dWh.noalias() += da * s.transpose();
                dbh.col(0) += da;
                dWt.noalias() += dgate * s.transpose();
                dbt.col(0) += dgate;
                Vector ds_prev = ds.cwiseProduct((Scalar(1) - tg.array()).matrix());
                ds_prev.noalias() += Wh.transpose() * da;
                ds_prev.noalias() += Wt.transpose() * dgate;
                ds = std::move(ds_prev);
            }
        }

        const Eigen::Index T = cache.lstm.hidden.cols();
        if (T == 0) return;
        Matrix d_hidden = (ds / static_cast<Scalar>(T)).replicate(1, T);
        lstm_backward(params, layout_, cache.lstm, d_hidden, grad);
    }

private:
    void encode(const Vector& params, std::span<const int> tokens, RegressionCache<Scalar>& cache) const {
        lstm_forward(params, layout_, tokens, cache.lstm);
        const Eigen::Index T = cache.lstm.hidden.cols();
        cache.document = T > 0 ? Vector(cache.lstm.hidden.rowwise().mean()) : Vector::Zero(shape_.hidden);
    }

    void run_highway(const Vector& params, RegressionCache<Scalar>& cache) const {
        const auto apps = static_cast<std::size_t>(shape_.layers * shape_.steps);
        cache.state.resize(apps + 1);
        cache.candidate.resize(apps);
        cache.gate.resize(apps);
        cache.state[0] = cache.document;
        std::size_t app = 0;
        for (Eigen::Index layer = 0; layer < shape_.layers; ++layer) {
            const auto Wh = view(params, layout_.highway_weight[static_cast<std::size_t>(layer)]);
            const auto bh = view(params, layout_.highway_bias[static_cast<std::size_t>(layer)]);
            const auto Wt = view(params, layout_.gate_weight[static_cast<std::size_t>(layer)]);
            const auto bt = view(params, layout_.gate_bias[static_cast<std::size_t>(layer)]);
            for (Eigen::Index step = 0; step < shape_.steps; ++step, ++app) {
                const Vector& s = cache.state[app];
                cache.candidate[app] = (Wh * s + bh.col(0)).array().tanh().matrix();
                cache.gate[app] = sigmoid(Wt * s + bt.col(0));
                cache.state[app + 1] = cache.gate[app].cwiseProduct(cache.candidate[app]) +
                                       (Scalar(1) - cache.gate[app].array()).matrix().cwiseProduct(s);
            }
        }
    }

    Shape shape_;
    Layout layout_;
};

/// Next-token language model over the shared embedding + LSTM encoder.
template <typename Scalar>
class LanguageModelNetwork {
public:
    using Vector = VectorT<Scalar>;
    using Matrix = MatrixT<Scalar>;

    explicit LanguageModelNetwork(const Shape& shape) : shape_(shape), layout_(Layout::language_model(shape)) {}

    const Layout& layout() const noexcept { return layout_; }

    /// Summed cross-entropy over the T-1 next-token predictions of a document,
    /// scaled by `scale` when accumulating gradients (grad may be null).
    /// `correct` receives the number of argmax hits.
    Scalar loss(const Vector& params, std::span<const int> tokens, Scalar scale, Vector* grad,
                Eigen::Index* correct = nullptr) const {
        LstmCache<Scalar> cache;
        lstm_forward(params, layout_, tokens, cache);
        const Eigen::Index T = cache.hidden.cols();
        if (correct) *correct = 0;
        if (T < 2) return Scalar(0);
        const auto V = view(params, layout_.out_weight);
        const auto c = view(params, layout_.out_bias);
        Matrix logits = V * cache.hidden.leftCols(T - 1);
        logits.colwise() += c.col(0);
        Scalar total = 0;
        Matrix dlogits(logits.rows(), T - 1);
        for (Eigen::Index t = 0; t + 1 < T; ++t) {
            auto col = logits.col(t);
            const Scalar max = col.maxCoeff();
            Vector p = (col.array() - max).exp().matrix();
            const Scalar z = p.sum();
            p /= z;
            const int target = cache.tokens[static_cast<std::size_t>(t + 1)];
            total -= std::log(std::max(p(target), Scalar(1e-300)));
            if (correct) {
                Eigen::Index arg = 0;
                col.maxCoeff(&arg);
                if (arg == target) ++*correct;
            }
            p(target) -= Scalar(1);
            dlogits.col(t) = scale * p;
        }
        if (grad) {
            view(*grad, layout_.out_weight).noalias() += dlogits * cache.hidden.leftCols(T - 1).transpose();
            view(*grad, layout_.out_bias).col(0) += dlogits.rowwise().sum();
            Matrix d_hidden = Matrix::Zero(shape_.hidden, T);
            d_hidden.leftCols(T - 1).noalias() = V.transpose() * dlogits;
            lstm_backward(params, layout_, cache, d_hidden, *grad);
        }
        return total;
    }

private:
    Shape shape_;
    Layout layout_;
};

}  // namespace spbench::deepse
