#pragma once

// Token encoders producing one embedding row per input token. The trainable
// encoder is a small pre-LN transformer with hand-written backprop; the stub
// encoder emits fixed per-id rows for tests. Forward is const and takes a
// caller-owned cache, so a trained encoder is safe for concurrent inference.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "marking/error.hpp"
#include "marking/tensor.hpp"

namespace marking {

class Encoder {
public:
    struct Cache {
        virtual ~Cache() = default;
    };

    virtual ~Encoder() = default;
    virtual int dim() const = 0;
    virtual std::size_t max_len() const = 0;
    virtual std::string name() const = 0;
    virtual int vocab_size() const = 0;

    // One row per token. Pass a cache to enable a subsequent backward().
    virtual Matrix forward(const std::vector<int>& token_ids,
                           std::unique_ptr<Cache>* cache = nullptr) const = 0;
    virtual void backward(const Cache& cache, const Matrix& d_out) = 0;

    virtual ParamStore* params() { return nullptr; }
};

namespace nn {

inline float gelu(float x) {
    constexpr float c = 0.7978845608f;  // sqrt(2/pi)
    return 0.5f * x * (1.0f + std::tanh(c * (x + 0.044715f * x * x * x)));
}

inline float gelu_grad(float x) {
    constexpr float c = 0.7978845608f;
    float u = c * (x + 0.044715f * x * x * x);
    float t = std::tanh(u);
    return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * c * (1.0f + 3.0f * 0.044715f * x * x);
}

struct LnCache {
    Matrix xhat;
    Eigen::VectorXf invstd;
};

inline Matrix ln_forward(const Matrix& x, const Tensor& gamma, const Tensor& beta, LnCache& cache) {
    const auto D = x.cols();
    cache.xhat.resize(x.rows(), D);
    cache.invstd.resize(x.rows());
    Matrix y(x.rows(), D);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        float mu = x.row(r).mean();
        float var = (x.row(r).array() - mu).square().mean();
        float invstd = 1.0f / std::sqrt(var + 1e-5f);
        cache.invstd(r) = invstd;
        cache.xhat.row(r) = (x.row(r).array() - mu) * invstd;
        y.row(r) = cache.xhat.row(r).array() * gamma.value.row(0).array() + beta.value.row(0).array();
    }
    return y;
}

inline Matrix ln_backward(const Matrix& dy, const LnCache& cache, Tensor& gamma, Tensor& beta) {
    const auto D = dy.cols();
    gamma.grad.row(0).array() += (dy.array() * cache.xhat.array()).colwise().sum();
    beta.grad.row(0).array() += dy.array().colwise().sum();
    using RowArray = Eigen::Array<float, 1, Eigen::Dynamic>;
    Matrix dx(dy.rows(), D);
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        RowArray dxhat = dy.row(r).array() * gamma.value.row(0).array();
        RowArray xhat = cache.xhat.row(r).array();
        float m1 = dxhat.mean();
        float m2 = (dxhat * xhat).mean();
        dx.row(r) = ((dxhat - m1 - xhat * m2) * cache.invstd(r)).matrix();
    }
    return dx;
}

inline Matrix softmax_rows(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        Eigen::ArrayXf row = x.row(r).array();
        row -= row.maxCoeff();
        row = row.exp();
        y.row(r) = (row / row.sum()).matrix();
    }
    return y;
}

}  // namespace nn

struct TransformerConfig {
    int vocab = 8192;
    int dim = 64;
    int heads = 2;
    int layers = 2;
    int ffn = 128;
    std::size_t max_len = 512;
};

class TinyTransformerEncoder : public Encoder {
public:
    TinyTransformerEncoder(std::string name, TransformerConfig cfg, std::uint64_t seed)
        : name_(std::move(name)), cfg_(cfg) {
        if (cfg_.dim % cfg_.heads != 0)
            throw Error(Errc::unknown_encoder, "encoder dim must be divisible by head count");
        Gaussian rng(seed);
        const float std = 0.02f;
        params_.add("tok_emb", cfg_.vocab, cfg_.dim, std, rng);
        params_.add("pos_emb", Eigen::Index(cfg_.max_len), cfg_.dim, std, rng);
        for (int l = 0; l < cfg_.layers; ++l) {
            std::string p = "layer" + std::to_string(l) + ".";
            add_ln(p + "ln1", rng);
            for (const char* w : {"wq", "wk", "wv", "wo"})
                params_.add(p + w, cfg_.dim, cfg_.dim, std, rng);
            for (const char* b : {"bq", "bk", "bv", "bo"})
                params_.add(p + b, 1, cfg_.dim, 0.0f, rng, /*decay=*/false);
            add_ln(p + "ln2", rng);
            params_.add(p + "w1", cfg_.dim, cfg_.ffn, std, rng);
            params_.add(p + "b1", 1, cfg_.ffn, 0.0f, rng, false);
            params_.add(p + "w2", cfg_.ffn, cfg_.dim, std, rng);
            params_.add(p + "b2", 1, cfg_.dim, 0.0f, rng, false);
        }
        add_ln("ln_f", rng);
    }

    int dim() const override { return cfg_.dim; }
    std::size_t max_len() const override { return cfg_.max_len; }
    std::string name() const override { return name_; }
    int vocab_size() const override { return cfg_.vocab; }
    ParamStore* params() override { return &params_; }
    const TransformerConfig& config() const { return cfg_; }

    struct LayerCache {
        Matrix x_in, n1, q, k, v, attn_concat, x_mid, n2, h1, g;
        nn::LnCache ln1, ln2;
        std::vector<Matrix> attn;  // per-head softmaxed scores, T x T
    };
    struct TCache : Cache {
        std::vector<int> ids;
        Matrix x0;
        std::vector<LayerCache> layers;
        Matrix x_last;
        nn::LnCache ln_f;
    };

    Matrix forward(const std::vector<int>& token_ids, std::unique_ptr<Cache>* cache) const override {
        if (token_ids.size() > cfg_.max_len)
            throw Error(Errc::too_long, "sequence exceeds encoder max length");
        auto local = std::make_unique<TCache>();
        TCache& c = *local;
        c.ids = token_ids;
        const auto T = Eigen::Index(token_ids.size());

        const Matrix& tok = tensor("tok_emb").value;
        const Matrix& pos = tensor("pos_emb").value;
        c.x0.resize(T, cfg_.dim);
        for (Eigen::Index t = 0; t < T; ++t) {
            int id = token_ids[std::size_t(t)];
            if (id < 0 || id >= cfg_.vocab)
                throw Error(Errc::unknown_encoder, "token id " + std::to_string(id) + " out of vocab");
            c.x0.row(t) = tok.row(id) + pos.row(t);
        }

        Matrix x = c.x0;
        c.layers.resize(std::size_t(cfg_.layers));
        const int dh = cfg_.dim / cfg_.heads;
        const float scale = 1.0f / std::sqrt(float(dh));
        for (int l = 0; l < cfg_.layers; ++l) {
            LayerCache& lc = c.layers[std::size_t(l)];
            std::string p = "layer" + std::to_string(l) + ".";
            lc.x_in = x;
            lc.n1 = nn::ln_forward(x, tensor(p + "ln1.g"), tensor(p + "ln1.b"), lc.ln1);
            lc.q = lin(lc.n1, p + "wq", p + "bq");
            lc.k = lin(lc.n1, p + "wk", p + "bk");
            lc.v = lin(lc.n1, p + "wv", p + "bv");
            lc.attn_concat.resize(T, cfg_.dim);
            lc.attn.resize(std::size_t(cfg_.heads));
            for (int h = 0; h < cfg_.heads; ++h) {
                auto qh = lc.q.middleCols(h * dh, dh);
                auto kh = lc.k.middleCols(h * dh, dh);
                auto vh = lc.v.middleCols(h * dh, dh);
                Matrix scores = (qh * kh.transpose()) * scale;
                lc.attn[std::size_t(h)] = nn::softmax_rows(scores);
                lc.attn_concat.middleCols(h * dh, dh) = lc.attn[std::size_t(h)] * vh;
            }
            lc.x_mid = lc.x_in + lin(lc.attn_concat, p + "wo", p + "bo");
            lc.n2 = nn::ln_forward(lc.x_mid, tensor(p + "ln2.g"), tensor(p + "ln2.b"), lc.ln2);
            lc.h1 = lin(lc.n2, p + "w1", p + "b1");
            lc.g = lc.h1.unaryExpr([](float v) { return nn::gelu(v); });
            x = lc.x_mid + lin(lc.g, p + "w2", p + "b2");
        }
        c.x_last = x;
        Matrix y = nn::ln_forward(x, tensor("ln_f.g"), tensor("ln_f.b"), c.ln_f);
        if (cache) *cache = std::move(local);
        return y;
    }

    void backward(const Cache& cache, const Matrix& d_out) override {
        const auto& c = dynamic_cast<const TCache&>(cache);
        const int dh = cfg_.dim / cfg_.heads;
        const float scale = 1.0f / std::sqrt(float(dh));

        Matrix dx = nn::ln_backward(d_out, c.ln_f, params_.at("ln_f.g"), params_.at("ln_f.b"));
        for (int l = cfg_.layers - 1; l >= 0; --l) {
            const LayerCache& lc = c.layers[std::size_t(l)];
            std::string p = "layer" + std::to_string(l) + ".";

            // FFN block
            Matrix dg = lin_backward(dx, lc.g, p + "w2", p + "b2");
            Matrix dh1 =
                (dg.array() * lc.h1.unaryExpr([](float v) { return nn::gelu_grad(v); }).array()).matrix();
            Matrix dn2 = lin_backward(dh1, lc.n2, p + "w1", p + "b1");
            Matrix dx_mid = dx + nn::ln_backward(dn2, lc.ln2, params_.at(p + "ln2.g"),
                                                 params_.at(p + "ln2.b"));

            // attention block
            Matrix do_concat = lin_backward(dx_mid, lc.attn_concat, p + "wo", p + "bo");
            Matrix dq = Matrix::Zero(dx.rows(), cfg_.dim);
            Matrix dk = Matrix::Zero(dx.rows(), cfg_.dim);
            Matrix dv = Matrix::Zero(dx.rows(), cfg_.dim);
            for (int h = 0; h < cfg_.heads; ++h) {
                auto kh = lc.k.middleCols(h * dh, dh);
                auto qh = lc.q.middleCols(h * dh, dh);
                auto vh = lc.v.middleCols(h * dh, dh);
                const Matrix& a = lc.attn[std::size_t(h)];
                Matrix doh = do_concat.middleCols(h * dh, dh);
                Matrix da = doh * vh.transpose();
                dv.middleCols(h * dh, dh) = a.transpose() * doh;
                // softmax rows backward
                Matrix ds(a.rows(), a.cols());
                for (Eigen::Index r = 0; r < a.rows(); ++r) {
                    float dot = a.row(r).dot(da.row(r));
                    ds.row(r) = a.row(r).array() * (da.row(r).array() - dot);
                }
                ds *= scale;
                dq.middleCols(h * dh, dh) = ds * kh;
                dk.middleCols(h * dh, dh) = ds.transpose() * qh;
            }
            Matrix dn1 = lin_backward(dq, lc.n1, p + "wq", p + "bq");
            dn1 += lin_backward(dk, lc.n1, p + "wk", p + "bk");
            dn1 += lin_backward(dv, lc.n1, p + "wv", p + "bv");
            dx = dx_mid + nn::ln_backward(dn1, lc.ln1, params_.at(p + "ln1.g"),
                                          params_.at(p + "ln1.b"));
        }

        Tensor& tok = params_.at("tok_emb");
        Tensor& pos = params_.at("pos_emb");
        for (Eigen::Index t = 0; t < dx.rows(); ++t) {
            tok.grad.row(c.ids[std::size_t(t)]) += dx.row(t);
            pos.grad.row(t) += dx.row(t);
        }
    }

private:
    void add_ln(const std::string& prefix, Gaussian& rng) {
        Tensor& g = params_.add(prefix + ".g", 1, cfg_.dim, 0.0f, rng, /*decay=*/false);
        g.value.setOnes();
        params_.add(prefix + ".b", 1, cfg_.dim, 0.0f, rng, /*decay=*/false);
    }

    const Tensor& tensor(const std::string& name) const {
        return const_cast<ParamStore&>(params_).at(name);
    }

    Matrix lin(const Matrix& x, const std::string& w, const std::string& b) const {
        return (x * tensor(w).value).rowwise() + tensor(b).value.row(0);
    }

    // dX for y = x*W + b; accumulates dW and db.
    Matrix lin_backward(const Matrix& dy, const Matrix& x, const std::string& w, const std::string& b) {
        params_.at(w).grad += x.transpose() * dy;
        params_.at(b).grad.row(0).array() += dy.array().colwise().sum();
        return dy * params_.at(w).value.transpose();
    }

    std::string name_;
    TransformerConfig cfg_;
    ParamStore params_;
};

// Fixed per-id embeddings, reproducible from the seed; not trainable.
class StubEncoder : public Encoder {
public:
    explicit StubEncoder(int dim = 8, int vocab = 8192, std::uint64_t seed = 7)
        : dim_(dim), vocab_(vocab), seed_(seed) {}

    int dim() const override { return dim_; }
    std::size_t max_len() const override { return 512; }
    std::string name() const override { return "stub"; }
    int vocab_size() const override { return vocab_; }

    Eigen::RowVectorXf embedding_row(int id) const {
        Gaussian rng(seed_ * 1000003ull + std::uint64_t(id));
        Eigen::RowVectorXf row(dim_);
        for (int j = 0; j < dim_; ++j) row(j) = rng();
        return row;
    }

    Matrix forward(const std::vector<int>& token_ids, std::unique_ptr<Cache>* cache) const override {
        if (cache) *cache = std::make_unique<Cache>();
        Matrix out(Eigen::Index(token_ids.size()), dim_);
        for (std::size_t t = 0; t < token_ids.size(); ++t)
            out.row(Eigen::Index(t)) = embedding_row(token_ids[t]);
        return out;
    }

    void backward(const Cache&, const Matrix&) override {}

private:
    int dim_;
    int vocab_;
    std::uint64_t seed_;
};

// Encoder registry. The bert-*/roberta-* entries provide the published
// embedding widths; their weights start from random initialization unless a
// checkpoint is loaded on top.
inline std::shared_ptr<Encoder> make_encoder(const std::string& name, std::uint64_t seed) {
    TransformerConfig cfg;
    if (name == "tiny") {
        cfg = {8192, 64, 2, 2, 128, 512};
    } else if (name == "tiny-3l") {
        cfg = {8192, 64, 2, 3, 128, 512};
    } else if (name == "bert-base" || name == "roberta-base") {
        cfg = {16384, 768, 4, 2, 1024, 512};
    } else if (name == "bert-large" || name == "roberta-large") {
        cfg = {16384, 1024, 4, 2, 1024, 512};
    } else if (name == "stub") {
        return std::make_shared<StubEncoder>();
    } else {
        throw Error(Errc::unknown_encoder, "unknown encoder '" + name + "'");
    }
    return std::make_shared<TinyTransformerEncoder>(name, cfg, seed);
}

}  // namespace marking
