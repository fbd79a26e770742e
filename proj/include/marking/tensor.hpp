#pragma once

// Named parameter tensors with gradients and an Adam optimizer with
// decoupled weight decay and linear warmup/decay scheduling.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "marking/error.hpp"

namespace marking {

using Matrix = Eigen::MatrixXf;

// Deterministic gaussian (Box-Muller on raw mt19937_64 draws) so that
// initialization does not depend on the stdlib's distribution internals.
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

    float operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = float(r * std::sin(2.0 * M_PI * u2));
        have_spare_ = true;
        return float(r * std::cos(2.0 * M_PI * u2));
    }

    std::uint64_t raw() { return rng_(); }

private:
    double uniform() {
        // (0, 1], never 0 so log() stays finite
        return (double(rng_() >> 11) + 1.0) / 9007199254740993.0;
    }
    std::mt19937_64 rng_;
    float spare_ = 0.0f;
    bool have_spare_ = false;
};

struct Tensor {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix adam_m;
    Matrix adam_v;
    bool decay = true;  // participates in weight decay
};

class ParamStore {
public:
    Tensor& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, float init_std,
                Gaussian& rng, bool decay = true) {
        Tensor t;
        t.name = name;
        t.value = Matrix(rows, cols);
        if (init_std == 0.0f) {
            t.value.setZero();
        } else {
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j) t.value(i, j) = rng() * init_std;
        }
        t.grad = Matrix::Zero(rows, cols);
        t.adam_m = Matrix::Zero(rows, cols);
        t.adam_v = Matrix::Zero(rows, cols);
        t.decay = decay;
        index_[name] = tensors_.size();
        tensors_.push_back(std::move(t));
        return tensors_.back();
    }

    Tensor& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw Error(Errc::checkpoint_mismatch, "no tensor named '" + name + "'");
        return tensors_[it->second];
    }

    std::vector<Tensor>& tensors() { return tensors_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }

    void zero_grad() {
        for (auto& t : tensors_) t.grad.setZero();
    }

private:
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float weight_decay = 0.1f;
};

class AdamOptimizer {
public:
    explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamStore& params, float lr) { step({&params}, lr); }

    void step(std::initializer_list<ParamStore*> stores, float lr) {
        ++t_;
        for (ParamStore* s : stores)
            if (s) update_store(*s, lr);
    }

    std::int64_t steps_taken() const { return t_; }

private:
    void update_store(ParamStore& params, float lr) {
        float bc1 = 1.0f - std::pow(cfg_.beta1, float(t_));
        float bc2 = 1.0f - std::pow(cfg_.beta2, float(t_));
        for (auto& p : params.tensors()) {
            p.adam_m = cfg_.beta1 * p.adam_m + (1.0f - cfg_.beta1) * p.grad;
            p.adam_v = cfg_.beta2 * p.adam_v.array().matrix() +
                       (1.0f - cfg_.beta2) * p.grad.array().square().matrix();
            Matrix m_hat = p.adam_m / bc1;
            Matrix v_hat = p.adam_v / bc2;
            p.value.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
            if (p.decay && cfg_.weight_decay > 0.0f)
                p.value *= (1.0f - lr * cfg_.weight_decay);
        }
    }

    AdamConfig cfg_;
    std::int64_t t_ = 0;
};

// Linear warmup to the base rate, then linear decay to zero.
inline float scheduled_lr(float base_lr, std::int64_t step, std::int64_t total_steps,
                          float warmup_ratio) {
    if (total_steps <= 0) return base_lr;
    auto warmup_steps = std::int64_t(warmup_ratio * float(total_steps));
    if (warmup_steps > 0 && step < warmup_steps)
        return base_lr * float(step + 1) / float(warmup_steps);
    if (total_steps == warmup_steps) return base_lr;
    float progress = float(step - warmup_steps) / float(total_steps - warmup_steps);
    return base_lr * std::max(0.0f, 1.0f - progress);
}

}  // namespace marking
