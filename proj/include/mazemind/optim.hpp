#pragma once
// Adam and RMSProp over named parameter sets, with a loose global-norm
// clip as an overflow guard. Steps reject non-finite gradients, naming
// the offending parameter, and zero all gradients afterwards.

#include "mazemind/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mazemind {

enum class OptKind { adam, rmsprop };

template <typename Real>
class OptimizerT {
  public:
    using Param = ParamT<Real>;

    struct Config {
        OptKind kind = OptKind::adam;
        Real lr = Real(3e-4);
        Real beta1 = Real(0.9);   // adam first-moment decay
        Real beta2 = Real(0.999); // adam second-moment decay / rmsprop decay via `decay`
        Real decay = Real(0.9);   // rmsprop accumulator decay
        Real eps = Real(1e-8);
        Real max_grad_norm = Real(1000);
    };

    OptimizerT() = default;
    OptimizerT(Config cfg, std::vector<Param*> params) : cfg_(cfg), params_(std::move(params)) {
        for (Param* p : params_) {
            m_.emplace_back(p->value.shape);
            if (cfg_.kind == OptKind::adam) v_.emplace_back(p->value.shape);
        }
    }

    const std::vector<Param*>& params() const { return params_; }
    long step_count() const { return step_; }
    const Config& config() const { return cfg_; }

    void zero_grads() {
        for (Param* p : params_) p->grad.zero();
    }

    double grad_norm() const {
        double sq = 0;
        for (Param* p : params_)
            for (Real g : p->grad.data) sq += static_cast<double>(g) * static_cast<double>(g);
        return std::sqrt(sq);
    }

    void step() {
        for (Param* p : params_)
            if (!p->grad.all_finite())
                throw std::runtime_error("optimizer_step: non-finite gradient in parameter '" + p->name + "'");
        double norm = grad_norm();
        Real scale = Real(1);
        if (norm > static_cast<double>(cfg_.max_grad_norm))
            scale = static_cast<Real>(static_cast<double>(cfg_.max_grad_norm) / norm);
        ++step_;
        if (cfg_.kind == OptKind::adam) {
            Real bc1 = Real(1) - std::pow(cfg_.beta1, static_cast<Real>(step_));
            Real bc2 = Real(1) - std::pow(cfg_.beta2, static_cast<Real>(step_));
            for (size_t i = 0; i < params_.size(); ++i) {
                Param& p = *params_[i];
                for (long j = 0; j < p.value.size(); ++j) {
                    Real g = p.grad[j] * scale;
                    m_[i][j] = cfg_.beta1 * m_[i][j] + (Real(1) - cfg_.beta1) * g;
                    v_[i][j] = cfg_.beta2 * v_[i][j] + (Real(1) - cfg_.beta2) * g * g;
                    Real mh = m_[i][j] / bc1;
                    Real vh = v_[i][j] / bc2;
                    p.value[j] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
                }
            }
        } else {
            for (size_t i = 0; i < params_.size(); ++i) {
                Param& p = *params_[i];
                for (long j = 0; j < p.value.size(); ++j) {
                    Real g = p.grad[j] * scale;
                    m_[i][j] = cfg_.decay * m_[i][j] + (Real(1) - cfg_.decay) * g * g;
                    p.value[j] -= cfg_.lr * g / (std::sqrt(m_[i][j]) + cfg_.eps);
                }
            }
        }
        zero_grads();
    }

    // Moment accumulators, exposed for checkpointing.
    std::vector<ArrayT<Real>>& moments1() { return m_; }
    std::vector<ArrayT<Real>>& moments2() { return v_; }
    void set_step_count(long s) { step_ = s; }

  private:
    Config cfg_;
    std::vector<Param*> params_;
    std::vector<ArrayT<Real>> m_;  // adam m / rmsprop square accumulator
    std::vector<ArrayT<Real>> v_;  // adam v
    long step_ = 0;
};

// FNV-1a over the raw parameter bytes; used to assert weight freezes.
template <typename Real>
uint64_t params_hash(const std::vector<ParamT<Real>*>& params) {
    uint64_t h = 1469598103934665603ULL;
    for (const ParamT<Real>* p : params)
        for (Real v : p->value.data) {
            const unsigned char* bytes = reinterpret_cast<const unsigned char*>(&v);
            for (size_t i = 0; i < sizeof(Real); ++i) {
                h ^= bytes[i];
                h *= 1099511628211ULL;
            }
        }
    return h;
}

}  // namespace mazemind
