#pragma once
// Shared policy network (one parameter set serving both the prior-driven
// habitual path and the posterior/plan-driven goal path) and twin
// recurrent Q-networks with target copies. Critics read their own
// encoding of the raw observation, not the world-model state.

#include "mazemind/nn.hpp"
#include "mazemind/world_model.hpp"

#include <string>
#include <vector>

namespace mazemind {

struct PvConfig {
    int wm_hidden = 64;   // policy input width
    int pol_hidden = 64;  // policy GRU width
    int mlp_hidden = 64;
    int act_dim = 2;
    int critic_feat = 128;
    int critic_enc_hidden = 256;
    int critic_hidden = 64;
    bool conv = false;
    long obs_dim = 4 * 32 * 3;

    static PvConfig from_wm(const WmConfig& wm) {
        PvConfig c;
        c.wm_hidden = wm.hidden;
        c.pol_hidden = wm.hidden;
        c.mlp_hidden = wm.hidden;
        c.critic_feat = wm.feat;
        c.critic_enc_hidden = wm.enc_hidden;
        c.critic_hidden = wm.hidden;
        c.conv = wm.conv();
        c.obs_dim = wm.obs_dim();
        return c;
    }
};

template <typename Real>
class PolicyNetT {
  public:
    using Tape = TapeT<Real>;
    using Node = typename Tape::Node;

    struct Out {
        Node* mu;
        Node* sigma;
        Node* state;
    };

    PolicyNetT(const PvConfig& cfg, ParamStoreT<Real>& store) : cfg_(cfg) {
        gru_ = GRUCellT<Real>(store, "policy.gru", cfg.wm_hidden, cfg.pol_hidden);
        trunk_ = DenseT<Real>(store, "policy.trunk", cfg.pol_hidden, cfg.mlp_hidden);
        mu_ = DenseT<Real>(store, "policy.mu", cfg.mlp_hidden, cfg.act_dim);
        xi_ = DenseT<Real>(store, "policy.xi", cfg.mlp_hidden, cfg.act_dim);
    }

    void init(RngStream& rng) {
        gru_.init(rng);
        trunk_.init(rng);
        mu_.init(rng);
        xi_.init(rng);
    }

    // One recurrent step: consumes the world-model state (prior or
    // posterior path, same parameters either way) and emits the action
    // distribution plus the updated policy state.
    Out step(Tape& t, Node* h_in, Node* state, bool frozen = false) const {
        Node* s = frozen ? frozen_gru(t, gru_, h_in, state) : gru_.step(t, h_in, state);
        Node* m = t.relu(frozen ? trunk_.frozen(t, s) : trunk_(t, s));
        Node* mu = frozen ? mu_.frozen(t, m) : mu_(t, m);
        Node* xi = frozen ? xi_.frozen(t, m) : xi_(t, m);
        return {mu, t.softplus(xi), s};
    }

    ArrayT<Real> initial_state(int batch) const { return ArrayT<Real>({batch, cfg_.pol_hidden}); }

    const PvConfig& config() const { return cfg_; }

    static Node* frozen_gru(Tape& t, const GRUCellT<Real>& g, Node* x, Node* h) {
        const Shape& hs = h->val().shape;
        auto lin = [&](ParamT<Real>* W, Node* in, ParamT<Real>* b) {
            auto* y = t.matmul(in, t.constant_ref(W->value));
            return b ? t.add(y, t.broadcast(t.constant_ref(b->value), hs)) : y;
        };
        Node* r = t.sigmoid(t.add(lin(g.Wr, x, g.br), lin(g.Ur, h, nullptr)));
        Node* u = t.sigmoid(t.add(lin(g.Wu, x, g.bu), lin(g.Uu, h, nullptr)));
        Node* n = t.tanh_(t.add(lin(g.Wn, x, g.bn_x), t.mul(r, lin(g.Un, h, g.bn_h))));
        return t.add(n, t.mul(u, t.sub(h, n)));
    }

  private:
    PvConfig cfg_;
    GRUCellT<Real> gru_;
    DenseT<Real> trunk_, mu_, xi_;
};

// a = tanh(mu + eps o sigma) with the change-of-variables correction
// logp = sum_d [ -eps^2/2 - ln sigma - ln(2 pi)/2 - ln(1 - a^2 + 1e-6) ].
template <typename Real>
struct SquashedAction {
    typename TapeT<Real>::Node* action;
    typename TapeT<Real>::Node* logp;  // (B,1)
};

template <typename Real>
SquashedAction<Real> squash_action(TapeT<Real>& t, typename TapeT<Real>::Node* mu,
                                   typename TapeT<Real>::Node* sigma, const ArrayT<Real>& eps) {
    using Arr = ArrayT<Real>;
    detail::op_check(eps.same_shape(mu->val()), "squash_action: eps shape " + shape_str(eps.shape) +
                                                    " != mu shape " + shape_str(mu->val().shape));
    auto* e = t.constant(eps);
    auto* pre = t.add(mu, t.mul(e, sigma));
    auto* a = t.tanh_(pre);
    Arr base_const(eps.shape);
    for (long i = 0; i < eps.size(); ++i)
        base_const[i] = static_cast<Real>(-0.5 * static_cast<double>(eps[i]) * static_cast<double>(eps[i]) -
                                          0.5 * std::log(2.0 * M_PI));
    auto* gauss = t.sub(t.constant(std::move(base_const)), t.ln(sigma));
    Arr eps_floor(eps.shape, Real(1) + Real(1e-6));
    auto* one_minus_a2 = t.sub(t.constant(std::move(eps_floor)), t.square(a));
    auto* logp = t.sum_last(t.sub(gauss, t.ln(one_minus_a2)));
    return {a, logp};
}

// Elementwise min via relu: min(a,b) = b - relu(b - a).
template <typename Real>
typename TapeT<Real>::Node* min_elem(TapeT<Real>& t, typename TapeT<Real>::Node* a,
                                     typename TapeT<Real>::Node* b) {
    return t.sub(b, t.relu(t.sub(b, a)));
}

template <typename Real>
class CriticNetT {
  public:
    using Tape = TapeT<Real>;
    using Node = typename Tape::Node;

    CriticNetT(const PvConfig& cfg, ParamStoreT<Real>& store, const std::string& prefix) : cfg_(cfg) {
        if (cfg.conv) {
            conv_enc_ = ConvEncoderT<Real>(store, prefix + ".enc", 3);
        } else {
            enc1_ = DenseT<Real>(store, prefix + ".enc1", static_cast<int>(cfg.obs_dim), cfg.critic_enc_hidden);
            enc2_ = DenseT<Real>(store, prefix + ".enc2", cfg.critic_enc_hidden, cfg.critic_feat);
        }
        gru_ = GRUCellT<Real>(store, prefix + ".gru", cfg.critic_feat + cfg.act_dim, cfg.critic_hidden);
        q1_ = DenseT<Real>(store, prefix + ".q1", cfg.critic_hidden + cfg.act_dim, cfg.mlp_hidden);
        q2_ = DenseT<Real>(store, prefix + ".q2", cfg.mlp_hidden, 1);
    }

    void init(RngStream& rng) {
        if (cfg_.conv) {
            conv_enc_.init(rng);
        } else {
            enc1_.init(rng);
            enc2_.init(rng);
        }
        gru_.init(rng);
        q1_.init(rng);
        q2_.init(rng);
    }

    Node* encode(Tape& t, Node* obs, bool frozen = false) const {
        if (cfg_.conv) {
            Node* y = conv_enc_.apply(t, obs, frozen);
            return t.reshape(y, {y->val().shape[0], y->val().shape[1]});
        }
        Node* h = t.relu(frozen ? enc1_.frozen(t, obs) : enc1_(t, obs));
        return t.relu(frozen ? enc2_.frozen(t, h) : enc2_(t, h));
    }

    // State recurrence consumes [enc(x_t), a_{t-1}]; the head scores any
    // action against the current state, so Q(s_t, a) is cheap for fresh a.
    Node* recur(Tape& t, Node* feat, Node* prev_action, Node* state, bool frozen = false) const {
        Node* in = t.concat({feat, prev_action}, 1);
        return frozen ? PolicyNetT<Real>::frozen_gru(t, gru_, in, state) : gru_.step(t, in, state);
    }

    Node* q_value(Tape& t, Node* state, Node* action, bool frozen = false) const {
        Node* in = t.concat({state, action}, 1);
        Node* m = t.relu(frozen ? q1_.frozen(t, in) : q1_(t, in));
        return frozen ? q2_.frozen(t, m) : q2_(t, m);
    }

    ArrayT<Real> initial_state(int batch) const { return ArrayT<Real>({batch, cfg_.critic_hidden}); }

  private:
    PvConfig cfg_;
    DenseT<Real> enc1_, enc2_;
    ConvEncoderT<Real> conv_enc_;
    GRUCellT<Real> gru_;
    DenseT<Real> q1_, q2_;
};

// Twin online critics plus target copies tracked by soft updates.
template <typename Real>
class CriticsT {
  public:
    CriticsT(const PvConfig& cfg, ParamStoreT<Real>& online_store, ParamStoreT<Real>& target_store)
        : online1_(cfg, online_store, "critic1"),
          online2_(cfg, online_store, "critic2"),
          target1_(cfg, target_store, "target1"),
          target2_(cfg, target_store, "target2"),
          online_params_(online_store.all()),
          target_params_(target_store.all()) {}

    void init(RngStream& rng) {
        online1_.init(rng);
        online2_.init(rng);
        copy_online_to_target();
    }

    void copy_online_to_target() {
        for (size_t i = 0; i < online_params_.size(); ++i)
            target_params_[i]->value.data = online_params_[i]->value.data;
    }

    // target <- (1 - tau) * target + tau * online
    void soft_update(Real tau) {
        detail::op_check(tau > 0 && tau <= 1, "soft_update: tau must be in (0,1]");
        for (size_t i = 0; i < online_params_.size(); ++i) {
            auto& tv = target_params_[i]->value;
            const auto& ov = online_params_[i]->value;
            for (long j = 0; j < tv.size(); ++j) tv[j] = (Real(1) - tau) * tv[j] + tau * ov[j];
        }
    }

    CriticNetT<Real>& online1() { return online1_; }
    CriticNetT<Real>& online2() { return online2_; }
    const CriticNetT<Real>& target1() const { return target1_; }
    const CriticNetT<Real>& target2() const { return target2_; }
    const std::vector<ParamT<Real>*>& online_params() const { return online_params_; }
    const std::vector<ParamT<Real>*>& target_params() const { return target_params_; }

  private:
    CriticNetT<Real> online1_, online2_, target1_, target2_;
    std::vector<ParamT<Real>*> online_params_, target_params_;
};

}  // namespace mazemind
