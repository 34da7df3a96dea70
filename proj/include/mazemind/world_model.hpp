#pragma once
// Variational recurrent world model: observation encoder phi, posterior
// head for the 2-D intention z, GRU state update, and separate decoders
// for the current and next observation. The z prior is a fixed unit
// Gaussian. Desk scale uses dense encoders/decoders on 4x32x3 panoramas
// (channels-last); paper scale instantiates the conv stacks on 16x64x3
// (channels-first).

#include "mazemind/autodiff.hpp"
#include "mazemind/nn.hpp"
#include "mazemind/rng.hpp"

#include <string>
#include <vector>

namespace mazemind {

enum class ModelScale { desk, paper };

struct WmConfig {
    ModelScale scale = ModelScale::desk;
    int obs_h = 4, obs_w = 32;
    int z_dim = 2;
    int hidden = 64;       // main GRU width (256 at paper scale)
    int feat = 128;        // encoder output width (256 at paper scale)
    int enc_hidden = 256;  // desk dense encoder hidden
    int dec_hidden = 128;  // desk dense decoder hidden
    int post_hidden = 64;  // posterior MLP hidden (256 at paper scale)
    bool posterior_pair_input = true;  // false for the no-next-obs variant

    long obs_dim() const { return static_cast<long>(obs_h) * obs_w * 3; }
    bool conv() const { return scale == ModelScale::paper; }

    static WmConfig desk() { return WmConfig(); }
    static WmConfig paper() {
        WmConfig c;
        c.scale = ModelScale::paper;
        c.obs_h = 16;
        c.obs_w = 64;
        c.hidden = 256;
        c.feat = 256;
        c.post_hidden = 256;
        return c;
    }
};

// Conv stack from the paper-scale encoder table; input (B,C,16,64).
template <typename Real>
struct ConvEncoderT {
    std::vector<Conv2dT<Real>> layers;

    ConvEncoderT() = default;
    ConvEncoderT(ParamStoreT<Real>& store, const std::string& prefix, int in_ch) {
        layers.push_back({store, prefix + ".c1", in_ch, 8, 4, 4, 2, 2, 1, 1});
        layers.push_back({store, prefix + ".c2", 8, 16, 4, 4, 2, 2, 1, 1});
        layers.push_back({store, prefix + ".c3", 16, 16, 4, 4, 2, 2, 1, 1});
        layers.push_back({store, prefix + ".c4", 16, 64, 2, 4, 2, 2, 0, 1});
        layers.push_back({store, prefix + ".c5", 64, 256, 1, 4, 1, 4, 0, 0});
    }
    void init(RngStream& rng) {
        for (auto& l : layers) l.init(rng);
    }
    typename TapeT<Real>::Node* apply(TapeT<Real>& t, typename TapeT<Real>::Node* x, bool frozen) const {
        auto* h = x;
        for (const auto& l : layers) {
            auto* w = frozen ? t.constant_ref(l.W->value) : t.leaf(*l.W);
            auto* b = frozen ? t.constant_ref(l.b->value) : t.leaf(*l.b);
            h = t.relu(t.conv2d(h, w, b, l.sh, l.sw, l.ph, l.pw));
        }
        return h;  // (B,256,1,1); reshape is caller's concern
    }
};

// Transposed-conv stack from the paper-scale decoder table; input (B,256,1,1).
template <typename Real>
struct ConvDecoderT {
    std::vector<ConvTranspose2dT<Real>> layers;
    Conv2dT<Real>* final_conv = nullptr;
    std::vector<std::unique_ptr<Conv2dT<Real>>> owned;

    ConvDecoderT() = default;
    ConvDecoderT(ParamStoreT<Real>& store, const std::string& prefix) {
        layers.push_back({store, prefix + ".d1", 256, 64, 1, 4, 1, 1, 0, 0, 0, 0});
        layers.push_back({store, prefix + ".d2", 64, 16, 2, 4, 1, 2, 0, 1, 0, 0});
        layers.push_back({store, prefix + ".d3", 16, 16, 4, 4, 2, 2, 1, 1, 0, 0});
        layers.push_back({store, prefix + ".d4", 16, 8, 4, 4, 2, 2, 1, 1, 0, 0});
        layers.push_back({store, prefix + ".d5", 8, 8, 3, 3, 2, 2, 1, 1, 1, 1});
        owned.push_back(std::make_unique<Conv2dT<Real>>(store, prefix + ".d6", 8, 3, 3, 3, 1, 1, 1, 1));
        final_conv = owned.back().get();
    }
    void init(RngStream& rng) {
        for (auto& l : layers) l.init(rng);
        final_conv->init(rng);
    }
    typename TapeT<Real>::Node* apply(TapeT<Real>& t, typename TapeT<Real>::Node* x, bool frozen) const {
        auto* h = x;
        for (const auto& l : layers) {
            auto* w = frozen ? t.constant_ref(l.W->value) : t.leaf(*l.W);
            auto* b = frozen ? t.constant_ref(l.b->value) : t.leaf(*l.b);
            h = t.relu(t.conv2d_transpose(h, w, b, l.sh, l.sw, l.ph, l.pw, l.oph, l.opw));
        }
        auto* w = frozen ? t.constant_ref(final_conv->W->value) : t.leaf(*final_conv->W);
        auto* b = frozen ? t.constant_ref(final_conv->b->value) : t.leaf(*final_conv->b);
        return t.conv2d(h, w, b, 1, 1, 1, 1);  // (B,3,16,64), pre-sigmoid
    }
};

template <typename Real>
class WorldModelT {
  public:
    using Tape = TapeT<Real>;
    using Node = typename Tape::Node;
    using Arr = ArrayT<Real>;

    struct Posterior {
        Node* mu;
        Node* xi;
        Node* sigma;
    };

    WorldModelT(const WmConfig& cfg, ParamStoreT<Real>& store) : cfg_(cfg) {
        int pair_mult = cfg.posterior_pair_input ? 2 : 1;
        if (cfg.conv()) {
            conv_enc_ = ConvEncoderT<Real>(store, "wm.enc", 3 * pair_mult);
            conv_dec_cur_ = ConvDecoderT<Real>(store, "wm.dec_cur");
            conv_dec_next_ = ConvDecoderT<Real>(store, "wm.dec_next");
        } else {
            long in = cfg.obs_dim() * pair_mult;
            enc1_ = DenseT<Real>(store, "wm.enc1", static_cast<int>(in), cfg.enc_hidden);
            enc2_ = DenseT<Real>(store, "wm.enc2", cfg.enc_hidden, cfg.feat);
            dec_cur1_ = DenseT<Real>(store, "wm.dec_cur1", cfg.hidden, cfg.dec_hidden);
            dec_cur2_ = DenseT<Real>(store, "wm.dec_cur2", cfg.dec_hidden, static_cast<int>(cfg.obs_dim()));
            dec_next1_ = DenseT<Real>(store, "wm.dec_next1", cfg.hidden, cfg.dec_hidden);
            dec_next2_ = DenseT<Real>(store, "wm.dec_next2", cfg.dec_hidden, static_cast<int>(cfg.obs_dim()));
        }
        post_trunk_ = DenseT<Real>(store, "wm.post_trunk", cfg.hidden + cfg.feat, cfg.post_hidden);
        post_mu_ = DenseT<Real>(store, "wm.post_mu", cfg.post_hidden, cfg.z_dim);
        post_xi_ = DenseT<Real>(store, "wm.post_xi", cfg.post_hidden, cfg.z_dim);
        gru_ = GRUCellT<Real>(store, "wm.gru", cfg.z_dim, cfg.hidden);
    }

    const WmConfig& config() const { return cfg_; }

    void init(RngStream& rng) {
        if (cfg_.conv()) {
            conv_enc_.init(rng);
            conv_dec_cur_.init(rng);
            conv_dec_next_.init(rng);
        } else {
            enc1_.init(rng);
            enc2_.init(rng);
            dec_cur1_.init(rng);
            dec_cur2_.init(rng);
            dec_next1_.init(rng);
            dec_next2_.init(rng);
        }
        post_trunk_.init(rng);
        post_mu_.init(rng);
        post_xi_.init(rng);
        gru_.init(rng);
    }

    // phi over the observation pair (or single obs for the no-next-obs
    // variant, pass x_next = nullptr). Desk: x nodes are (B, obs_dim)
    // channels-last. Paper: (B, C, H, W) channels-first.
    Node* encode_obs(Tape& t, Node* x_t, Node* x_next, bool frozen = false) const {
        bool pair = cfg_.posterior_pair_input;
        detail::op_check((x_next != nullptr) == pair, "encode_obs: expected " +
                                                          std::string(pair ? "an observation pair" : "a single observation"));
        if (cfg_.conv()) {
            Node* in = pair ? t.concat({x_t, x_next}, 1) : x_t;  // channel concat
            Node* y = conv_enc_.apply(t, in, frozen);            // (B,256,1,1)
            return flatten2(t, y);
        }
        check_obs(x_t);
        if (pair) check_obs(x_next);
        Node* in = pair ? t.concat({x_t, x_next}, 1) : x_t;
        Node* h = t.relu(pair_dense(t, enc1_, in, frozen));
        return t.relu(pair_dense(t, enc2_, h, frozen));
    }

    Posterior infer_posterior(Tape& t, Node* h_prev, Node* feat, bool frozen = false) const {
        Node* in = t.concat({h_prev, feat}, static_cast<int>(h_prev->val().shape.size()) - 1);
        Node* trunk = t.tanh_(pair_dense(t, post_trunk_, in, frozen));
        Node* mu = pair_dense(t, post_mu_, trunk, frozen);
        Node* xi = pair_dense(t, post_xi_, trunk, frozen);
        return {mu, xi, t.softplus(xi)};
    }

    // Reparameterized sample z = mu + noise o sigma.
    Node* sample_z(Tape& t, const Posterior& q, const Arr& noise) const {
        return t.add(q.mu, t.mul(t.constant(noise), q.sigma));
    }

    Node* rnn_step(Tape& t, Node* h, Node* z, bool frozen = false) const {
        return gru_step(t, gru_, z, h, frozen);
    }

    Node* decode_current(Tape& t, Node* h, bool frozen = false) const {
        return decode(t, dec_cur1_, dec_cur2_, conv_dec_cur_, h, frozen);
    }
    Node* decode_next(Tape& t, Node* h, bool frozen = false) const {
        return decode(t, dec_next1_, dec_next2_, conv_dec_next_, h, frozen);
    }

    // Row-wise KL(q || N(0,I)): sum_d [ -ln s + (m^2 + s^2)/2 - 1/2 ].
    Node* kl_prior_rows(Tape& t, Node* mu, Node* sigma) const {
        Node* half = t.scale(t.add(t.square(mu), t.square(sigma)), Real(0.5));
        Node* body = t.sub(half, t.ln(sigma));
        Node* shifted = t.sub(body, t.constant(Arr(body->val().shape, Real(0.5))));
        return t.sum_last(shifted);
    }
    Node* kl_prior(Tape& t, Node* mu, Node* sigma) const { return t.sum(kl_prior_rows(t, mu, sigma)); }

    // Row-wise Bernoulli log-likelihood; pred is clamped into
    // [1e-5, 1-1e-5] before the logs.
    Node* bernoulli_loglik_rows(Tape& t, Node* pred, Node* target) const {
        Node* p = t.clamp(pred, Real(1e-5), Real(1) - Real(1e-5));
        Node* ones = t.constant(Arr(p->val().shape, Real(1)));
        Node* pos = t.mul(target, t.ln(p));
        Node* neg = t.mul(t.sub(ones, target), t.ln(t.sub(ones, p)));
        return t.sum_last(t.add(pos, neg));
    }
    Node* bernoulli_loglik(Tape& t, Node* pred, Node* target) const {
        return t.sum(bernoulli_loglik_rows(t, pred, target));
    }

    ArrayT<Real> initial_state(int batch) const { return ArrayT<Real>({batch, cfg_.hidden}); }

  private:
    WmConfig cfg_;
    DenseT<Real> enc1_, enc2_, dec_cur1_, dec_cur2_, dec_next1_, dec_next2_;
    ConvEncoderT<Real> conv_enc_;
    ConvDecoderT<Real> conv_dec_cur_, conv_dec_next_;
    DenseT<Real> post_trunk_, post_mu_, post_xi_;
    GRUCellT<Real> gru_;

    void check_obs(Node* x) const {
        detail::op_check(x->val().cols() == cfg_.obs_dim() || cfg_.conv(),
                         "encode_obs: observation width " + std::to_string(x->val().cols()) +
                             " does not match configured resolution " + std::to_string(cfg_.obs_dim()));
    }

    static Node* pair_dense(Tape& t, const DenseT<Real>& d, Node* x, bool frozen) {
        return frozen ? d.frozen(t, x) : d(t, x);
    }

    static Node* gru_step(Tape& t, const GRUCellT<Real>& g, Node* x, Node* h, bool frozen) {
        if (!frozen) return g.step(t, x, h);
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

    Node* flatten2(Tape& t, Node* y) const {
        return t.reshape(y, {y->val().shape[0], y->val().shape[1]});
    }

    Node* decode(Tape& t, const DenseT<Real>& d1, const DenseT<Real>& d2, const ConvDecoderT<Real>& cd,
                 Node* h, bool frozen) const {
        if (cfg_.conv()) {
            Node* r = t.reshape(h, {h->val().shape[0], cfg_.hidden, 1, 1});
            return t.sigmoid(cd.apply(t, r, frozen));
        }
        Node* mid = t.relu(pair_dense(t, d1, h, frozen));
        return t.sigmoid(pair_dense(t, d2, mid, frozen));
    }
};

}  // namespace mazemind
