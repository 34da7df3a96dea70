#pragma once
// Network building blocks on top of the tape: parameter store, dense and
// convolution layers, GRU cell. Weights initialize uniform in
// +-sqrt(1/fan_in), biases zero.

#include "mazemind/autodiff.hpp"
#include "mazemind/rng.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace mazemind {

template <typename Real>
class ParamStoreT {
  public:
    using Param = ParamT<Real>;

    Param* add(const std::string& name, Shape shape) {
        storage_.push_back(std::make_unique<Param>(name, std::move(shape)));
        return storage_.back().get();
    }

    std::vector<Param*> all() const {
        std::vector<Param*> out;
        out.reserve(storage_.size());
        for (auto& p : storage_) out.push_back(p.get());
        return out;
    }

    Param* find(const std::string& name) const {
        for (auto& p : storage_)
            if (p->name == name) return p.get();
        return nullptr;
    }

  private:
    std::vector<std::unique_ptr<Param>> storage_;
};

template <typename Real>
void init_uniform_fan_in(ParamT<Real>& p, long fan_in, RngStream& rng) {
    double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (Real& v : p.value.data) v = static_cast<Real>(rng.uniform(-bound, bound));
}

template <typename Real>
struct DenseT {
    using Tape = TapeT<Real>;
    ParamT<Real>* W = nullptr;
    ParamT<Real>* b = nullptr;

    DenseT() = default;
    DenseT(ParamStoreT<Real>& store, const std::string& prefix, int in, int out) {
        W = store.add(prefix + ".W", {in, out});
        b = store.add(prefix + ".b", {out});
    }

    void init(RngStream& rng) { init_uniform_fan_in(*W, W->value.shape[0], rng); }

    typename Tape::Node* operator()(Tape& t, typename Tape::Node* x) const {
        auto* y = t.matmul(x, t.leaf(*W));
        return t.add(y, t.broadcast(t.leaf(*b), y->val().shape));
    }

    // Forward with parameters frozen as constants (no gradient into W, b).
    typename Tape::Node* frozen(Tape& t, typename Tape::Node* x) const {
        auto* y = t.matmul(x, t.constant_ref(W->value));
        return t.add(y, t.broadcast(t.constant_ref(b->value), y->val().shape));
    }
};

// Standard GRU cell: r/u gates sigmoid, candidate tanh with reset-scaled
// recurrent term, h' = u*h + (1-u)*n.
template <typename Real>
struct GRUCellT {
    using Tape = TapeT<Real>;
    using Node = typename Tape::Node;
    ParamT<Real>*Wr, *Ur, *br, *Wu, *Uu, *bu, *Wn, *Un, *bn_x, *bn_h;
    int input = 0, hidden = 0;

    GRUCellT() = default;
    GRUCellT(ParamStoreT<Real>& store, const std::string& prefix, int in, int h) : input(in), hidden(h) {
        Wr = store.add(prefix + ".Wr", {in, h});
        Ur = store.add(prefix + ".Ur", {h, h});
        br = store.add(prefix + ".br", {h});
        Wu = store.add(prefix + ".Wu", {in, h});
        Uu = store.add(prefix + ".Uu", {h, h});
        bu = store.add(prefix + ".bu", {h});
        Wn = store.add(prefix + ".Wn", {in, h});
        Un = store.add(prefix + ".Un", {h, h});
        bn_x = store.add(prefix + ".bn_x", {h});
        bn_h = store.add(prefix + ".bn_h", {h});
    }

    void init(RngStream& rng) {
        for (ParamT<Real>* w : {Wr, Wu, Wn}) init_uniform_fan_in(*w, input, rng);
        for (ParamT<Real>* w : {Ur, Uu, Un}) init_uniform_fan_in(*w, hidden, rng);
    }

    Node* step(Tape& t, Node* x, Node* h) const {
        const Shape& hs = h->val().shape;
        auto lin = [&](ParamT<Real>* W, Node* in, ParamT<Real>* b) {
            auto* y = t.matmul(in, t.leaf(*W));
            return b ? t.add(y, t.broadcast(t.leaf(*b), hs)) : y;
        };
        Node* r = t.sigmoid(t.add(lin(Wr, x, br), lin(Ur, h, nullptr)));
        Node* u = t.sigmoid(t.add(lin(Wu, x, bu), lin(Uu, h, nullptr)));
        Node* n = t.tanh_(t.add(lin(Wn, x, bn_x), t.mul(r, lin(Un, h, bn_h))));
        // u*h + (1-u)*n = n + u*(h - n)
        return t.add(n, t.mul(u, t.sub(h, n)));
    }

};

template <typename Real>
struct Conv2dT {
    using Tape = TapeT<Real>;
    ParamT<Real>*W, *b;
    int sh, sw, ph, pw;

    Conv2dT(ParamStoreT<Real>& store, const std::string& prefix, int ci, int co, int kh, int kw, int sh_,
            int sw_, int ph_, int pw_)
        : sh(sh_), sw(sw_), ph(ph_), pw(pw_) {
        W = store.add(prefix + ".W", {co, ci, kh, kw});
        b = store.add(prefix + ".b", {co});
    }
    void init(RngStream& rng) {
        init_uniform_fan_in(*W, static_cast<long>(W->value.shape[1]) * W->value.shape[2] * W->value.shape[3],
                            rng);
    }
    typename Tape::Node* operator()(Tape& t, typename Tape::Node* x) const {
        return t.conv2d(x, t.leaf(*W), t.leaf(*b), sh, sw, ph, pw);
    }
};

template <typename Real>
struct ConvTranspose2dT {
    using Tape = TapeT<Real>;
    ParamT<Real>*W, *b;
    int sh, sw, ph, pw, oph, opw;

    ConvTranspose2dT(ParamStoreT<Real>& store, const std::string& prefix, int ci, int co, int kh, int kw,
                     int sh_, int sw_, int ph_, int pw_, int oph_, int opw_)
        : sh(sh_), sw(sw_), ph(ph_), pw(pw_), oph(oph_), opw(opw_) {
        W = store.add(prefix + ".W", {ci, co, kh, kw});
        b = store.add(prefix + ".b", {co});
    }
    void init(RngStream& rng) {
        init_uniform_fan_in(*W, static_cast<long>(W->value.shape[0]) * W->value.shape[2] * W->value.shape[3],
                            rng);
    }
    typename Tape::Node* operator()(Tape& t, typename Tape::Node* x) const {
        return t.conv2d_transpose(x, t.leaf(*W), t.leaf(*b), sh, sw, ph, pw, oph, opw);
    }
};

}  // namespace mazemind
