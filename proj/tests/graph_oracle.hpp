#pragma once
// Test-side oracle: random composed graphs over the supported op kinds,
// checked against central finite differences. A graph is a small program
// re-executed per evaluation, so FD perturbs inputs and rebuilds the tape
// fresh each time, independent of the backward pass being verified.

#include "mazemind/autodiff.hpp"
#include "mazemind/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

namespace graphcheck {

using mazemind::RngStream;
using mazemind::Shape;

enum class OpKind {
    matmul, add, sub, mul, tanh_, sigmoid, relu, softplus, exp_, ln,
    square, sum, mean, concat, slice, softmax, broadcast, clamp,
};

inline const std::vector<OpKind>& all_kinds() {
    static const std::vector<OpKind> k = {
        OpKind::matmul, OpKind::add, OpKind::sub, OpKind::mul, OpKind::tanh_, OpKind::sigmoid,
        OpKind::relu, OpKind::softplus, OpKind::exp_, OpKind::ln, OpKind::square, OpKind::sum,
        OpKind::mean, OpKind::concat, OpKind::slice, OpKind::softmax, OpKind::broadcast, OpKind::clamp,
    };
    return k;
}

struct Instr {
    bool is_input = false;
    int input_idx = -1;   // when is_input
    OpKind kind = OpKind::add;
    int a = -1, b = -1;   // operand slot indices
    int axis = 0;
    long start = 0, len = 0;
};

struct Program {
    std::vector<Shape> input_shapes;
    std::vector<Instr> instrs;
    std::set<OpKind> used;

    template <typename Real>
    struct Eval {
        Real value{};
        std::vector<mazemind::ArrayT<Real>> grads;
        double kink_margin = 1e30;
        bool finite = true;
    };

    template <typename Real>
    Eval<Real> run(const std::vector<mazemind::ArrayT<Real>>& inputs, bool want_grad) const {
        using Tape = mazemind::TapeT<Real>;
        Tape t;
        std::vector<typename Tape::Node*> slots;
        std::vector<typename Tape::Node*> input_nodes(inputs.size(), nullptr);
        Eval<Real> ev;
        for (const Instr& I : instrs) {
            typename Tape::Node* out = nullptr;
            if (I.is_input) {
                out = t.variable(inputs[I.input_idx]);
                input_nodes[I.input_idx] = out;
            } else {
                typename Tape::Node* x = slots[I.a];
                typename Tape::Node* y = I.b >= 0 ? slots[I.b] : nullptr;
                switch (I.kind) {
                    case OpKind::matmul: out = t.matmul(x, y); break;
                    case OpKind::add: out = t.add(x, y); break;
                    case OpKind::sub: out = t.sub(x, y); break;
                    case OpKind::mul: out = t.mul(x, y); break;
                    case OpKind::tanh_: out = t.tanh_(x); break;
                    case OpKind::sigmoid: out = t.sigmoid(x); break;
                    case OpKind::relu:
                        for (Real v : x->val().data)
                            ev.kink_margin = std::min(ev.kink_margin, std::abs(static_cast<double>(v)));
                        out = t.relu(x);
                        break;
                    case OpKind::softplus: out = t.softplus(x); break;
                    case OpKind::exp_: out = t.exp_(t.sigmoid(x)); break;  // keep the argument bounded
                    case OpKind::ln:
                        out = t.ln(t.add(t.softplus(x),
                                         t.constant(mazemind::ArrayT<Real>(x->val().shape, Real(0.5)))));
                        break;
                    case OpKind::square: out = t.square(x); break;
                    case OpKind::sum: out = t.sum_last(x); break;
                    case OpKind::mean: out = t.mean(x); break;
                    case OpKind::concat: out = t.concat({x, y}, I.axis); break;
                    case OpKind::slice: out = t.slice(x, I.axis, I.start, I.len); break;
                    case OpKind::softmax: out = t.softmax(x); break;
                    case OpKind::broadcast: out = t.broadcast(x, slots[I.b]->val().shape); break;
                    case OpKind::clamp:
                        for (Real v : x->val().data) {
                            ev.kink_margin =
                                std::min({ev.kink_margin, std::abs(static_cast<double>(v) - 1.25),
                                          std::abs(static_cast<double>(v) + 1.25)});
                        }
                        out = t.clamp(x, Real(-1.25), Real(1.25));
                        break;
                }
            }
            if (!out->val().all_finite()) ev.finite = false;
            slots.push_back(out);
        }
        typename Tape::Node* total = nullptr;
        for (auto* s : slots) {
            auto* m = t.mean(s);
            total = total ? t.add(total, m) : m;
        }
        ev.value = total->val()[0];
        if (want_grad) {
            t.backward(total);
            for (size_t i = 0; i < inputs.size(); ++i) ev.grads.push_back(input_nodes[i]->grad);
        }
        return ev;
    }
};

// Build one random program; `force` appears as the first op so a suite of
// programs covers every kind.
inline Program make_program(RngStream& rng, OpKind force) {
    Program p;
    std::vector<Shape> shapes;  // per slot

    auto emit_input = [&](Shape s) {
        Instr I;
        I.is_input = true;
        I.input_idx = static_cast<int>(p.input_shapes.size());
        p.input_shapes.push_back(s);
        p.instrs.push_back(I);
        shapes.push_back(std::move(s));
        return static_cast<int>(shapes.size() - 1);
    };
    auto rnd_dim = [&] { return 2 + static_cast<int>(rng.index(3)); };

    int n0 = 2 + static_cast<int>(rng.index(2));
    for (int i = 0; i < n0; ++i) emit_input({rnd_dim(), rnd_dim()});

    int steps = 5 + static_cast<int>(rng.index(5));
    for (int s = 0; s < steps; ++s) {
        OpKind k = (s == 0) ? force : all_kinds()[rng.index(static_cast<long>(all_kinds().size()))];
        int a = static_cast<int>(rng.index(static_cast<long>(shapes.size())));
        const Shape xs = shapes[a];
        Instr I;
        I.kind = k;
        I.a = a;
        Shape out = xs;
        switch (k) {
            case OpKind::matmul: {
                if (xs.size() != 2) { --s; continue; }
                Shape bs{xs[1], rnd_dim()};
                I.b = emit_input(bs);
                out = {xs[0], bs[1]};
                break;
            }
            case OpKind::add:
            case OpKind::sub:
            case OpKind::mul:
                I.b = emit_input(xs);
                break;
            case OpKind::concat: {
                if (xs.size() != 2) { --s; continue; }
                I.axis = static_cast<int>(rng.index(2));
                Shape bs = xs;
                bs[I.axis] = rnd_dim();
                I.b = emit_input(bs);
                out[I.axis] = xs[I.axis] + bs[I.axis];
                break;
            }
            case OpKind::slice: {
                if (xs.size() != 2) { --s; continue; }
                I.axis = static_cast<int>(rng.index(2));
                if (xs[I.axis] < 2) { --s; continue; }
                I.len = 1 + rng.index(xs[I.axis] - 1);
                I.start = rng.index(xs[I.axis] - I.len + 1);
                out[I.axis] = static_cast<int>(I.len);
                break;
            }
            case OpKind::broadcast: {
                if (xs.size() != 2) { --s; continue; }
                int src = emit_input({1, xs[1]});
                I.a = src;
                I.b = a;  // target shape reference
                out = xs;
                break;
            }
            case OpKind::sum:
                out.back() = 1;
                break;
            case OpKind::mean:
                out = {1};
                break;
            default:
                break;  // unaries / softmax keep shape
        }
        p.instrs.push_back(I);
        shapes.push_back(out);
        p.used.insert(k);
    }
    return p;
}

struct FdReport {
    long checked = 0;
    double max_err = 0;     // max of |a-fd| - rtol*max(|a|,|fd|) style normalized error
    bool ok = true;
};

// Central finite differences on every input element.
template <typename Real>
FdReport fd_check(const Program& p, RngStream& rng, double h, double rtol, double atol) {
    std::vector<mazemind::ArrayT<Real>> inputs;
    for (int tries = 0; tries < 200; ++tries) {
        inputs.clear();
        for (const Shape& s : p.input_shapes) {
            mazemind::ArrayT<Real> a(s);
            for (Real& v : a.data) v = static_cast<Real>(rng.uniform(-2.0, 2.0));
            inputs.push_back(std::move(a));
        }
        auto probe = p.run<Real>(inputs, false);
        if (probe.finite && probe.kink_margin > 20 * h) break;  // stay away from relu/clamp kinks
    }
    auto base = p.run<Real>(inputs, true);
    FdReport rep;
    for (size_t i = 0; i < inputs.size(); ++i) {
        for (long j = 0; j < inputs[i].size(); ++j) {
            Real keep = inputs[i][j];
            inputs[i][j] = keep + static_cast<Real>(h);
            double fp = static_cast<double>(p.run<Real>(inputs, false).value);
            inputs[i][j] = keep - static_cast<Real>(h);
            double fm = static_cast<double>(p.run<Real>(inputs, false).value);
            inputs[i][j] = keep;
            double fd = (fp - fm) / (2 * h);
            double an = static_cast<double>(base.grads[i][j]);
            double err = std::abs(an - fd);
            double tol = atol + rtol * std::max(std::abs(an), std::abs(fd));
            rep.checked++;
            rep.max_err = std::max(rep.max_err, err - rtol * std::max(std::abs(an), std::abs(fd)));
            if (err > tol) rep.ok = false;
        }
    }
    return rep;
}

}  // namespace graphcheck
