#pragma once
// Episode replay: a ring of complete (or truncated) sequences, and padded
// time-major batch assembly. A stored sequence holds L transitions plus
// L+1 observations.

#include "mazemind/rng.hpp"
#include "mazemind/tensor.hpp"

#include <array>
#include <deque>
#include <stdexcept>
#include <vector>

namespace mazemind {

struct EpisodeSeq {
    uint64_t id = 0;
    std::vector<std::vector<float>> obs;       // L+1 flat observations
    std::vector<std::array<float, 2>> actions; // L
    std::vector<float> rewards;                // L
    std::vector<uint8_t> done;                 // L

    int length() const { return static_cast<int>(actions.size()); }
    bool consistent() const {
        return obs.size() == actions.size() + 1 && rewards.size() == actions.size() &&
               done.size() == actions.size();
    }
};

class ReplayBuffer {
  public:
    explicit ReplayBuffer(size_t capacity = (1u << 12)) : capacity_(capacity) {}

    size_t capacity() const { return capacity_; }
    size_t size() const { return seqs_.size(); }
    uint64_t total_inserted() const { return next_id_; }

    const EpisodeSeq& at(size_t i) const { return seqs_[i]; }

    uint64_t push(EpisodeSeq seq) {
        if (!seq.consistent() || seq.length() == 0)
            throw std::invalid_argument("ReplayBuffer::push: malformed sequence");
        seq.id = next_id_++;
        seqs_.push_back(std::move(seq));
        while (seqs_.size() > capacity_) seqs_.pop_front();  // oldest replaced first
        return seqs_.back().id;
    }

  private:
    size_t capacity_;
    std::deque<EpisodeSeq> seqs_;
    uint64_t next_id_ = 0;
};

// Time-major padded batch: row (t*B + b) of a per-step block belongs to
// sequence b at step t. Masked (padded) steps must contribute zero to
// every loss term.
template <typename Real>
struct SequenceBatchT {
    int B = 0, T = 0;
    long obs_dim = 0;
    ArrayT<Real> obs;        // ((T+1)*B, obs_dim)
    ArrayT<Real> actions;    // (T*B, 2)
    ArrayT<Real> prev_actions; // (T*B, 2); a_0 = 0
    ArrayT<Real> rewards;    // (T*B, 1)
    ArrayT<Real> mask;       // (T*B, 1)
    ArrayT<Real> done;       // (T*B, 1)
    ArrayT<Real> boot_mask;  // (T*B, 1): 1 where a bootstrap target exists

    long row(int t, int b) const { return static_cast<long>(t) * B + b; }
};

// Sample B sequences (uniform, with replacement) from `pool` and pad to a
// common length: `fixed_len` if positive, else the longest sampled length.
template <typename Real>
SequenceBatchT<Real> sample_batch(const std::vector<const EpisodeSeq*>& pool, int B, int fixed_len,
                                  int max_len, RngStream& rng) {
    if (pool.empty()) throw std::runtime_error("sample_batch: empty pool");
    std::vector<const EpisodeSeq*> picks(B);
    int longest = 1;
    for (int b = 0; b < B; ++b) {
        picks[b] = pool[rng.index(static_cast<long>(pool.size()))];
        longest = std::max(longest, picks[b]->length());
    }
    int T = fixed_len > 0 ? fixed_len : std::min(longest, max_len);

    SequenceBatchT<Real> out;
    out.B = B;
    out.T = T;
    out.obs_dim = static_cast<long>(picks[0]->obs[0].size());
    out.obs = ArrayT<Real>({(T + 1) * B, static_cast<int>(out.obs_dim)});
    out.actions = ArrayT<Real>({T * B, 2});
    out.prev_actions = ArrayT<Real>({T * B, 2});
    out.rewards = ArrayT<Real>({T * B, 1});
    out.mask = ArrayT<Real>({T * B, 1});
    out.done = ArrayT<Real>({T * B, 1});
    out.boot_mask = ArrayT<Real>({T * B, 1});

    for (int b = 0; b < B; ++b) {
        const EpisodeSeq& s = *picks[b];
        int L = std::min(s.length(), T);
        for (int t = 0; t <= T; ++t) {
            const std::vector<float>& src = s.obs[std::min<size_t>(t, L)];
            Real* dst = out.obs.data.data() + out.row(t, b) * out.obs_dim;
            for (long i = 0; i < out.obs_dim; ++i) dst[i] = static_cast<Real>(src[static_cast<size_t>(i)]);
        }
        for (int t = 0; t < L; ++t) {
            long r = out.row(t, b);
            out.actions[r * 2] = static_cast<Real>(s.actions[t][0]);
            out.actions[r * 2 + 1] = static_cast<Real>(s.actions[t][1]);
            if (t > 0) {
                out.prev_actions[r * 2] = static_cast<Real>(s.actions[t - 1][0]);
                out.prev_actions[r * 2 + 1] = static_cast<Real>(s.actions[t - 1][1]);
            }
            out.rewards[r] = static_cast<Real>(s.rewards[t]);
            out.mask[r] = Real(1);
            out.done[r] = s.done[t] ? Real(1) : Real(0);
            // bootstrap needs the next step's policy state; the final
            // transition of a truncated (not-done) sequence has none.
            out.boot_mask[r] = (!s.done[t] && t + 1 >= L) ? Real(0) : Real(1);
        }
    }
    return out;
}

}  // namespace mazemind
