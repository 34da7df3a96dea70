#pragma once
// Seeded random streams. One root seed fans out to independent named
// streams (splitmix64 over the stream id), so components never share or
// race a generator. Gaussians use Box-Muller explicitly to keep outputs
// identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace mazemind {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class Stream : uint64_t {
    param_init = 1,
    env = 2,
    prior_z = 3,
    posterior_z = 4,
    action_noise = 5,
    replay = 6,
    update_noise = 7,
    plan_init = 8,
    eval = 9,
    amortize = 10,
};

class RngStream {
  public:
    RngStream() : gen_(0) {}
    explicit RngStream(uint64_t seed) : gen_(seed) {}

    double u01() {  // uniform in (0,1)
        uint64_t r = gen_();
        return (static_cast<double>(r >> 11) + 1.0) * (1.0 / 9007199254740993.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    double gauss() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = u01(), u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    uint64_t next_u64() { return gen_(); }

    // index in [0, n)
    long index(long n) { return static_cast<long>(gen_() % static_cast<uint64_t>(n)); }

    std::string serialize() const {
        std::ostringstream os;
        os << gen_ << " " << (has_spare_ ? 1 : 0) << " " << spare_;
        return os.str();
    }
    void deserialize(const std::string& s) {
        std::istringstream is(s);
        int flag = 0;
        is >> gen_ >> flag >> spare_;
        has_spare_ = flag != 0;
    }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Root seed -> per-component streams; `salt` gives per-episode or
// per-worker substreams off the same component.
struct SeedPolicy {
    uint64_t root = 0;

    RngStream stream(Stream id, uint64_t salt = 0) const {
        uint64_t s = splitmix64(root ^ splitmix64(static_cast<uint64_t>(id)));
        if (salt) s = splitmix64(s ^ splitmix64(salt));
        return RngStream(s);
    }
};

}  // namespace mazemind
