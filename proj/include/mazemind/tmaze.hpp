#pragma once
// Deterministic 2-D kinematic T-maze. Free space is the union of a stem
// rectangle and a crossbar rectangle; the two crossbar ends are exit
// regions. Observations are 360-degree ray-cast color panoramas with
// distance attenuation; the two arms are painted different colors so
// vision distinguishes them.

#include "mazemind/kvfile.hpp"
#include "mazemind/tensor.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mazemind {

using Obs = ArrayT<float>;

enum class Exit { none, left, right };

inline const char* exit_str(Exit e) {
    switch (e) {
        case Exit::left: return "left";
        case Exit::right: return "right";
        default: return "none";
    }
}

struct Rgb {
    float r = 0, g = 0, b = 0;
};

struct MazeConfig {
    // stem rectangle (vertical corridor) and bar rectangle (horizontal top)
    double stem_x0 = 4, stem_x1 = 6, stem_y0 = 0, stem_y1 = 6;
    double bar_x0 = 0, bar_x1 = 10, bar_y0 = 6, bar_y1 = 8;
    double exit_width = 1;  // measured inward from each bar end
    double start_x = 5, start_y = 1;
    double speed_limit = 0.5;
    int max_steps = 60;
    int obs_h = 4, obs_w = 32;
    double attenuation = 0.25;
    Rgb left_color{1.f, 0.f, 0.f};
    Rgb right_color{0.f, 0.f, 1.f};
    Rgb stem_color{0.5f, 0.5f, 0.5f};

    double reward_exit = 100.0;
    double reward_wall = -10.0;

    void validate() const {
        auto fail = [](const std::string& f, const std::string& why) {
            throw std::runtime_error("maze config: field '" + f + "' invalid: " + why);
        };
        if (stem_x0 >= stem_x1) fail("stem_x0/stem_x1", "empty stem");
        if (stem_y0 >= stem_y1) fail("stem_y0/stem_y1", "empty stem");
        if (bar_x0 >= bar_x1) fail("bar_x0/bar_x1", "empty bar");
        if (bar_y0 >= bar_y1) fail("bar_y0/bar_y1", "empty bar");
        if (std::abs(stem_y1 - bar_y0) > 1e-9) fail("stem_y1", "stem must end where the bar begins");
        if (stem_x0 < bar_x0 || stem_x1 > bar_x1) fail("stem_x0/stem_x1", "stem must lie under the bar");
        if (exit_width <= 0 || 2 * exit_width > (bar_x1 - bar_x0))
            fail("exit_width", "must be positive and fit in the bar");
        if (speed_limit <= 0) fail("speed_limit", "must be positive");
        if (max_steps <= 0) fail("max_steps", "must be positive");
        if (obs_h <= 0 || obs_w <= 0) fail("obs_h/obs_w", "must be positive");
        if (attenuation < 0) fail("attenuation", "must be nonnegative");
        if (!inside_strict(start_x, start_y)) fail("start_x/start_y", "start must be strictly inside free space");
    }

    bool in_stem(double x, double y) const {
        return x >= stem_x0 && x <= stem_x1 && y >= stem_y0 && y <= stem_y1;
    }
    bool in_bar(double x, double y) const {
        return x >= bar_x0 && x <= bar_x1 && y >= bar_y0 && y <= bar_y1;
    }
    bool in_free(double x, double y) const { return in_stem(x, y) || in_bar(x, y); }
    bool inside_strict(double x, double y) const {
        const double m = 1e-6;
        return (x > stem_x0 + m && x < stem_x1 - m && y > stem_y0 + m && y < stem_y1 - m) ||
               (x > bar_x0 + m && x < bar_x1 - m && y > bar_y0 + m && y < bar_y1 - m);
    }

    Exit exit_at(double x, double y) const {
        if (!in_bar(x, y)) return Exit::none;
        if (x <= bar_x0 + exit_width) return Exit::left;
        if (x >= bar_x1 - exit_width) return Exit::right;
        return Exit::none;
    }

    static MazeConfig from_kv(const KvFile& kv, const std::string& prefix = "maze.") {
        MazeConfig c;
        auto n = [&](const char* k, double d) { return kv.get_num(prefix + k, d); };
        c.stem_x0 = n("stem_x0", c.stem_x0);
        c.stem_x1 = n("stem_x1", c.stem_x1);
        c.stem_y0 = n("stem_y0", c.stem_y0);
        c.stem_y1 = n("stem_y1", c.stem_y1);
        c.bar_x0 = n("bar_x0", c.bar_x0);
        c.bar_x1 = n("bar_x1", c.bar_x1);
        c.bar_y0 = n("bar_y0", c.bar_y0);
        c.bar_y1 = n("bar_y1", c.bar_y1);
        c.exit_width = n("exit_width", c.exit_width);
        c.start_x = n("start_x", c.start_x);
        c.start_y = n("start_y", c.start_y);
        c.speed_limit = n("speed_limit", c.speed_limit);
        c.max_steps = static_cast<int>(kv.get_int(prefix + "max_steps", c.max_steps));
        c.obs_h = static_cast<int>(kv.get_int(prefix + "obs_h", c.obs_h));
        c.obs_w = static_cast<int>(kv.get_int(prefix + "obs_w", c.obs_w));
        c.attenuation = n("attenuation", c.attenuation);
        auto color = [&](const char* k, Rgb d) {
            return Rgb{static_cast<float>(n((std::string(k) + "_r").c_str(), d.r)),
                       static_cast<float>(n((std::string(k) + "_g").c_str(), d.g)),
                       static_cast<float>(n((std::string(k) + "_b").c_str(), d.b))};
        };
        c.left_color = color("left_color", c.left_color);
        c.right_color = color("right_color", c.right_color);
        c.stem_color = color("stem_color", c.stem_color);
        c.reward_exit = n("reward_exit", c.reward_exit);
        c.reward_wall = n("reward_wall", c.reward_wall);
        c.validate();
        return c;
    }
};

namespace maze_detail {

struct Segment {
    bool vertical;     // vertical: x=c, y in [a,b]; horizontal: y=c, x in [a,b]
    double c, a, b;
    Rgb color;
};

inline std::vector<Segment> wall_segments(const MazeConfig& m) {
    double midx = 0.5 * (m.bar_x0 + m.bar_x1);
    std::vector<Segment> s;
    // stem
    s.push_back({true, m.stem_x0, m.stem_y0, m.stem_y1, m.stem_color});
    s.push_back({true, m.stem_x1, m.stem_y0, m.stem_y1, m.stem_color});
    s.push_back({false, m.stem_y0, m.stem_x0, m.stem_x1, m.stem_color});
    // bar bottom on both sides of the stem opening
    s.push_back({false, m.bar_y0, m.bar_x0, m.stem_x0, m.left_color});
    s.push_back({false, m.bar_y0, m.stem_x1, m.bar_x1, m.right_color});
    // bar top, split by arm
    s.push_back({false, m.bar_y1, m.bar_x0, midx, m.left_color});
    s.push_back({false, m.bar_y1, midx, m.bar_x1, m.right_color});
    // bar ends
    s.push_back({true, m.bar_x0, m.bar_y0, m.bar_y1, m.left_color});
    s.push_back({true, m.bar_x1, m.bar_y0, m.bar_y1, m.right_color});
    return s;
}

// Nearest wall hit along (px,py) + t*(dx,dy), t > 0.
inline bool ray_hit(const std::vector<Segment>& segs, double px, double py, double dx, double dy, double& t_out,
                    Rgb& color_out) {
    double best = 1e30;
    const Segment* hit = nullptr;
    for (const Segment& s : segs) {
        double t, u;
        if (s.vertical) {
            if (std::abs(dx) < 1e-12) continue;
            t = (s.c - px) / dx;
            u = py + t * dy;
        } else {
            if (std::abs(dy) < 1e-12) continue;
            t = (s.c - py) / dy;
            u = px + t * dx;
        }
        // t == 0 counts: the agent may stand exactly on a wall after a clip.
        if (t >= 0 && t < best && u >= s.a - 1e-9 && u <= s.b + 1e-9) {
            best = t;
            hit = &s;
        }
    }
    if (!hit) return false;
    t_out = best;
    color_out = hit->color;
    return true;
}

}  // namespace maze_detail

// Cylindrical panorama: obs_w rays at uniform angles over [0, 2pi), each
// column is the hit wall's color scaled by 1/(1 + attenuation*distance);
// all obs_h rows of a column are identical.
inline Obs render_panorama(double px, double py, const MazeConfig& m) {
    if (!m.in_free(px, py))
        throw std::runtime_error("render_panorama: position (" + std::to_string(px) + "," + std::to_string(py) +
                                 ") is inside a wall");
    auto segs = maze_detail::wall_segments(m);
    Obs obs({m.obs_h, m.obs_w, 3});
    for (int k = 0; k < m.obs_w; ++k) {
        double ang = 2.0 * M_PI * k / m.obs_w;
        double t;
        Rgb c;
        float col[3] = {0, 0, 0};
        if (maze_detail::ray_hit(segs, px, py, std::cos(ang), std::sin(ang), t, c)) {
            float att = static_cast<float>(1.0 / (1.0 + m.attenuation * t));
            col[0] = c.r * att;
            col[1] = c.g * att;
            col[2] = c.b * att;
        }
        for (int row = 0; row < m.obs_h; ++row)
            for (int ch = 0; ch < 3; ++ch) obs[(static_cast<long>(row) * m.obs_w + k) * 3 + ch] = col[ch];
    }
    return obs;
}

struct StepResult {
    Obs obs;
    double reward = 0;
    bool done = false;
    bool hit_wall = false;
    Exit exited = Exit::none;
};

class TMazeEnv {
  public:
    explicit TMazeEnv(MazeConfig cfg = MazeConfig()) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const MazeConfig& config() const { return cfg_; }
    double x() const { return x_; }
    double y() const { return y_; }
    int step_count() const { return steps_; }
    bool done() const { return done_; }

    Obs reset(uint64_t seed = 0) {
        seed_ = seed;
        x_ = cfg_.start_x;
        y_ = cfg_.start_y;
        steps_ = 0;
        done_ = false;
        return render_panorama(x_, y_, cfg_);
    }

    // action components in [-1,1]; displacement = action * speed_limit,
    // clipped axis-by-axis against the walls (x first, then y).
    StepResult step(double ax, double ay) {
        if (done_) throw std::logic_error("step: episode is done, reset first");
        ax = std::clamp(ax, -1.0, 1.0);
        ay = std::clamp(ay, -1.0, 1.0);
        bool hit = false;
        double nx = x_ + ax * cfg_.speed_limit;
        hit |= clip_axis_x(nx, y_);
        double ny = y_ + ay * cfg_.speed_limit;
        hit |= clip_axis_y(nx, ny);
        x_ = nx;
        y_ = ny;
        ++steps_;

        StepResult r;
        r.hit_wall = hit;
        r.exited = cfg_.exit_at(x_, y_);
        if (hit) r.reward += cfg_.reward_wall;
        if (r.exited != Exit::none) {
            r.reward += cfg_.reward_exit;
            done_ = true;
        }
        if (steps_ >= cfg_.max_steps) done_ = true;
        r.done = done_;
        r.obs = render_panorama(x_, y_, cfg_);
        return r;
    }

  private:
    // x movement at fixed y: clamp into the free interval; true if clamped.
    // Clamping lands exactly on the wall line, so a blocked axis leaves the
    // coordinate of an agent already at the wall unchanged.
    bool clip_axis_x(double& nx, double y) const {
        double lo, hi;
        if (y >= cfg_.bar_y0) {
            lo = cfg_.bar_x0;
            hi = cfg_.bar_x1;
        } else {
            lo = cfg_.stem_x0;
            hi = cfg_.stem_x1;
        }
        if (nx < lo) { nx = lo; return true; }
        if (nx > hi) { nx = hi; return true; }
        return false;
    }

    bool clip_axis_y(double x, double& ny) const {
        double lo, hi;
        if (x >= cfg_.stem_x0 && x <= cfg_.stem_x1) {
            lo = cfg_.stem_y0;
            hi = cfg_.bar_y1;
        } else {
            lo = cfg_.bar_y0;
            hi = cfg_.bar_y1;
        }
        if (ny < lo) { ny = lo; return true; }
        if (ny > hi) { ny = hi; return true; }
        return false;
    }

    MazeConfig cfg_;
    double x_ = 0, y_ = 0;
    uint64_t seed_ = 0;
    int steps_ = 0;
    bool done_ = false;
};

}  // namespace mazemind
