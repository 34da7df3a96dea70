#include <doctest.h>

#include "mazemind/rng.hpp"
#include "mazemind/tmaze.hpp"

#include <cmath>
#include <sstream>

using namespace mazemind;

TEST_CASE("reset puts the agent at the start with a valid panorama") {
    TMazeEnv env;
    Obs o1 = env.reset(7);
    CHECK(env.x() == doctest::Approx(5.0));
    CHECK(env.y() == doctest::Approx(1.0));
    CHECK(o1.shape == Shape{4, 32, 3});
    for (float v : o1.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    Obs o2 = env.reset(7);
    CHECK(o1.data == o2.data);  // bit-exact
    // cylindrical panorama: all rows of a column identical
    for (int k = 0; k < 32; ++k)
        for (int r = 1; r < 4; ++r)
            for (int c = 0; c < 3; ++c) CHECK(o1[(r * 32 + k) * 3 + c] == o1[(0 * 32 + k) * 3 + c]);
}

TEST_CASE("zero action in open space is a no-op step") {
    TMazeEnv env;
    env.reset(0);
    auto r = env.step(0, 0);
    CHECK(r.reward == doctest::Approx(0.0));
    CHECK_FALSE(r.done);
    CHECK_FALSE(r.hit_wall);
    CHECK(env.x() == doctest::Approx(5.0));
    CHECK(env.y() == doctest::Approx(1.0));
}

TEST_CASE("pushing into a wall costs -10 and blocks that component") {
    TMazeEnv env;
    env.reset(0);
    env.step(-1, 0);  // x: 5.0 -> 4.5
    env.step(-1, 0);  // x: 4.5 -> 4.0 (on the wall, no hit yet)
    CHECK(env.x() == doctest::Approx(4.0));
    auto r = env.step(-1, 0.4);  // blocked in x, free in y
    CHECK(r.reward == doctest::Approx(-10.0));
    CHECK(r.hit_wall);
    CHECK(env.x() == doctest::Approx(4.0));   // blocked component unchanged
    CHECK(env.y() == doctest::Approx(1.2));   // slide along the free axis
    CHECK_FALSE(r.done);
    // penalty fires once per step even when both axes clip
    env.reset(0);
    for (int i = 0; i < 40 && !env.done(); ++i) {
        auto rr = env.step(-1, -1);
        CHECK(rr.reward >= -10.0);
    }
}

TEST_CASE("reaching an exit pays 100 and terminates") {
    TMazeEnv env;
    env.reset(0);
    for (int i = 0; i < 12; ++i) env.step(0, 1);  // go up into the bar
    CHECK(env.y() == doctest::Approx(7.0));
    StepResult last;
    int steps = 0;
    while (!env.done()) {
        last = env.step(-1, 0);
        ++steps;
    }
    CHECK(last.exited == Exit::left);
    CHECK(last.reward == doctest::Approx(100.0));
    CHECK(last.done);
    CHECK(steps == 8);  // x: 5.0 -> 1.0 at 0.5/step
    CHECK_THROWS_AS(env.step(0, 0), std::logic_error);
}

TEST_CASE("episodes cap at max_steps") {
    TMazeEnv env;
    env.reset(0);
    int n = 0;
    while (!env.done()) {
        env.step(0, -1);  // grind against the bottom wall
        ++n;
    }
    CHECK(n == 60);
}

TEST_CASE("containment: random action sequences never escape free space") {
    RngStream rng(123);
    MazeConfig cfg;
    TMazeEnv env(cfg);
    for (int ep = 0; ep < 60; ++ep) {
        env.reset(ep);
        double total = 0;
        int n = 0;
        while (!env.done()) {
            auto r = env.step(rng.uniform(-1, 1), rng.uniform(-1, 1));
            total += r.reward;
            ++n;
            CHECK(cfg.in_free(env.x(), env.y()));
        }
        CHECK(n <= cfg.max_steps);
        CHECK(total >= cfg.reward_wall * cfg.max_steps);
        CHECK(total <= cfg.reward_exit);
    }
}

TEST_CASE("determinism: same seed and actions give bit-exact trajectories") {
    RngStream rng(5);
    std::vector<std::pair<double, double>> actions;
    for (int i = 0; i < 60; ++i) actions.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    auto run = [&] {
        TMazeEnv env;
        std::vector<float> trace;
        env.reset(9);
        for (auto [ax, ay] : actions) {
            if (env.done()) break;
            auto r = env.step(ax, ay);
            trace.push_back(static_cast<float>(env.x()));
            trace.push_back(static_cast<float>(env.y()));
            for (float v : r.obs.data) trace.push_back(v);
        }
        return trace;
    };
    CHECK(run() == run());
}

// Independent oracle: march along each ray until free space ends, classify
// the wall crossed by hand, then compare against the renderer.
namespace {
struct OracleCol {
    float r, g, b;
};
OracleCol oracle_column(const MazeConfig& m, double px, double py, double ang) {
    double dx = std::cos(ang), dy = std::sin(ang);
    const double step = 0.002;
    double t = 0;
    double x = px, y = py;
    while (m.in_free(x + dx * step, y + dy * step) && t < 100) {
        x += dx * step;
        y += dy * step;
        t += step;
    }
    // classify the boundary ahead
    double midx = 0.5 * (m.bar_x0 + m.bar_x1);
    Rgb c;
    bool in_bar = y >= m.bar_y0 - 1e-6;
    if (in_bar) {
        if (std::abs(y - m.bar_y1) < 2 * step && dy > 0) c = (x < midx) ? m.left_color : m.right_color;
        else if (std::abs(x - m.bar_x0) < 2 * step && dx < 0) c = m.left_color;
        else if (std::abs(x - m.bar_x1) < 2 * step && dx > 0) c = m.right_color;
        else if (dy < 0) c = (x < m.stem_x0) ? m.left_color : m.right_color;  // bar bottom
        else c = m.stem_color;
    } else {
        c = m.stem_color;  // every stem-interior boundary is stem-colored
    }
    float att = static_cast<float>(1.0 / (1.0 + m.attenuation * t));
    return {c.r * att, c.g * att, c.b * att};
}
}  // namespace

TEST_CASE("panorama near the left exit is red-dominant and matches the march oracle") {
    MazeConfig m;
    Obs img = render_panorama(1.5, 7.0, m);
    double red = 0, blue = 0;
    for (int k = 0; k < m.obs_w; ++k) {
        red += img[(0 * m.obs_w + k) * 3 + 0];
        blue += img[(0 * m.obs_w + k) * 3 + 2];
    }
    CHECK(red / m.obs_w > blue / m.obs_w);

    double o_red = 0, o_blue = 0, diff = 0;
    int used = 0;
    for (int k = 0; k < m.obs_w; ++k) {
        double ang = 2.0 * M_PI * k / m.obs_w;
        auto oc = oracle_column(m, 1.5, 7.0, ang);
        o_red += oc.r;
        o_blue += oc.b;
        // skip rays nearly parallel to a wall they graze (march ambiguity)
        double fx = std::abs(std::cos(ang)), fy = std::abs(std::sin(ang));
        if (fx < 0.05 || fy < 0.05) continue;
        diff += std::abs(oc.r - img[k * 3]) + std::abs(oc.g - img[k * 3 + 1]) + std::abs(oc.b - img[k * 3 + 2]);
        ++used;
    }
    CHECK(o_red > o_blue);
    CHECK(diff / used < 0.02);
}

TEST_CASE("render rejects positions inside walls") {
    MazeConfig m;
    CHECK_THROWS_AS(render_panorama(2.0, 2.0, m), std::runtime_error);
    CHECK_THROWS_AS(render_panorama(-1.0, 7.0, m), std::runtime_error);
}

TEST_CASE("maze config file round-trip and validation") {
    std::istringstream src(
        "# test maze\n"
        "maze.start_x = 5.2\n"
        "maze.obs_w = 16\n"
        "maze.speed_limit = 0.25\n");
    auto kv = KvFile::parse(src);
    MazeConfig m = MazeConfig::from_kv(kv);
    CHECK(m.start_x == doctest::Approx(5.2));
    CHECK(m.obs_w == 16);
    CHECK(m.speed_limit == doctest::Approx(0.25));
    CHECK(m.stem_x0 == doctest::Approx(4.0));  // defaults retained

    std::istringstream bad("maze.speed_limit = -2\n");
    CHECK_THROWS_WITH_AS(MazeConfig::from_kv(KvFile::parse(bad)), doctest::Contains("speed_limit"),
                         std::runtime_error);
    std::istringstream bad2("maze.stem_y1 = 5\n");  // stem no longer meets the bar
    CHECK_THROWS_AS(MazeConfig::from_kv(KvFile::parse(bad2)), std::runtime_error);
}
