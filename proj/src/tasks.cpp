#include "btmg/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "btmg/lhs.hpp"
#include "btmg/rng.hpp"

namespace btmg {

namespace {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }
Vec2 left_normal(Vec2 u) { return {-u.y, u.x}; }

}  // namespace

std::string profile_name(Profile p) { return p == Profile::sim ? "sim" : "real_profile"; }

Profile parse_profile(const std::string& name) {
    if (name == "sim") return Profile::sim;
    if (name == "real_profile") return Profile::real_profile;
    throw std::invalid_argument("unknown profile '" + name + "' (expected 'sim' or 'real_profile')");
}

FeasibilityThresholds feasibility_threshold(TaskId task, Profile environment) {
    FeasibilityThresholds t;
    if (task == TaskId::push) {
        t.pos_tol = environment == Profile::real_profile ? 0.015 : 0.011;
        t.ori_tol = std::numbers::pi / 6.0;
    } else {
        t.clearance_min = 0.04;
    }
    return t;
}

Bounds ObstacleConstants::variation_bounds() const {
    Eigen::VectorXd lo(3), hi(3);
    lo << height_min, width_min, center_min;
    hi << height_max, width_max, center_max;
    return Bounds(lo, hi);
}

Bounds ObstacleConstants::policy_bounds() const {
    Eigen::VectorXd lo(6), hi(6);
    lo << wp_y_min, wp_z_min, wp_y_min, wp_z_min, switch_min, switch_min;
    hi << wp_y_max, wp_z_max, wp_y_max, wp_z_max, switch_max, switch_max;
    return Bounds(lo, hi);
}

Bounds PushConstants::variation_bounds() const {
    Eigen::VectorXd lo(4), hi(4);
    lo << circle_cx - circle_r, circle_cy - circle_r, std::min({tri_ax, tri_bx, tri_cx}),
        std::min({tri_ay, tri_by, tri_cy});
    hi << circle_cx + circle_r, circle_cy + circle_r, std::max({tri_ax, tri_bx, tri_cx}),
        std::max({tri_ay, tri_by, tri_cy});
    return Bounds(lo, hi);
}

Bounds PushConstants::policy_bounds() const {
    Eigen::VectorXd lo(4), hi(4);
    lo << -os_lim, -os_lim, -og_lim, -og_lim;
    hi << os_lim, os_lim, og_lim, og_lim;
    return Bounds(lo, hi);
}

bool PushConstants::goal_in_triangle(double gx, double gy) const {
    const Vec2 p{gx, gy};
    const Vec2 a{tri_ax, tri_ay}, b{tri_bx, tri_by}, c{tri_cx, tri_cy};
    const double d1 = cross(b - a, p - a);
    const double d2 = cross(c - b, p - b);
    const double d3 = cross(a - c, p - c);
    const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
    const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
    return !(has_neg && has_pos);
}

EvalRecord obstacle_evaluate(const ObstacleConstants& c, const TaskVariation& v,
                             const PolicyParams& theta) {
    if (v.task != TaskId::obstacle || v.v.size() != 3 || theta.theta.size() != 6)
        throw std::invalid_argument("obstacle_evaluate: malformed variation or policy");
    const double height = v.v[0], width = v.v[1], center_y = v.v[2];
    const double rect_ylo = center_y - 0.5 * width;
    const double rect_yhi = center_y + 0.5 * width;

    auto clearance = [&](Vec2 p) {
        const double dy = std::max({rect_ylo - p.x, 0.0, p.x - rect_yhi});
        const double dz = std::max({0.0 - p.y, 0.0, p.y - height});
        return std::hypot(dy, dz);
    };

    const Vec2 start{c.start_y, c.start_z};
    const Vec2 goal{c.goal_y, c.goal_z};
    const Vec2 targets[3] = {{theta.theta[0], theta.theta[1]}, {theta.theta[2], theta.theta[3]}, goal};
    const double radii[2] = {theta.theta[4], theta.theta[5]};

    Vec2 pos = start;
    double t = 0.0;
    int k = 0;
    bool success = false;
    double min_clear = clearance(pos);
    double penalty = 0.0;
    const double step = c.speed * c.dt;
    while (true) {
        while (k < 2 && norm(pos - targets[k]) <= radii[k]) ++k;
        if (norm(pos - goal) <= c.success_radius) {
            success = true;
            break;
        }
        if (t >= c.t_max - 1e-12) {
            t = c.t_max;
            break;
        }
        const Vec2 to_target = targets[k] - pos;
        const double dist = norm(to_target);
        if (dist > 1e-15) pos = pos + (step / dist) * to_target;
        t += c.dt;
        const double clear = clearance(pos);
        min_clear = std::min(min_clear, clear);
        const double depth = (c.safe_dist - clear) / c.safe_dist;
        if (depth > 0.0) penalty += c.dt * depth * depth;
    }

    const double d_init = norm(goal - start);
    const double d_final = norm(pos - goal);
    const double frac = std::clamp(1.0 - d_final / d_init, 0.0, 1.0);
    const double reward = c.reward_success * (success ? 1.0 : 0.0) + c.reward_goal * frac +
                          (success ? c.reward_time * (c.t_max - t) / c.t_max : 0.0) -
                          c.penalty_obstacle * penalty;

    EvalRecord rec;
    rec.variation = v;
    rec.params = theta;
    rec.reward = reward;
    rec.feasible = success && min_clear >= feasibility_threshold(TaskId::obstacle, Profile::sim).clearance_min;
    rec.metrics = {t, min_clear, success ? 1.0 : 0.0};
    return rec;
}

EvalRecord push_evaluate(const PushConstants& c, const TaskVariation& v, const PolicyParams& theta,
                         Profile profile) {
    if (v.task != TaskId::push || v.v.size() != 4 || theta.theta.size() != 4)
        throw std::invalid_argument("push_evaluate: malformed variation or policy");
    const Vec2 s{v.v[0], v.v[1]};
    const Vec2 g{v.v[2], v.v[3]};
    const Vec2 o_s{theta.theta[0], theta.theta[1]};
    const Vec2 o_g{theta.theta[2], theta.theta[3]};

    // Object footprint in world coordinates: centroid pinned at s, zero yaw.
    const Vec2 centroid{c.centroid_x, c.centroid_y};
    const Vec2 wa = s + (Vec2{c.obj_ax, c.obj_ay} - centroid);
    const Vec2 wb = s + (Vec2{c.obj_bx, c.obj_by} - centroid);
    const Vec2 wc = s + (Vec2{c.obj_cx, c.obj_cy} - centroid);
    const Vec2 com = s + Vec2{c.com_off_x, c.com_off_y};

    const Vec2 u0 = (1.0 / norm(g - s)) * (g - s);
    const Vec2 p_start = s + o_s - c.backoff * u0;
    const Vec2 p_goal = g + o_g;
    const Vec2 d = p_goal - p_start;
    const double d_len = norm(d);
    const Vec2 u = (1.0 / d_len) * d;
    const double delta = dot(left_normal(u), com - p_start);

    auto inside = [&](Vec2 p) {
        const double d1 = cross(wb - wa, p - wa);
        const double d2 = cross(wc - wb, p - wb);
        const double d3 = cross(wa - wc, p - wc);
        const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
        const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
        return !(has_neg && has_pos);
    };

    // First hit of the segment [p_start, p_goal] against the three edges.
    double t_hit = std::numeric_limits<double>::infinity();
    const Vec2 edges[3][2] = {{wa, wb}, {wb, wc}, {wc, wa}};
    for (const auto& e : edges) {
        const Vec2 ev = e[1] - e[0];
        const double denom = cross(d, ev);
        if (denom == 0.0) continue;  // parallel (grazing overlap is measure-zero)
        const Vec2 w = e[0] - p_start;
        const double t_seg = cross(w, ev) / denom;
        const double s_seg = cross(w, d) / denom;
        if (t_seg >= 0.0 && t_seg <= 1.0 && s_seg >= 0.0 && s_seg <= 1.0)
            t_hit = std::min(t_hit, t_seg);
    }

    const bool miss = inside(p_start) || !std::isfinite(t_hit) || std::abs(delta) > c.delta_max;

    double pos_error, ori_error;
    if (miss) {
        pos_error = norm(g - s);
        ori_error = 0.0;
    } else {
        const double d_eff = std::max(0.0, d_len * (1.0 - t_hit));
        const Vec2 centroid_final =
            s + d_eff * u - (c.drift_gain * delta * d_eff) * left_normal(u);
        const double psi_final = -c.rot_gain * delta * d_eff;
        pos_error = norm(centroid_final - g);
        ori_error = std::abs(psi_final);
    }

    const double reward = c.pos_weight * c.base_reward * std::exp(-pos_error / c.pos_scale) +
                          c.base_reward * std::exp(-ori_error / c.ori_scale);
    const FeasibilityThresholds th = feasibility_threshold(TaskId::push, profile);

    EvalRecord rec;
    rec.variation = v;
    rec.params = theta;
    rec.reward = reward;
    rec.feasible = pos_error < th.pos_tol && ori_error < th.ori_tol;
    rec.metrics = {pos_error, ori_error, miss ? 0.0 : 1.0};
    return rec;
}

std::vector<TaskVariation> sample_variations(TaskId task, const ObstacleConstants& oc,
                                             const PushConstants& pc, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_variations: n must be >= 1");
    std::vector<TaskVariation> out;
    out.reserve(static_cast<std::size_t>(n));
    if (task == TaskId::obstacle) {
        for (const Eigen::VectorXd& p : lhs_sample(n, oc.variation_bounds(), seed))
            out.push_back({TaskId::obstacle, p});
        return out;
    }
    // Push: start uniform in the circle (area-uniform polar), goal uniform in
    // the triangle (barycentric folding).
    Rng rng(seed);
    const Vec2 a{pc.tri_ax, pc.tri_ay}, b{pc.tri_bx, pc.tri_by}, cc{pc.tri_cx, pc.tri_cy};
    for (int i = 0; i < n; ++i) {
        const double r = pc.circle_r * std::sqrt(rng.uniform01());
        const double phi = 2.0 * std::numbers::pi * rng.uniform01();
        const Vec2 s{pc.circle_cx + r * std::cos(phi), pc.circle_cy + r * std::sin(phi)};
        double bu = rng.uniform01(), bv = rng.uniform01();
        if (bu + bv > 1.0) {
            bu = 1.0 - bu;
            bv = 1.0 - bv;
        }
        const Vec2 g = a + bu * (b - a) + bv * (cc - a);
        Eigen::VectorXd v(4);
        v << s.x, s.y, g.x, g.y;
        out.push_back({TaskId::push, v});
    }
    return out;
}

Bounds TaskSetup::variation_bounds() const {
    return id == TaskId::obstacle ? obstacle.variation_bounds() : push.variation_bounds();
}

Bounds TaskSetup::policy_bounds() const {
    return id == TaskId::obstacle ? obstacle.policy_bounds() : push.policy_bounds();
}

std::vector<TaskVariation> TaskSetup::sample(int n, std::uint64_t seed) const {
    return sample_variations(id, obstacle, push, n, seed);
}

EvalRecord TaskSetup::evaluate(const TaskVariation& v, const PolicyParams& theta) const {
    return id == TaskId::obstacle ? obstacle_evaluate(obstacle, v, theta)
                                  : push_evaluate(push, v, theta, profile);
}

}  // namespace btmg
