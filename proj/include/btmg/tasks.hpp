#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "btmg/bounds.hpp"
#include "btmg/types.hpp"

namespace btmg {

// Evaluation profile: real_profile only relaxes the push position tolerance
// (the physics stays the analytic surrogate in both).
enum class Profile { sim, real_profile };

std::string profile_name(Profile p);
Profile parse_profile(const std::string& name);

struct FeasibilityThresholds {
    double pos_tol = 0.0;        // push: final position error bound (m)
    double ori_tol = 0.0;        // push: final orientation error bound (rad)
    double clearance_min = 0.0;  // obstacle: minimum clearance bound (m)
};

FeasibilityThresholds feasibility_threshold(TaskId task, Profile environment);

// Obstacle avoidance: a point end effector travels through up to two
// intermediate goals toward a fixed goal while a wall-like rectangle of
// varying size sits in the way.  All constants are artifact decisions unless
// a range is listed in the variation bounds.
struct ObstacleConstants {
    // variation ranges (height, width, center_y of the rectangle)
    double height_min = 0.049, height_max = 0.331;
    double width_min = 0.09, width_max = 0.331;
    double center_min = 0.274, center_max = 0.311;

    // policy ranges: two waypoints (y,z) plus two switching radii
    double wp_y_min = 0.0, wp_y_max = 0.6;
    double wp_z_min = 0.0, wp_z_max = 0.5;
    double switch_min = 0.01, switch_max = 0.3;

    double start_y = 0.05, start_z = 0.05;
    double goal_y = 0.55, goal_z = 0.05;
    double speed = 0.1;           // m/s
    double dt = 0.01;             // s
    double t_max = 12.0;          // s
    double success_radius = 0.005;  // m
    double safe_dist = 0.05;      // penalty onset distance (m)
    double reward_success = 1000.0;
    double reward_goal = 1000.0;
    double reward_time = 4000.0;
    double penalty_obstacle = 2000.0;

    Bounds variation_bounds() const;
    Bounds policy_bounds() const;
};

// Planar push: a quasi-static surrogate of pushing a triangular object with
// offset centre of mass from a start pose to a goal pose.
struct PushConstants {
    // start circle and goal triangle of the variation space
    double circle_cx = -0.15, circle_cy = 0.0, circle_r = 0.08;
    double tri_ax = 0.10, tri_ay = -0.15;
    double tri_bx = 0.10, tri_by = 0.15;
    double tri_cx = 0.30, tri_cy = 0.0;

    // policy ranges: start offset o_s and goal offset o_g
    double os_lim = 0.08, og_lim = 0.20;

    // object footprint in the object frame (right triangle), its centroid,
    // and the centre-of-mass offset from the centroid
    double obj_ax = 0.0, obj_ay = 0.0;
    double obj_bx = 0.3, obj_by = 0.0;
    double obj_cx = 0.0, obj_cy = 0.15;
    double centroid_x = 0.1, centroid_y = 0.05;
    double com_off_x = 0.05, com_off_y = 0.02;

    double backoff = 0.25;       // push approach distance behind the start (m)
    double delta_max = 0.05;     // |lateral COM offset| beyond which the push misses (m)
    double drift_gain = 2.0;     // lateral drift per (delta * distance), 1/m
    double rot_gain = 40.0;      // rotation per (delta * distance), rad/m^2
    double base_reward = 100.0;
    double pos_weight = 10.0;    // position term weighted 10x
    double pos_scale = 0.02;     // m
    double ori_scale = 0.2;      // rad

    Bounds variation_bounds() const;  // box enclosing (s_x, s_y, g_x, g_y)
    Bounds policy_bounds() const;

    bool goal_in_triangle(double gx, double gy) const;
};

EvalRecord obstacle_evaluate(const ObstacleConstants& c, const TaskVariation& v,
                             const PolicyParams& theta);
EvalRecord push_evaluate(const PushConstants& c, const TaskVariation& v, const PolicyParams& theta,
                         Profile profile = Profile::sim);

std::vector<TaskVariation> sample_variations(TaskId task, const ObstacleConstants& oc,
                                             const PushConstants& pc, int n, std::uint64_t seed);

// One task instance bundling id, profile, and the constants tables.
struct TaskSetup {
    TaskId id = TaskId::obstacle;
    Profile profile = Profile::sim;
    ObstacleConstants obstacle;
    PushConstants push;

    Bounds variation_bounds() const;
    Bounds policy_bounds() const;
    std::vector<TaskVariation> sample(int n, std::uint64_t seed) const;
    EvalRecord evaluate(const TaskVariation& v, const PolicyParams& theta) const;
};

}  // namespace btmg
