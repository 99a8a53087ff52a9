#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "navfield/rng.hpp"
#include "navfield/tensor.hpp"

namespace navfield {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline double wrap_two_pi(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a;
}

struct Rgb {
  double r = 0.0, g = 0.0, b = 0.0;
};

struct SceneConfig {
  int height = 15;
  int width = 15;
  double wall_density = 0.35;  // interior wall fraction kept after braiding
};

// Immutable occupancy grid with colored wall faces. Cell size is one world
// unit; world units are meters. All free cells form a single connected
// component and the boundary ring is wall.
class Scene {
 public:
  static Scene generate(std::uint64_t seed, const SceneConfig& cfg = {});
  static Scene from_grid(std::uint64_t seed, std::vector<std::string> rows);

  int height() const { return h_; }
  int width() const { return w_; }
  std::uint64_t seed() const { return seed_; }
  bool wall(int cx, int cy) const;  // out of range counts as wall
  bool free_at(double x, double y) const;
  double far_clip() const;  // grid diagonal
  int free_cell_count() const;
  // face: 0 = -x side, 1 = +x side, 2 = -y side, 3 = +y side
  Rgb wall_color(int cx, int cy, int face) const;

  void save(const std::string& path) const;
  static Scene load(const std::string& path);
  std::string to_text() const;

 private:
  Scene() = default;
  int h_ = 0, w_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint8_t> walls_;  // row-major [cy][cx]
};

struct AgentPose {
  double x = 0.0, y = 0.0;
  double theta = 0.0;  // radians, kept in [0, 2*pi)
};

struct ObservationStrip {
  int width = 0;
  double fov = 0.0;
  std::vector<double> rgb;    // W*3, row-major per ray
  std::vector<double> depth;  // W
};

enum class Action : int { Forward = 0, TurnLeft = 1, TurnRight = 2, Stop = 3 };
constexpr int kNumActions = 4;
const char* action_name(Action a);

constexpr double kForwardStep = 0.25;
constexpr double kTurnStep = M_PI / 6.0;
constexpr double kAgentRadius = 0.1;
constexpr double kSuccessRadius = 0.8;

struct RayHit {
  double distance = 0.0;
  Rgb color;
  bool hit = false;
};

// Exact first intersection by DDA grid traversal; clamps to far clip with
// black background when nothing is hit (cannot happen inside the boundary).
RayHit cast_ray(const Scene& scene, Vec2 origin, double angle);

// Ray angles for a strip: column 0 is the left edge of the view, pixel-center
// convention, so the middle column of an odd-width strip is the heading.
std::vector<double> strip_angles(double theta, int w, double fov);

ObservationStrip render_observation(const Scene& scene, const AgentPose& pose,
                                    int w, double fov);

struct StepResult {
  AgentPose pose;
  bool collided = false;
};

StepResult step_agent(const Scene& scene, const AgentPose& pose, Action action);
bool forward_blocked(const Scene& scene, const AgentPose& pose);

// Shortest-path distances from a fixed target over the 8-connected free-cell
// graph (diagonal cost sqrt(2), no corner cutting). Point distances add the
// straight-line offsets of the endpoints inside their cells.
class DistanceField {
 public:
  DistanceField(const Scene& scene, Vec2 target);
  double distance(Vec2 from) const;
  // Center of the next cell toward the target, or the target itself when
  // already in its cell. nullopt if unreachable.
  std::optional<Vec2> next_waypoint(Vec2 from) const;
  bool reachable(Vec2 from) const;

 private:
  const Scene* scene_;
  Vec2 target_;
  std::vector<double> cell_dist_;
  int w_ = 0, h_ = 0;
};

double geodesic_distance(const Scene& scene, Vec2 a, Vec2 b);

Action expert_action(const Scene& scene, const AgentPose& pose, Vec2 target);
Action expert_action(const Scene& scene, const AgentPose& pose, Vec2 target,
                     const DistanceField& field);

enum class Tier { Easy, Medium, Hard };
const char* tier_name(Tier t);
// Geodesic start-goal bands in meters: Easy 1.5-3, Medium 3-5, Hard 5-10.
std::pair<double, double> tier_band(Tier t);

struct Episode {
  AgentPose start;
  Vec2 target;
  ObservationStrip target_image;
  double shortest_path = 0.0;
};

Episode sample_episode(const Scene& scene, Tier tier, Rng& rng, int strip_w,
                       double fov);

}  // namespace navfield
