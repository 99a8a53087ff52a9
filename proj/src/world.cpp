#include "navfield/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

namespace navfield {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 8-color palette for wall faces, keyed by (seed, cell, face).
constexpr std::array<Rgb, 8> kPalette = {{
    {0.90, 0.10, 0.10},
    {0.10, 0.75, 0.20},
    {0.15, 0.25, 0.95},
    {0.95, 0.85, 0.10},
    {0.85, 0.15, 0.85},
    {0.10, 0.85, 0.85},
    {0.95, 0.55, 0.10},
    {0.90, 0.90, 0.90},
}};

}  // namespace

const char* action_name(Action a) {
  switch (a) {
    case Action::Forward: return "forward";
    case Action::TurnLeft: return "turn_left";
    case Action::TurnRight: return "turn_right";
    case Action::Stop: return "stop";
  }
  return "?";
}

bool Scene::wall(int cx, int cy) const {
  if (cx < 0 || cy < 0 || cx >= w_ || cy >= h_) return true;
  return walls_[static_cast<std::size_t>(cy) * w_ + cx] != 0;
}

bool Scene::free_at(double x, double y) const {
  return !wall(static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y)));
}

double Scene::far_clip() const { return std::hypot(w_, h_); }

int Scene::free_cell_count() const {
  int n = 0;
  for (auto c : walls_) n += (c == 0);
  return n;
}

Rgb Scene::wall_color(int cx, int cy, int face) const {
  std::uint64_t h = hash_combine(seed_, static_cast<std::uint64_t>(cx));
  h = hash_combine(h, static_cast<std::uint64_t>(cy));
  h = hash_combine(h, static_cast<std::uint64_t>(face));
  return kPalette[h % kPalette.size()];
}

namespace {

bool connected(const std::vector<std::uint8_t>& walls, int w, int h) {
  int start = -1, free_count = 0;
  for (int i = 0; i < w * h; ++i)
    if (!walls[i]) {
      if (start < 0) start = i;
      ++free_count;
    }
  if (free_count == 0) return false;
  std::vector<std::uint8_t> seen(walls.size(), 0);
  std::queue<int> q;
  q.push(start);
  seen[start] = 1;
  int reached = 0;
  while (!q.empty()) {
    const int cur = q.front();
    q.pop();
    ++reached;
    const int cx = cur % w, cy = cur / w;
    const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nx = cx + dx[k], ny = cy + dy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const int ni = ny * w + nx;
      if (!walls[ni] && !seen[ni]) {
        seen[ni] = 1;
        q.push(ni);
      }
    }
  }
  return reached == free_count;
}

std::vector<std::uint8_t> carve_maze(int w, int h, double density, Rng& rng) {
  std::vector<std::uint8_t> walls(static_cast<std::size_t>(w) * h, 1);
  auto at = [&](int x, int y) -> std::uint8_t& { return walls[y * w + x]; };
  // iterative backtracker over the odd lattice
  std::vector<std::pair<int, int>> stack{{1, 1}};
  at(1, 1) = 0;
  while (!stack.empty()) {
    auto [cx, cy] = stack.back();
    std::array<std::pair<int, int>, 4> dirs = {{{2, 0}, {-2, 0}, {0, 2}, {0, -2}}};
    for (int i = 3; i > 0; --i)
      std::swap(dirs[i], dirs[rng.uniform_int(0, i)]);
    bool moved = false;
    for (auto [dx, dy] : dirs) {
      const int nx = cx + dx, ny = cy + dy;
      if (nx < 1 || ny < 1 || nx >= w - 1 || ny >= h - 1) continue;
      if (at(nx, ny)) {
        at(nx, ny) = 0;
        at(cx + dx / 2, cy + dy / 2) = 0;
        stack.emplace_back(nx, ny);
        moved = true;
        break;
      }
    }
    if (!moved) stack.pop_back();
  }
  // braid: knock down interior walls next to free space until the interior
  // wall fraction drops to the requested density
  const int interior = (w - 2) * (h - 2);
  auto wall_fraction = [&]() {
    int n = 0;
    for (int y = 1; y < h - 1; ++y)
      for (int x = 1; x < w - 1; ++x) n += at(x, y);
    return static_cast<double>(n) / interior;
  };
  for (int attempt = 0; attempt < 20 * w * h; ++attempt) {
    if (wall_fraction() <= density) break;
    const int x = static_cast<int>(rng.uniform_int(1, w - 2));
    const int y = static_cast<int>(rng.uniform_int(1, h - 2));
    if (!at(x, y)) continue;
    const bool horiz = !at(x - 1, y) && !at(x + 1, y);
    const bool vert = !at(x, y - 1) && !at(x, y + 1);
    if (horiz || vert) at(x, y) = 0;
  }
  return walls;
}

}  // namespace

Scene Scene::generate(std::uint64_t seed, const SceneConfig& cfg) {
  if (cfg.width < 8 || cfg.height < 8)
    throw std::runtime_error("scene generation requires a grid of at least 8x8");
  for (int retry = 0; retry < 16; ++retry) {
    Rng rng(hash_combine(seed, static_cast<std::uint64_t>(retry)));
    auto walls = carve_maze(cfg.width, cfg.height, cfg.wall_density, rng);
    if (!connected(walls, cfg.width, cfg.height)) continue;
    Scene s;
    s.w_ = cfg.width;
    s.h_ = cfg.height;
    s.seed_ = seed;
    s.walls_ = std::move(walls);
    return s;
  }
  throw std::runtime_error("scene generation failed: no connected layout found");
}

Scene Scene::from_grid(std::uint64_t seed, std::vector<std::string> rows) {
  Scene s;
  s.h_ = static_cast<int>(rows.size());
  s.w_ = static_cast<int>(rows.empty() ? 0 : rows[0].size());
  s.seed_ = seed;
  s.walls_.assign(static_cast<std::size_t>(s.h_) * s.w_, 1);
  for (int y = 0; y < s.h_; ++y) {
    if (static_cast<int>(rows[y].size()) != s.w_)
      throw std::runtime_error("scene rows have inconsistent widths");
    for (int x = 0; x < s.w_; ++x)
      s.walls_[static_cast<std::size_t>(y) * s.w_ + x] = rows[y][x] == '#' ? 1 : 0;
  }
  if (!connected(s.walls_, s.w_, s.h_))
    throw std::runtime_error("scene grid is not connected");
  return s;
}

std::string Scene::to_text() const {
  std::ostringstream os;
  os << h_ << " " << w_ << " " << seed_ << "\n";
  for (int y = 0; y < h_; ++y) {
    for (int x = 0; x < w_; ++x) os << (wall(x, y) ? '#' : '.');
    os << "\n";
  }
  return os.str();
}

void Scene::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write scene file " + path);
  os << to_text();
}

Scene Scene::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read scene file " + path);
  int h, w;
  std::uint64_t seed;
  if (!(is >> h >> w >> seed))
    throw std::runtime_error("malformed scene header in " + path);
  std::vector<std::string> rows;
  std::string line;
  std::getline(is, line);
  for (int y = 0; y < h; ++y) {
    if (!std::getline(is, line))
      throw std::runtime_error("scene file truncated: " + path);
    rows.push_back(line.substr(0, static_cast<std::size_t>(w)));
  }
  return from_grid(seed, std::move(rows));
}

RayHit cast_ray(const Scene& scene, Vec2 origin, double angle) {
  if (!scene.free_at(origin.x, origin.y))
    throw std::runtime_error("cast_ray: origin inside a wall cell");
  const double dx = std::cos(angle), dy = std::sin(angle);
  int map_x = static_cast<int>(std::floor(origin.x));
  int map_y = static_cast<int>(std::floor(origin.y));
  const double delta_x = dx == 0.0 ? kInf : std::fabs(1.0 / dx);
  const double delta_y = dy == 0.0 ? kInf : std::fabs(1.0 / dy);
  const int step_x = dx < 0 ? -1 : 1;
  const int step_y = dy < 0 ? -1 : 1;
  double side_x = dx < 0 ? (origin.x - map_x) * delta_x
                         : (map_x + 1.0 - origin.x) * delta_x;
  double side_y = dy < 0 ? (origin.y - map_y) * delta_y
                         : (map_y + 1.0 - origin.y) * delta_y;
  const double far = scene.far_clip();
  RayHit out;
  while (true) {
    int side;
    if (side_x <= side_y) {
      map_x += step_x;
      side = 0;
    } else {
      map_y += step_y;
      side = 1;
    }
    const double dist = side == 0 ? side_x : side_y;
    if (dist > far) {
      out.distance = far;
      out.color = {0.0, 0.0, 0.0};
      out.hit = false;
      return out;
    }
    if (scene.wall(map_x, map_y)) {
      out.distance = dist;
      const int face = side == 0 ? (step_x > 0 ? 0 : 1) : (step_y > 0 ? 2 : 3);
      out.color = scene.wall_color(map_x, map_y, face);
      out.hit = true;
      return out;
    }
    if (side == 0)
      side_x += delta_x;
    else
      side_y += delta_y;
  }
}

std::vector<double> strip_angles(double theta, int w, double fov) {
  std::vector<double> angles(static_cast<std::size_t>(w));
  for (int i = 0; i < w; ++i)
    angles[static_cast<std::size_t>(i)] =
        theta + fov / 2.0 - fov * (i + 0.5) / w;
  return angles;
}

ObservationStrip render_observation(const Scene& scene, const AgentPose& pose,
                                    int w, double fov) {
  if (w < 1) throw std::runtime_error("observation width must be >= 1");
  ObservationStrip strip;
  strip.width = w;
  strip.fov = fov;
  strip.rgb.resize(static_cast<std::size_t>(w) * 3);
  strip.depth.resize(static_cast<std::size_t>(w));
  const auto angles = strip_angles(pose.theta, w, fov);
  for (int i = 0; i < w; ++i) {
    const RayHit hit = cast_ray(scene, {pose.x, pose.y}, angles[i]);
    strip.rgb[static_cast<std::size_t>(i) * 3 + 0] = hit.color.r;
    strip.rgb[static_cast<std::size_t>(i) * 3 + 1] = hit.color.g;
    strip.rgb[static_cast<std::size_t>(i) * 3 + 2] = hit.color.b;
    strip.depth[static_cast<std::size_t>(i)] = hit.distance;
  }
  return strip;
}

namespace {

bool disc_free(const Scene& scene, double x, double y, double r) {
  const int x0 = static_cast<int>(std::floor(x - r));
  const int x1 = static_cast<int>(std::floor(x + r));
  const int y0 = static_cast<int>(std::floor(y - r));
  const int y1 = static_cast<int>(std::floor(y + r));
  for (int cy = y0; cy <= y1; ++cy)
    for (int cx = x0; cx <= x1; ++cx) {
      if (!scene.wall(cx, cy)) continue;
      const double px = std::clamp(x, static_cast<double>(cx), cx + 1.0);
      const double py = std::clamp(y, static_cast<double>(cy), cy + 1.0);
      const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
      if (d2 < r * r) return false;
    }
  return true;
}

}  // namespace

bool forward_blocked(const Scene& scene, const AgentPose& pose) {
  const double dx = std::cos(pose.theta), dy = std::sin(pose.theta);
  for (int i = 1; i <= 5; ++i) {
    const double t = kForwardStep * i / 5.0;
    if (!disc_free(scene, pose.x + dx * t, pose.y + dy * t, kAgentRadius))
      return true;
  }
  return false;
}

StepResult step_agent(const Scene& scene, const AgentPose& pose, Action action) {
  StepResult out{pose, false};
  switch (action) {
    case Action::Forward: {
      if (forward_blocked(scene, pose)) {
        out.collided = true;
      } else {
        out.pose.x += std::cos(pose.theta) * kForwardStep;
        out.pose.y += std::sin(pose.theta) * kForwardStep;
      }
      break;
    }
    case Action::TurnLeft:
      out.pose.theta = wrap_two_pi(pose.theta + kTurnStep);
      break;
    case Action::TurnRight:
      out.pose.theta = wrap_two_pi(pose.theta - kTurnStep);
      break;
    case Action::Stop:
      break;
  }
  return out;
}

DistanceField::DistanceField(const Scene& scene, Vec2 target)
    : scene_(&scene), target_(target), w_(scene.width()), h_(scene.height()) {
  if (!scene.free_at(target.x, target.y))
    throw std::runtime_error("distance field target lies inside a wall");
  cell_dist_.assign(static_cast<std::size_t>(w_) * h_, kInf);
  const int tx = static_cast<int>(std::floor(target.x));
  const int ty = static_cast<int>(std::floor(target.y));
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> q;
  cell_dist_[ty * w_ + tx] = 0.0;
  q.emplace(0.0, ty * w_ + tx);
  const int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!q.empty()) {
    auto [d, cur] = q.top();
    q.pop();
    if (d > cell_dist_[cur]) continue;
    const int cx = cur % w_, cy = cur / w_;
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + dx8[k], ny = cy + dy8[k];
      if (scene.wall(nx, ny)) continue;
      // no corner cutting on diagonal moves
      if (k >= 4 && (scene.wall(cx + dx8[k], cy) || scene.wall(cx, cy + dy8[k])))
        continue;
      const double cost = k < 4 ? 1.0 : std::numbers::sqrt2;
      const double nd = d + cost;
      const int ni = ny * w_ + nx;
      if (nd < cell_dist_[ni]) {
        cell_dist_[ni] = nd;
        q.emplace(nd, ni);
      }
    }
  }
}

double DistanceField::distance(Vec2 from) const {
  const int fx = static_cast<int>(std::floor(from.x));
  const int fy = static_cast<int>(std::floor(from.y));
  const int tx = static_cast<int>(std::floor(target_.x));
  const int ty = static_cast<int>(std::floor(target_.y));
  if (fx == tx && fy == ty)
    return std::hypot(from.x - target_.x, from.y - target_.y);
  const double cell = cell_dist_[static_cast<std::size_t>(fy) * w_ + fx];
  if (!std::isfinite(cell)) return kInf;
  const double corr_from = std::hypot(from.x - (fx + 0.5), from.y - (fy + 0.5));
  const double corr_to = std::hypot(target_.x - (tx + 0.5), target_.y - (ty + 0.5));
  return cell + corr_from + corr_to;
}

bool DistanceField::reachable(Vec2 from) const {
  return std::isfinite(distance(from));
}

std::optional<Vec2> DistanceField::next_waypoint(Vec2 from) const {
  const int fx = static_cast<int>(std::floor(from.x));
  const int fy = static_cast<int>(std::floor(from.y));
  const int tx = static_cast<int>(std::floor(target_.x));
  const int ty = static_cast<int>(std::floor(target_.y));
  if (fx == tx && fy == ty) return target_;
  if (!std::isfinite(cell_dist_[static_cast<std::size_t>(fy) * w_ + fx]))
    return std::nullopt;
  const int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  double best = kInf;
  int bx = fx, by = fy;
  for (int k = 0; k < 8; ++k) {
    const int nx = fx + dx8[k], ny = fy + dy8[k];
    if (scene_->wall(nx, ny)) continue;
    if (k >= 4 && (scene_->wall(fx + dx8[k], fy) || scene_->wall(fx, fy + dy8[k])))
      continue;
    const double cost = k < 4 ? 1.0 : std::numbers::sqrt2;
    const double v = cell_dist_[static_cast<std::size_t>(ny) * w_ + nx] + cost;
    if (v < best) {
      best = v;
      bx = nx;
      by = ny;
    }
  }
  if (bx == tx && by == ty) return target_;
  return Vec2{bx + 0.5, by + 0.5};
}

double geodesic_distance(const Scene& scene, Vec2 a, Vec2 b) {
  if (!scene.free_at(a.x, a.y) || !scene.free_at(b.x, b.y))
    throw std::runtime_error("geodesic endpoints must lie in free space");
  DistanceField field(scene, b);
  const double d = field.distance(a);
  if (!std::isfinite(d))
    throw std::runtime_error("geodesic endpoints are disconnected");
  return d;
}

Action expert_action(const Scene& scene, const AgentPose& pose, Vec2 target) {
  DistanceField field(scene, target);
  return expert_action(scene, pose, target, field);
}

Action expert_action(const Scene& scene, const AgentPose& pose, Vec2 target,
                     const DistanceField& field) {
  const double d = field.distance({pose.x, pose.y});
  if (!std::isfinite(d)) throw std::runtime_error("expert: target unreachable");
  if (d <= kSuccessRadius) return Action::Stop;
  const auto wp = field.next_waypoint({pose.x, pose.y});
  if (!wp) throw std::runtime_error("expert: target unreachable");
  double err = std::atan2(wp->y - pose.y, wp->x - pose.x) - pose.theta;
  err = std::remainder(err, 2.0 * M_PI);  // signed heading error in [-pi, pi]
  if (std::fabs(err) <= kTurnStep + 1e-12 && !forward_blocked(scene, pose))
    return Action::Forward;
  if (err > 1e-12) return Action::TurnLeft;
  if (err < -1e-12) return Action::TurnRight;
  return Action::TurnLeft;  // tie
}

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::Easy: return "easy";
    case Tier::Medium: return "medium";
    case Tier::Hard: return "hard";
  }
  return "?";
}

std::pair<double, double> tier_band(Tier t) {
  switch (t) {
    case Tier::Easy: return {1.5, 3.0};
    case Tier::Medium: return {3.0, 5.0};
    case Tier::Hard: return {5.0, 10.0};
  }
  return {0.0, 0.0};
}

Episode sample_episode(const Scene& scene, Tier tier, Rng& rng, int strip_w,
                       double fov) {
  const auto [lo, hi] = tier_band(tier);
  std::vector<int> free_cells;
  for (int y = 0; y < scene.height(); ++y)
    for (int x = 0; x < scene.width(); ++x)
      if (!scene.wall(x, y)) free_cells.push_back(y * scene.width() + x);
  auto sample_point = [&]() -> Vec2 {
    const int c = free_cells[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(free_cells.size()) - 1))];
    const double x = (c % scene.width()) + rng.uniform(0.2, 0.8);
    const double y = (c / scene.width()) + rng.uniform(0.2, 0.8);
    return {x, y};
  };
  for (int attempt = 0; attempt < 5000; ++attempt) {
    const Vec2 start = sample_point();
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 target = sample_point();
    const double target_heading = rng.uniform(0.0, 2.0 * M_PI);
    DistanceField field(scene, target);
    const double g = field.distance(start);
    if (!std::isfinite(g) || g < lo || g > hi) continue;
    Episode ep;
    ep.start = {start.x, start.y, wrap_two_pi(theta)};
    ep.target = target;
    ep.shortest_path = g;
    ep.target_image = render_observation(
        scene, {target.x, target.y, wrap_two_pi(target_heading)}, strip_w, fov);
    return ep;
  }
  throw std::runtime_error(std::string("no valid episode found for tier ") +
                           tier_name(tier) + " in this scene");
}

}  // namespace navfield
