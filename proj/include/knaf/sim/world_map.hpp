#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace knaf::sim {

struct Segment {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

struct SpawnPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// 2D environment: obstacle walls as line segments plus episode spawn poses.
struct WorldMap {
  std::string name;
  std::vector<Segment> segments;
  std::vector<SpawnPose> spawns;
};

inline double point_segment_distance(const Eigen::Vector2d& p,
                                     const Segment& s) {
  const Eigen::Vector2d ab = s.b - s.a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - s.a).norm();
  double t = (p - s.a).dot(ab) / len2;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return (p - (s.a + t * ab)).norm();
}

inline double min_wall_distance(const WorldMap& map, const Eigen::Vector2d& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : map.segments) {
    best = std::min(best, point_segment_distance(p, s));
  }
  return best;
}

/// Distance along the ray (origin, unit dir) to the segment, or +inf on miss.
inline double ray_segment_hit(const Eigen::Vector2d& origin,
                              const Eigen::Vector2d& dir, const Segment& s) {
  const Eigen::Vector2d e = s.b - s.a;
  const double denom = dir.x() * e.y() - dir.y() * e.x();
  if (std::abs(denom) < 1e-15) {
    return std::numeric_limits<double>::infinity();
  }
  const Eigen::Vector2d ao = s.a - origin;
  const double t = (ao.x() * e.y() - ao.y() * e.x()) / denom;
  const double u = (ao.x() * dir.y() - ao.y() * dir.x()) / denom;
  if (t >= 0.0 && u >= 0.0 && u <= 1.0) return t;
  return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Map file format: one entry per line, meters/radians, '#' starts a comment.
//   segment x1 y1 x2 y2
//   spawn x y theta
// ---------------------------------------------------------------------------

inline WorldMap parse_map(std::istream& in, const std::string& name) {
  WorldMap map;
  map.name = name;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "segment") {
      double x1, y1, x2, y2;
      if (!(ls >> x1 >> y1 >> x2 >> y2)) {
        throw std::runtime_error("map line " + std::to_string(lineno) +
                                 ": segment needs 4 numbers");
      }
      map.segments.push_back({{x1, y1}, {x2, y2}});
    } else if (kind == "spawn") {
      double x, y, theta;
      if (!(ls >> x >> y >> theta)) {
        throw std::runtime_error("map line " + std::to_string(lineno) +
                                 ": spawn needs 3 numbers");
      }
      map.spawns.push_back({x, y, theta});
    } else {
      throw std::runtime_error("map line " + std::to_string(lineno) +
                               ": unknown entry '" + kind + "'");
    }
  }
  if (map.segments.empty()) {
    throw std::runtime_error("map '" + name + "' has no segments");
  }
  if (map.spawns.empty()) {
    throw std::runtime_error("map '" + name + "' has no spawn poses");
  }
  return map;
}

inline std::string format_map(const WorldMap& map) {
  std::string out = "# map: " + map.name + "\n";
  char buf[160];
  for (const Segment& s : map.segments) {
    std::snprintf(buf, sizeof(buf), "segment %.17g %.17g %.17g %.17g\n",
                  s.a.x(), s.a.y(), s.b.x(), s.b.y());
    out += buf;
  }
  for (const SpawnPose& p : map.spawns) {
    std::snprintf(buf, sizeof(buf), "spawn %.17g %.17g %.17g\n", p.x, p.y,
                  p.theta);
    out += buf;
  }
  return out;
}

namespace detail {

inline void add_loop(WorldMap& map, const std::vector<Eigen::Vector2d>& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    map.segments.push_back({poly[i], poly[(i + 1) % poly.size()]});
  }
}

inline std::vector<Eigen::Vector2d> regular_polygon(double radius, int sides) {
  std::vector<Eigen::Vector2d> poly;
  poly.reserve(sides);
  for (int i = 0; i < sides; ++i) {
    const double a = 2.0 * M_PI * i / sides;
    poly.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return poly;
}

}  // namespace detail

/// Ring corridor between two concentric polygons; radially symmetric.
inline WorldMap make_round_map() {
  WorldMap map;
  map.name = "round";
  detail::add_loop(map, detail::regular_polygon(2.75, 20));
  detail::add_loop(map, detail::regular_polygon(1.30, 12));
  const double r = 2.0;
  const double pi = M_PI;
  map.spawns = {{r, 0.0, pi / 2}, {0.0, r, pi}, {-r, 0.0, -pi / 2},
                {0.0, -r, 0.0}};
  return map;
}

/// Closed circuit of 1.5 m hallways that turn both left and right
/// (an L-shaped loop).
inline WorldMap make_circuit2_map() {
  WorldMap map;
  map.name = "circuit2";
  detail::add_loop(map, {{-0.75, -0.75},
                         {6.75, -0.75},
                         {6.75, 3.75},
                         {3.75, 3.75},
                         {3.75, 6.75},
                         {-0.75, 6.75}});
  detail::add_loop(map, {{0.75, 0.75},
                         {5.25, 0.75},
                         {5.25, 2.25},
                         {2.25, 2.25},
                         {2.25, 5.25},
                         {0.75, 5.25}});
  const double pi = M_PI;
  map.spawns = {{1.5, 0.0, 0.0}, {6.0, 1.5, pi / 2}, {3.0, 4.5, pi / 2},
                {1.5, 6.0, pi}};
  return map;
}

/// Closed circuit with many short legs: tight turns in quick succession
/// (a battlement-shaped loop).
inline WorldMap make_circuit1_map() {
  WorldMap map;
  map.name = "circuit1";
  detail::add_loop(map, {{-0.75, -0.75},
                         {8.75, -0.75},
                         {8.75, 4.75},
                         {5.25, 4.75},
                         {5.25, 2.75},
                         {4.75, 2.75},
                         {4.75, 4.75},
                         {1.25, 4.75},
                         {1.25, 2.75},
                         {-0.75, 2.75}});
  detail::add_loop(map, {{0.75, 0.75},
                         {7.25, 0.75},
                         {7.25, 3.25},
                         {6.75, 3.25},
                         {6.75, 1.25},
                         {3.25, 1.25},
                         {3.25, 3.25},
                         {2.75, 3.25},
                         {2.75, 1.25},
                         {0.75, 1.25}});
  const double pi = M_PI;
  map.spawns = {{2.0, 0.0, 0.0}, {8.0, 2.0, pi / 2}, {5.0, 2.0, pi},
                {3.0, 4.0, pi}};
  return map;
}

/// Long halls, an S-bend and a zigzag combined in one larger loop.
inline WorldMap make_maze_map() {
  WorldMap map;
  map.name = "maze";
  detail::add_loop(map, {{-0.75, -0.75},
                         {5.75, -0.75},
                         {5.75, 1.75},
                         {6.75, 1.75},
                         {6.75, -0.75},
                         {13.25, -0.75},
                         {13.25, 10.75},
                         {6.75, 10.75},
                         {6.75, 5.75},
                         {5.75, 5.75},
                         {5.75, 10.75},
                         {-0.75, 10.75}});
  detail::add_loop(map, {{0.75, 0.75},
                         {4.25, 0.75},
                         {4.25, 3.25},
                         {8.25, 3.25},
                         {8.25, 0.75},
                         {11.75, 0.75},
                         {11.75, 9.25},
                         {8.25, 9.25},
                         {8.25, 4.25},
                         {4.25, 4.25},
                         {4.25, 9.25},
                         {0.75, 9.25}});
  const double pi = M_PI;
  map.spawns = {{2.5, 0.0, 0.0}, {12.5, 5.0, pi / 2}, {10.0, 10.0, pi},
                {6.25, 5.0, pi}, {0.0, 5.0, -pi / 2}};
  return map;
}

/// The four bundled training environments.
inline std::vector<WorldMap> builtin_maps() {
  return {make_maze_map(), make_circuit1_map(), make_circuit2_map(),
          make_round_map()};
}

/// Builtin map by name, or empty optional-like failure via exception.
inline WorldMap builtin_map(const std::string& name) {
  for (WorldMap& m : builtin_maps()) {
    if (m.name == name) return std::move(m);
  }
  throw std::runtime_error("unknown builtin map '" + name + "'");
}

}  // namespace knaf::sim
