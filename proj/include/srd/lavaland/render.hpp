#pragma once

// Per-map artifacts: trajectory JSON and a two-panel SVG (tiles with the
// executed path, and the plan board it was chosen from).

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "srd/lavaland/robot.hpp"

namespace srd::lavaland {

inline nlohmann::ordered_json trajectory_json(std::size_t index, const TileMap& map, const EpisodeOutcome& e) {
  nlohmann::ordered_json j;
  j["map"] = index;
  std::string rows;
  for (int r = 0; r < map.height; ++r) {
    if (r) rows += '/';
    for (int c = 0; c < map.width; ++c) rows += static_cast<char>(map.at({r, c}));
  }
  j["tiles"] = rows;
  j["spawn"] = {map.spawn.row, map.spawn.col};
  j["target"] = {map.target.row, map.target.col};
  j["reached"] = e.reached;
  j["steps"] = e.steps;
  j["grass"] = e.grass;
  j["dirt"] = e.dirt;
  j["lava"] = e.lava;
  auto path = nlohmann::ordered_json::array();
  for (const auto& p : e.trajectory) path.push_back({p.row, p.col});
  j["trajectory"] = std::move(path);
  return j;
}

namespace detail {

inline std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(c[0] * 255)),
                static_cast<int>(std::lround(c[1] * 255)), static_cast<int>(std::lround(c[2] * 255)));
  return buf;
}

// Diverging blue-white-red for values in [-1, 1].
inline std::string diverging(double v) {
  v = std::max(-1.0, std::min(1.0, v));
  const double a = std::abs(v);
  const Rgb c = v >= 0 ? Rgb{1.0, 1.0 - a, 1.0 - a} : Rgb{1.0 - a, 1.0 - a, 1.0};
  return hex(c);
}

}  // namespace detail

inline std::string render_episode_svg(const TileMap& map, const PlanBoard& board, const EpisodeOutcome& e) {
  constexpr int cell = 32, gap = 24, pad = 10;
  const int pw = map.width * cell, ph = map.height * cell;
  const int W = 2 * pw + gap + 2 * pad, H = ph + 2 * pad + 20;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
     << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double v0 = board.v0 > 0 ? board.v0 : 1.0;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const int x = pad + c * cell, y = pad + r * cell;
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
         << detail::hex(tile_rgb(map.at({r, c}))) << "\" stroke=\"#333\" stroke-width=\"0.5\"/>";
      const double v = board.values[map.index({r, c})] / v0;
      os << "<rect x=\"" << x + pw + gap << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"" << detail::diverging(v) << "\" stroke=\"#333\" stroke-width=\"0.5\"/>\n";
    }
  }
  auto centre = [&](const Pos& p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%d,%d", pad + p.col * cell + cell / 2, pad + p.row * cell + cell / 2);
    return std::string(buf);
  };
  os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2.5\" points=\"" << centre(map.spawn);
  for (const auto& p : e.trajectory) os << ' ' << centre(p);
  os << "\"/>\n";
  os << "<circle cx=\"" << pad + map.spawn.col * cell + cell / 2 << "\" cy=\"" << pad + map.spawn.row * cell + cell / 2
     << "\" r=\"6\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"" << H - 8 << "\">" << (e.reached ? "reached" : "not reached") << ", "
     << e.steps << " steps, lava " << e.lava << "</text>";
  os << "<text x=\"" << pad + pw + gap << "\" y=\"" << H - 8 << "\">plan board / v0</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace srd::lavaland
