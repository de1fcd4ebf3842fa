#pragma once

// Lavaland tile maps, the experiment presets, and map banks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "srd/nn/tensor.hpp"
#include "srd/util/errors.hpp"
#include "srd/util/rng.hpp"

namespace srd::lavaland {

using Rgb = std::array<double, 3>;

enum class Tile : char { kDirt = 'D', kGrass = 'G', kLava = 'L', kTarget = 'T' };

inline constexpr Rgb kTargetRgb{1.0, 1.0, 0.0};
inline constexpr Rgb kGrassRgb{0.0, 128.0 / 255.0, 0.0};
inline constexpr Rgb kDirtRgb{139.0 / 255.0, 69.0 / 255.0, 19.0 / 255.0};
inline constexpr Rgb kLavaRgb{1.0, 0.0, 0.0};

inline const Rgb& tile_rgb(Tile t) {
  switch (t) {
    case Tile::kDirt: return kDirtRgb;
    case Tile::kGrass: return kGrassRgb;
    case Tile::kLava: return kLavaRgb;
    case Tile::kTarget: return kTargetRgb;
  }
  throw std::invalid_argument("unknown tile");
}

using srd::ConfigError;

struct Pos {
  int row = 0;
  int col = 0;
  friend bool operator==(const Pos&, const Pos&) = default;
};

struct TileMap {
  int height = 0;
  int width = 0;
  std::vector<Tile> tiles;  // row-major
  Pos spawn;
  Pos target;

  std::size_t index(Pos p) const { return static_cast<std::size_t>(p.row * width + p.col); }
  Pos pos(std::size_t i) const { return {static_cast<int>(i) / width, static_cast<int>(i) % width}; }
  Tile at(Pos p) const { return tiles[index(p)]; }
  std::size_t size() const { return tiles.size(); }

  // x_attn as a flat H*W*3 array in [0, 1].
  std::vector<double> rgb() const {
    std::vector<double> out;
    out.reserve(tiles.size() * 3);
    for (Tile t : tiles) {
      const auto& c = tile_rgb(t);
      out.insert(out.end(), c.begin(), c.end());
    }
    return out;
  }

  std::size_t count(Tile t) const {
    return static_cast<std::size_t>(std::count(tiles.begin(), tiles.end(), t));
  }
};

struct MapSettings {
  int height = 8;
  int width = 8;
  double grass_fraction = 0.3;
  double lava_fraction = 0.0;
};

struct RobotPreferences {
  double p_target = 2.0;
  double p_self = -1.0;
  double p_grass = -0.8;
  double p_dirt = 0.2;
  double unknown_avoidance = 2.0;
};

struct Preset {
  std::string name;
  MapSettings maps;
  RobotPreferences prefs;
};

inline Preset make_preset(const std::string& name) {
  Preset p;
  p.name = name;
  if (name == "project-a") {
  } else if (name == "compare-a") {
    p.prefs.p_target = 10.0;
  } else if (name == "lava-a") {
    p.prefs.p_target = 10.0;
    p.maps.lava_fraction = 0.1;
  } else if (name == "lava-noav-a") {
    p.prefs.p_target = 10.0;
    p.maps.lava_fraction = 0.1;
    p.prefs.unknown_avoidance = 0.0;
  } else {
    throw ConfigError("unknown preset '" + name +
                      "' (expected project-a, compare-a, lava-a or lava-noav-a)");
  }
  return p;
}

// Grass and lava cells are drawn without replacement, the rest is dirt; the
// target and spawn are then two distinct non-lava cells.
inline TileMap generate_map(const MapSettings& s, Rng& rng) {
  if (s.height < 1 || s.width < 1 || s.height * s.width < 2) {
    throw ConfigError("map must have at least two cells, got " + std::to_string(s.height) + "x" +
                      std::to_string(s.width));
  }
  if (s.grass_fraction < 0 || s.lava_fraction < 0 || s.grass_fraction + s.lava_fraction > 1) {
    throw ConfigError("grass and lava fractions must be non-negative and sum to at most 1");
  }
  TileMap m;
  m.height = s.height;
  m.width = s.width;
  const std::size_t n = static_cast<std::size_t>(s.height * s.width);
  m.tiles.assign(n, Tile::kDirt);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  const auto n_grass = static_cast<std::size_t>(std::lround(s.grass_fraction * static_cast<double>(n)));
  auto n_lava = static_cast<std::size_t>(std::lround(s.lava_fraction * static_cast<double>(n)));
  n_lava = std::min(n_lava, n - n_grass - std::min<std::size_t>(n - n_grass, 2));
  for (std::size_t k = 0; k < n_grass; ++k) m.tiles[order[k]] = Tile::kGrass;
  for (std::size_t k = n_grass; k < n_grass + n_lava; ++k) m.tiles[order[k]] = Tile::kLava;
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.tiles[i] != Tile::kLava) free.push_back(i);
  }
  if (free.size() < 2) throw ConfigError("not enough non-lava cells for spawn and target");
  const std::size_t ti = rng.index(free.size());
  std::size_t si = rng.index(free.size() - 1);
  if (si >= ti) ++si;
  m.target = m.pos(free[ti]);
  m.spawn = m.pos(free[si]);
  m.tiles[free[ti]] = Tile::kTarget;
  return m;
}

struct MapBank {
  std::string preset;
  std::uint64_t seed = 0;
  std::vector<TileMap> maps;
};

inline MapBank generate_maps(std::size_t count, const Preset& preset, std::uint64_t seed) {
  if (count == 0) throw ConfigError("map count must be at least 1");
  MapBank bank{preset.name, seed, {}};
  bank.maps.reserve(count);
  const Rng root(seed);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = root.split(i);
    bank.maps.push_back(generate_map(preset.maps, rng));
  }
  return bank;
}

// Evaluation and training banks come from disjoint streams of one seed.
inline MapBank evaluation_bank(std::size_t count, const Preset& p, std::uint64_t seed) {
  return generate_maps(count, p, splitmix64(seed ^ 0x6576616cULL));
}
inline MapBank training_bank(std::size_t count, const Preset& p, std::uint64_t seed) {
  return generate_maps(count, p, splitmix64(seed ^ 0x747261696eULL));
}

inline constexpr const char* kBankFormat = "srd-lavaland-bank";
inline constexpr int kBankVersion = 1;

inline std::string bank_to_json(const MapBank& bank) {
  nlohmann::ordered_json doc;
  doc["format"] = kBankFormat;
  doc["version"] = kBankVersion;
  doc["preset"] = bank.preset;
  doc["seed"] = bank.seed;
  auto maps = nlohmann::ordered_json::array();
  for (const auto& m : bank.maps) {
    std::string rows;
    for (int r = 0; r < m.height; ++r) {
      if (r) rows += '/';
      for (int c = 0; c < m.width; ++c) rows += static_cast<char>(m.at({r, c}));
    }
    maps.push_back({{"tiles", rows},
                    {"spawn", {m.spawn.row, m.spawn.col}},
                    {"target", {m.target.row, m.target.col}}});
  }
  doc["maps"] = std::move(maps);
  return doc.dump(1) + "\n";
}

inline MapBank parse_bank(const nlohmann::json& doc) {
  MapBank bank;
  bank.preset = doc.value("preset", "");
  bank.seed = doc.value("seed", std::uint64_t{0});
  for (const auto& e : doc.at("maps")) {
    TileMap m;
    const auto rows = e.at("tiles").get<std::string>();
    std::stringstream ss(rows);
    std::string row;
    while (std::getline(ss, row, '/')) {
      if (m.width == 0) m.width = static_cast<int>(row.size());
      if (static_cast<int>(row.size()) != m.width) throw ConfigError("ragged map in bank");
      for (char ch : row) {
        if (ch != 'D' && ch != 'G' && ch != 'L' && ch != 'T') {
          throw ConfigError(std::string("unknown tile code '") + ch + "'");
        }
        m.tiles.push_back(static_cast<Tile>(ch));
      }
      ++m.height;
    }
    const auto sp = e.at("spawn").get<std::array<int, 2>>();
    const auto tp = e.at("target").get<std::array<int, 2>>();
    m.spawn = {sp[0], sp[1]};
    m.target = {tp[0], tp[1]};
    auto inside = [&](Pos q) { return q.row >= 0 && q.row < m.height && q.col >= 0 && q.col < m.width; };
    if (!inside(m.spawn) || !inside(m.target) || m.at(m.target) != Tile::kTarget || m.spawn == m.target) {
      throw ConfigError("map bank entry has a bad spawn or target");
    }
    bank.maps.push_back(std::move(m));
  }
  return bank;
}

inline MapBank bank_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("map bank parse error at byte " + std::to_string(e.byte));
  }
  if (!doc.is_object() || doc.value("format", "") != kBankFormat) {
    throw ConfigError("not a lavaland map bank");
  }
  if (doc.value("version", -1) != kBankVersion) throw ConfigError("unsupported map bank version");
  try {
    return parse_bank(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed map bank: ") + e.what());
  }
}

inline void save_bank(const MapBank& bank, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << bank_to_json(bank);
}

inline MapBank load_bank(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read map bank " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return bank_from_json(ss.str());
}

}  // namespace srd::lavaland
