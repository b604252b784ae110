#include "hamlearn/lattice.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "hamlearn/errors.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

Geometry build_geometry(int rows, int cols, double spacing_um,
                        double disorder_amplitude_um, std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw ConfigError("build_geometry: rows and cols must be >= 1");
  }
  if (!(spacing_um > 0.0)) {
    throw ConfigError("build_geometry: spacing must be positive");
  }
  if (disorder_amplitude_um < 0.0 || disorder_amplitude_um >= spacing_um / 2.0) {
    throw ConfigError("build_geometry: disorder amplitude must lie in [0, spacing/2)");
  }

  Geometry geom;
  geom.rows = rows;
  geom.cols = cols;
  geom.nominal_spacing_um = spacing_um;
  geom.disorder_amplitude_um = disorder_amplitude_um;
  geom.seed = seed;
  geom.positions_um.resize(static_cast<std::size_t>(rows) * cols);

  // One substream per atom; both axis offsets come from the atom's stream.
  for (int i = 0; i < rows * cols; ++i) {
    Rng g(substream_seed(seed, static_cast<std::uint64_t>(i)));
    const double a = disorder_amplitude_um;
    const double dx = a > 0.0 ? uniform_in(g, -a, a) : 0.0;
    const double dy = a > 0.0 ? uniform_in(g, -a, a) : 0.0;
    geom.positions_um[i] = {geom.lattice_x(i) * spacing_um + dx,
                            geom.lattice_y(i) * spacing_um + dy};
  }
  return geom;
}

double pair_distance_um(const Geometry& geom, int i, int k) {
  const double dx = geom.positions_um[i][0] - geom.positions_um[k][0];
  const double dy = geom.positions_um[i][1] - geom.positions_um[k][1];
  return std::sqrt(dx * dx + dy * dy);
}

CouplingMatrix couplings(const Geometry& geom, double c6) {
  if (!(c6 > 0.0)) {
    throw ConfigError("couplings: c6 must be positive");
  }
  const int n = geom.n_atoms();
  CouplingMatrix jm;
  jm.n_atoms = n;
  jm.c6 = c6;
  jm.j_rad_per_us.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      const double r = pair_distance_um(geom, i, k);
      if (r == 0.0) {
        throw DegenerateGeometryError("couplings: atoms " + std::to_string(i) + " and " +
                                      std::to_string(k) + " coincide");
      }
      const double r2 = r * r;
      const double v = c6 / (r2 * r2 * r2);
      jm.j(i, k) = v;
      jm.j(k, i) = v;
    }
  }
  return jm;
}

AdjacencySets adjacency(int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw ConfigError("adjacency: rows and cols must be >= 1");
  }
  AdjacencySets adj;
  const auto id = [cols](int x, int y) { return y * cols + x; };
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      if (x + 1 < cols) adj.nn_edges.emplace_back(id(x, y), id(x + 1, y));
      if (y + 1 < rows) adj.nn_edges.emplace_back(id(x, y), id(x, y + 1));
      if (x + 1 < cols && y + 1 < rows) {
        adj.nnn_edges.emplace_back(id(x, y), id(x + 1, y + 1));
        adj.nnn_edges.emplace_back(id(x + 1, y), id(x, y + 1));
      }
    }
  }
  return adj;
}

std::string geometry_to_json(const Geometry& geom) {
  nlohmann::json j;
  j["rows"] = geom.rows;
  j["cols"] = geom.cols;
  j["spacing_um"] = geom.nominal_spacing_um;
  j["disorder_amplitude_um"] = geom.disorder_amplitude_um;
  j["seed"] = geom.seed;
  auto& pos = j["positions"] = nlohmann::json::array();
  for (const auto& p : geom.positions_um) pos.push_back({p[0], p[1]});
  return j.dump();
}

Geometry geometry_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Geometry geom;
  geom.rows = j.at("rows").get<int>();
  geom.cols = j.at("cols").get<int>();
  geom.nominal_spacing_um = j.at("spacing_um").get<double>();
  geom.disorder_amplitude_um = j.at("disorder_amplitude_um").get<double>();
  geom.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& p : j.at("positions")) {
    geom.positions_um.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  if (static_cast<int>(geom.positions_um.size()) != geom.rows * geom.cols) {
    throw ConfigError("geometry_from_json: position count does not match rows*cols");
  }
  return geom;
}

}  // namespace hamlearn
