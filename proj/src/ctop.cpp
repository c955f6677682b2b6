#include "nego/ctop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "nego/rng.hpp"

namespace nego::ctop {

using json = nlohmann::json;

bool Sector::contains(double x, double y) const {
  const bool in_x = x >= xmin && (x < xmax || (xmax >= 1.0 && x <= xmax));
  const bool in_y = y >= ymin && (y < ymax || (ymax >= 1.0 && y <= ymax));
  return in_x && in_y;
}

BundleSpace CtopInstance::bundle_space() const {
  return BundleSpace(std::vector<std::size_t>(flights.size(), option_count()));
}

long TrafficMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

TrafficMatrix occupancy(const CtopInstance& instance, std::size_t sector, std::span<const std::size_t> bundle) {
  if (sector >= instance.sectors.size()) throw std::out_of_range("occupancy: sector index out of range");
  if (bundle.size() != instance.flights.size()) throw std::invalid_argument("occupancy: bundle length != flight count");
  const auto g = static_cast<std::size_t>(instance.grid);
  TrafficMatrix traffic(static_cast<std::size_t>(instance.horizon), g * g);
  const Sector& box = instance.sectors[sector];
  const double width = box.xmax - box.xmin;
  const double height = box.ymax - box.ymin;
  for (std::size_t f = 0; f < bundle.size(); ++f) {
    if (bundle[f] == kExcluded) continue;
    const Flight& flight = instance.flights[f];
    if (bundle[f] >= flight.options.size()) throw std::out_of_range("occupancy: option index out of range");
    for (const Waypoint& wp : flight.options[bundle[f]]) {
      if (!box.contains(wp.x, wp.y)) continue;
      if (wp.t < 0 || wp.t >= instance.horizon) continue;
      const auto cx = std::min(g - 1, static_cast<std::size_t>(std::floor((wp.x - box.xmin) / width * g)));
      const auto cy = std::min(g - 1, static_cast<std::size_t>(std::floor((wp.y - box.ymin) / height * g)));
      ++traffic(static_cast<std::size_t>(wp.t), cy * g + cx);
    }
  }
  return traffic;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void multiply(std::span<const double> matrix, std::size_t dim, std::span<const double> v, std::span<double> out) {
  for (std::size_t i = 0; i < dim; ++i) out[i] = dot(matrix.subspan(i * dim, dim), v);
}

}  // namespace

double dominant_eigenvalue(std::span<const double> matrix, std::size_t dim, const PowerIterationOptions& options) {
  if (matrix.size() != dim * dim) throw std::invalid_argument("dominant_eigenvalue: matrix is not dim × dim");
  if (dim == 0) return 0.0;
  if (std::all_of(matrix.begin(), matrix.end(), [](double x) { return x == 0.0; })) return 0.0;

  // Fixed pseudo-random start: deterministic, and almost surely not orthogonal
  // to the dominant eigenvector.
  std::vector<double> v(dim);
  std::uint64_t state = 0x5eed0000ULL + dim;
  for (double& x : v) {
    state = splitmix64(state);
    x = 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53;
  }
  double norm = std::sqrt(dot(v, v));
  for (double& x : v) x /= norm;

  std::vector<double> y(dim);
  double rho_prev = 0.0;
  double delta_prev = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    multiply(matrix, dim, v, y);
    const double rho = dot(v, y);
    const double ny = std::sqrt(dot(y, y));
    if (ny == 0.0) return 0.0;
    double residual = 0.0;
    for (std::size_t i = 0; i < dim; ++i) residual += (y[i] - rho * v[i]) * (y[i] - rho * v[i]);
    residual = std::sqrt(residual);
    const double scale = std::abs(rho);
    if (residual <= options.tolerance * scale) return rho;
    if (it > 0) {
      // Rayleigh quotients of a PSD power sequence rise monotonically toward
      // λ_max; extrapolate the geometric tail to bound the remaining error.
      const double delta = rho - rho_prev;
      if (delta <= options.tolerance * scale) {
        if (delta <= 0.0) return rho;
        const double ratio = delta_prev > 0.0 ? delta / delta_prev : 1.0;
        if (ratio < 1.0 && delta * ratio / (1.0 - ratio) <= options.tolerance * scale) return rho;
      }
      delta_prev = delta;
    }
    rho_prev = rho;
    for (std::size_t i = 0; i < dim; ++i) v[i] = y[i] / ny;
  }
  throw ConvergenceError("power iteration did not converge in " + std::to_string(options.max_iterations) +
                         " iterations");
}

std::vector<double> occupancy_covariance(const TrafficMatrix& traffic) {
  const std::size_t bins = traffic.bins();
  const std::size_t cells = traffic.cells();
  std::vector<double> centered(bins * cells);
  for (std::size_t c = 0; c < cells; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < bins; ++t) mean += traffic(t, c);
    mean /= static_cast<double>(bins);
    for (std::size_t t = 0; t < bins; ++t) centered[t * cells + c] = traffic(t, c) - mean;
  }
  std::vector<double> cov(cells * cells, 0.0);
  for (std::size_t i = 0; i < cells; ++i) {
    for (std::size_t j = i; j < cells; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < bins; ++t) s += centered[t * cells + i] * centered[t * cells + j];
      cov[i * cells + j] = cov[j * cells + i] = s / static_cast<double>(bins);
    }
  }
  return cov;
}

double eigen_complexity(const TrafficMatrix& traffic, const PowerIterationOptions& options) {
  if (traffic.bins() == 0) throw std::invalid_argument("eigen_complexity: need at least one time bin");
  const std::vector<double> cov = occupancy_covariance(traffic);
  const std::size_t cells = traffic.cells();
  // Cells with zero variance only add zero rows and columns; drop them.
  std::vector<std::size_t> active;
  for (std::size_t c = 0; c < cells; ++c) {
    if (cov[c * cells + c] > 0.0) active.push_back(c);
  }
  if (active.empty()) return 0.0;
  const std::size_t dim = active.size();
  std::vector<double> reduced(dim * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) reduced[i * dim + j] = cov[active[i] * cells + active[j]];
  }
  return std::max(0.0, dominant_eigenvalue(reduced, dim, options));
}

double sector_cost(const CtopInstance& instance, std::size_t sector, std::span<const std::size_t> bundle) {
  return eigen_complexity(occupancy(instance, sector, bundle));
}

CtopInstance generate_scenario(const GeneratorParams& params, std::uint64_t seed) {
  if (params.sectors == 0 || params.flights == 0 || params.options == 0 || params.grid < 1 || params.horizon < 1) {
    throw std::invalid_argument("generate_scenario: all counts must be at least 1");
  }
  Rng rng(derive_seed(seed, {0xC7079ULL}));
  CtopInstance inst;
  inst.grid = params.grid;
  inst.horizon = params.horizon;
  const auto n = static_cast<double>(params.sectors);
  for (std::size_t s = 0; s < params.sectors; ++s) {
    inst.sectors.push_back(Sector{static_cast<double>(s) / n, static_cast<double>(s + 1) / n, 0.0, 1.0});
  }

  // West-to-east paths with three waypoints per sector, so every option
  // crosses every sector; options differ in lateral route and delay.
  const std::size_t waypoints = 3 * params.sectors;
  const int latest_departure = std::max(0, params.horizon / 4);
  for (std::size_t f = 0; f < params.flights; ++f) {
    Flight flight;
    flight.departure = static_cast<int>(rng.below(static_cast<std::uint64_t>(latest_departure) + 1));
    const double y0 = rng.uniform(0.15, 0.85);
    for (std::size_t k = 0; k < params.options; ++k) {
      const int delay = static_cast<int>(rng.below(3));
      const double offset = rng.uniform(-0.3, 0.3);
      const int start = std::min(flight.departure + delay, params.horizon - 1);
      const int span = params.horizon - 1 - start;
      Trajectory path;
      for (std::size_t j = 0; j < waypoints; ++j) {
        const double progress = waypoints > 1 ? static_cast<double>(j) / static_cast<double>(waypoints - 1) : 0.0;
        const double x = (static_cast<double>(j) + 0.5 + rng.uniform(-0.3, 0.3)) / static_cast<double>(waypoints);
        const double bulge = offset * std::sin(progress * 3.141592653589793);
        const double y = std::clamp(y0 + bulge + rng.uniform(-0.05, 0.05), 0.01, 0.99);
        const int t = start + static_cast<int>(std::floor(progress * span));
        path.push_back(Waypoint{x, y, t});
      }
      flight.options.push_back(std::move(path));
    }
    inst.flights.push_back(std::move(flight));
  }
  return inst;
}

std::string check_instance(const CtopInstance& inst) {
  if (inst.sectors.empty()) return "sectors: empty sector set";
  if (inst.grid < 1) return "grid: must be >= 1";
  if (inst.horizon < 1) return "horizon: must be >= 1";
  for (std::size_t s = 0; s < inst.sectors.size(); ++s) {
    const Sector& b = inst.sectors[s];
    if (!(b.xmin < b.xmax && b.ymin < b.ymax)) return "sectors[" + std::to_string(s) + "]: empty box";
  }
  const std::size_t q = inst.option_count();
  for (std::size_t f = 0; f < inst.flights.size(); ++f) {
    const Flight& flight = inst.flights[f];
    const std::string where = "flights[" + std::to_string(f) + "]";
    if (flight.options.size() != q || q == 0) {
      return where + ".options: expected " + std::to_string(q) + " options, found " +
             std::to_string(flight.options.size());
    }
    for (std::size_t k = 0; k < flight.options.size(); ++k) {
      const std::string at = where + ".options[" + std::to_string(k) + "]";
      bool crosses = false;
      for (const Waypoint& wp : flight.options[k]) {
        if (wp.x < 0.0 || wp.x > 1.0 || wp.y < 0.0 || wp.y > 1.0) return at + ": waypoint outside [0,1]^2";
        if (wp.t < 0 || wp.t >= inst.horizon) return at + ": waypoint time outside [0, horizon)";
        for (const Sector& b : inst.sectors) crosses = crosses || b.contains(wp.x, wp.y);
      }
      if (!crosses) return at + ": trajectory crosses no sector";
    }
  }
  return {};
}

std::string to_json_string(const CtopInstance& inst) {
  json j;
  j["sectors"] = json::array();
  for (const Sector& s : inst.sectors) {
    j["sectors"].push_back({{"xmin", s.xmin}, {"xmax", s.xmax}, {"ymin", s.ymin}, {"ymax", s.ymax}});
  }
  j["grid"] = inst.grid;
  j["horizon"] = inst.horizon;
  j["flights"] = json::array();
  for (const Flight& f : inst.flights) {
    json options = json::array();
    for (const Trajectory& path : f.options) {
      json pts = json::array();
      for (const Waypoint& wp : path) pts.push_back(json::array({wp.x, wp.y, wp.t}));
      options.push_back(std::move(pts));
    }
    j["flights"].push_back({{"departure", f.departure}, {"options", std::move(options)}});
  }
  return j.dump(1);
}

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw SchemaError(where + ": expected an integer");
  return v.get<int>();
}

const json& array(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array");
  return v;
}

}  // namespace

CtopInstance from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("instance: invalid JSON: ") + e.what());
  }
  CtopInstance inst;
  const json& sectors = array(field(j, "sectors", "instance"), "sectors");
  for (std::size_t s = 0; s < sectors.size(); ++s) {
    const std::string at = "sectors[" + std::to_string(s) + "]";
    inst.sectors.push_back(Sector{number(field(sectors[s], "xmin", at), at + ".xmin"),
                                  number(field(sectors[s], "xmax", at), at + ".xmax"),
                                  number(field(sectors[s], "ymin", at), at + ".ymin"),
                                  number(field(sectors[s], "ymax", at), at + ".ymax")});
  }
  inst.grid = integer(field(j, "grid", "instance"), "grid");
  inst.horizon = integer(field(j, "horizon", "instance"), "horizon");
  const json& flights = array(field(j, "flights", "instance"), "flights");
  for (std::size_t f = 0; f < flights.size(); ++f) {
    const std::string at = "flights[" + std::to_string(f) + "]";
    Flight flight;
    flight.departure = integer(field(flights[f], "departure", at), at + ".departure");
    const json& options = array(field(flights[f], "options", at), at + ".options");
    for (std::size_t k = 0; k < options.size(); ++k) {
      const std::string ok = at + ".options[" + std::to_string(k) + "]";
      Trajectory path;
      for (std::size_t w = 0; w < array(options[k], ok).size(); ++w) {
        const std::string pw = ok + "[" + std::to_string(w) + "]";
        const json& p = array(options[k][w], pw);
        if (p.size() != 3) throw SchemaError(pw + ": expected [x, y, t]");
        path.push_back(Waypoint{number(p[0], pw + "[0]"), number(p[1], pw + "[1]"), integer(p[2], pw + "[2]")});
      }
      flight.options.push_back(std::move(path));
    }
    inst.flights.push_back(std::move(flight));
  }
  if (const std::string problem = check_instance(inst); !problem.empty()) throw SchemaError(problem);
  return inst;
}

void save_instance(const CtopInstance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_json_string(instance) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CtopInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return from_json_string(buffer.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace nego::ctop
