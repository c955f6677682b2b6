#pragma once

// Decentralized CTOP case study: sectors on a unit-square map, flights with
// trajectory options, bundle occupancy, and the eigen-complexity congestion cost.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nego/types.hpp"

namespace nego::ctop {

struct Sector {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  // Half-open on the upper edges except at the map boundary, so adjacent
  // sectors never both claim a shared edge.
  bool contains(double x, double y) const;

  friend bool operator==(const Sector&, const Sector&) = default;
};

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  int t = 0;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

using Trajectory = std::vector<Waypoint>;

struct Flight {
  int departure = 0;
  std::vector<Trajectory> options;

  friend bool operator==(const Flight&, const Flight&) = default;
};

struct CtopInstance {
  std::vector<Sector> sectors;
  int grid = 4;
  int horizon = 8;
  std::vector<Flight> flights;

  std::size_t option_count() const {
    return flights.empty() ? 0 : flights.front().options.size();
  }
  BundleSpace bundle_space() const;

  friend bool operator==(const CtopInstance&, const CtopInstance&) = default;
};

/// Per-flight option index. `kExcluded` marks a flight that is left out of the
/// occupancy count (used by sequential baselines on partial assignments).
using Bundle = std::vector<std::size_t>;
inline constexpr std::size_t kExcluded = std::numeric_limits<std::size_t>::max();

/// Occupancy counts of one sector: T rows (time bins) × g·g columns (cells).
class TrafficMatrix {
 public:
  TrafficMatrix(std::size_t bins, std::size_t cells)
      : bins_(bins), cells_(cells), counts_(bins * cells, 0) {}

  std::size_t bins() const { return bins_; }
  std::size_t cells() const { return cells_; }
  int operator()(std::size_t bin, std::size_t cell) const { return counts_[bin * cells_ + cell]; }
  int& operator()(std::size_t bin, std::size_t cell) { return counts_[bin * cells_ + cell]; }
  long total() const;

  friend bool operator==(const TrafficMatrix&, const TrafficMatrix&) = default;

 private:
  std::size_t bins_;
  std::size_t cells_;
  std::vector<int> counts_;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TrafficMatrix occupancy(const CtopInstance& instance, std::size_t sector, std::span<const std::size_t> bundle);

struct PowerIterationOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
};

/// Largest eigenvalue of a symmetric positive semidefinite matrix (row-major,
/// dim × dim) by power iteration. Throws ConvergenceError at the iteration cap.
double dominant_eigenvalue(std::span<const double> matrix, std::size_t dim,
                           const PowerIterationOptions& options = {});

/// Sample covariance (1/T)·XcᵀXc of the cell columns, column means removed.
std::vector<double> occupancy_covariance(const TrafficMatrix& traffic);

/// λ_max of the occupancy covariance; 0 for constant traffic.
double eigen_complexity(const TrafficMatrix& traffic, const PowerIterationOptions& options = {});

/// Congestion cost of `sector` under `bundle`.
double sector_cost(const CtopInstance& instance, std::size_t sector, std::span<const std::size_t> bundle);

struct GeneratorParams {
  std::size_t sectors = 3;
  std::size_t flights = 5;
  std::size_t options = 3;
  int grid = 4;
  int horizon = 8;
};

CtopInstance generate_scenario(const GeneratorParams& params, std::uint64_t seed);

/// Empty string if the instance satisfies every structural invariant, else
/// the first violation found ("flights[2].options[1]: ...").
std::string check_instance(const CtopInstance& instance);

std::string to_json_string(const CtopInstance& instance);
CtopInstance from_json_string(const std::string& text);
void save_instance(const CtopInstance& instance, const std::filesystem::path& path);
CtopInstance load_instance(const std::filesystem::path& path);

}  // namespace nego::ctop
