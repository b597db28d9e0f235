#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epikernel {

/// Planar farm coordinates in km.
struct FarmLocation {
  double u = 0.0;
  double v = 0.0;
};

/// Euclidean distance in km. Throws ValidationError on non-finite input.
double pairwise_distance(const FarmLocation& a, const FarmLocation& b);

/// Half-open [begin, end) slice of DistanceBundle::flat, zero-based.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// Ragged per-week distance lists between this week's and last week's cases.
///
/// Weeks with no cases store the single sentinel d_min; weeks whose
/// predecessor had no cases store the single value 1 km.
struct DistanceBundle {
  std::vector<double> flat;
  /// One slot per week, index = week - 1. Week 1 may be empty; every later
  /// week must have a range.
  std::vector<std::optional<IndexRange>> ranges;
  double d_min = 250.0;

  bool has_range(int week) const;
  /// Distances stored for a 1-based week. Throws StructuralError if missing.
  std::span<const double> week_values(int week) const;
  /// Number of weeks (from week 2 on) carrying a range.
  std::size_t range_count() const;
};

/// Weekly counts with their design matrix and distance structure.
/// Immutable once loaded.
struct Dataset {
  std::vector<int> counts;
  /// 1-based year index per week.
  std::vector<int> years;
  int n_years = 0;
  std::vector<std::string> covariate_names;
  /// n rows by (1 + p) columns; column 0 is the intercept.
  Eigen::MatrixXd design;
  DistanceBundle distances;
  /// Non-fatal convention mismatches found while validating.
  std::vector<std::string> warnings;

  int n_weeks() const { return static_cast<int>(counts.size()); }
  int n_covariates() const { return static_cast<int>(design.cols()) - 1; }
  long total_cases() const;
  /// Index (1..p) of a named covariate, or -1.
  int covariate_index(const std::string& name) const;
};

/// Cross distances per week from per-week case locations.
DistanceBundle build_distance_bundle(const std::vector<std::vector<FarmLocation>>& weekly_case_locations,
                                     std::span<const int> counts, double d_min);

/// Checks every Dataset invariant. Structural violations throw; distance
/// convention mismatches throw only when `strict`, otherwise they are
/// appended to dataset.warnings.
void validate_dataset(Dataset& dataset, bool strict = false);

/// Reads a manifest.json and the CSV files it names (paths relative to the
/// manifest directory).
Dataset load_dataset(const std::filesystem::path& manifest_path, bool strict = false);

/// Writes manifest.json, counts.csv, covariates.csv, distances.csv and
/// dist_index.csv into `directory`.
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);

Eigen::VectorXd covariate_means(const Dataset& dataset);

/// Copy of `dataset` with every non-intercept column centered.
Dataset center_covariates(const Dataset& dataset);

}  // namespace epikernel
