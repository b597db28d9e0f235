#include "epikernel/data.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "epikernel/csv.hpp"
#include "epikernel/error.hpp"

namespace epikernel {

namespace {

constexpr const char* kCountsFile = "counts.csv";
constexpr const char* kCovariatesFile = "covariates.csv";
constexpr const char* kDistancesFile = "distances.csv";
constexpr const char* kIndexFile = "dist_index.csv";

bool is_single(std::span<const double> values, double v) { return values.size() == 1 && values[0] == v; }

}  // namespace

double pairwise_distance(const FarmLocation& a, const FarmLocation& b) {
  if (!std::isfinite(a.u) || !std::isfinite(a.v) || !std::isfinite(b.u) || !std::isfinite(b.v)) {
    throw ValidationError("farm coordinates must be finite");
  }
  return std::hypot(a.u - b.u, a.v - b.v);
}

bool DistanceBundle::has_range(int week) const {
  return week >= 1 && static_cast<std::size_t>(week) <= ranges.size() && ranges[week - 1].has_value();
}

std::span<const double> DistanceBundle::week_values(int week) const {
  if (!has_range(week)) {
    throw StructuralError("no distance range for week " + std::to_string(week));
  }
  const auto& r = *ranges[week - 1];
  return std::span<const double>(flat).subspan(r.begin, r.size());
}

std::size_t DistanceBundle::range_count() const {
  std::size_t count = 0;
  for (std::size_t i = 1; i < ranges.size(); ++i) count += ranges[i].has_value();
  return count;
}

long Dataset::total_cases() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

int Dataset::covariate_index(const std::string& name) const {
  for (std::size_t j = 0; j < covariate_names.size(); ++j) {
    if (covariate_names[j] == name) return static_cast<int>(j) + 1;
  }
  return -1;
}

DistanceBundle build_distance_bundle(const std::vector<std::vector<FarmLocation>>& weekly_case_locations,
                                     std::span<const int> counts, double d_min) {
  if (weekly_case_locations.size() != counts.size()) {
    throw DimensionError("case locations cover " + std::to_string(weekly_case_locations.size()) +
                         " weeks but counts cover " + std::to_string(counts.size()));
  }
  if (!(d_min > 0.0) || !std::isfinite(d_min)) throw ValidationError("d_min must be positive");

  DistanceBundle bundle;
  bundle.d_min = d_min;
  bundle.ranges.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const int y = counts[i];
    if (y < 0) throw InvariantError("negative count in week " + std::to_string(i + 1));
    const int y_prev = i == 0 ? 0 : counts[i - 1];
    const std::size_t begin = bundle.flat.size();
    if (y == 0) {
      bundle.flat.push_back(d_min);
    } else if (y_prev == 0) {
      bundle.flat.push_back(1.0);
    } else {
      const auto& current = weekly_case_locations[i];
      const auto& previous = weekly_case_locations[i - 1];
      if (current.empty() || previous.empty()) {
        throw InvariantError("week " + std::to_string(i + 1) +
                             " has cases in consecutive weeks but no farm locations");
      }
      for (const auto& k : current) {
        for (const auto& l : previous) bundle.flat.push_back(pairwise_distance(k, l));
      }
    }
    bundle.ranges[i] = IndexRange{begin, bundle.flat.size()};
  }
  return bundle;
}

void validate_dataset(Dataset& dataset, bool strict) {
  const auto n = dataset.counts.size();
  if (n == 0) throw DimensionError("dataset has no weeks");
  if (dataset.years.size() != n) {
    throw DimensionError("years has " + std::to_string(dataset.years.size()) + " entries, counts has " +
                         std::to_string(n));
  }
  if (static_cast<std::size_t>(dataset.design.rows()) != n) {
    throw DimensionError("covariate matrix has " + std::to_string(dataset.design.rows()) + " rows, counts has " +
                         std::to_string(n));
  }
  if (dataset.design.cols() < 1 ||
      static_cast<std::size_t>(dataset.design.cols()) != dataset.covariate_names.size() + 1) {
    throw DimensionError("covariate matrix columns do not match covariate names");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto week = std::to_string(i + 1);
    if (dataset.counts[i] < 0) throw InvariantError("negative count in week " + week);
    if (dataset.design(static_cast<Eigen::Index>(i), 0) != 1.0) {
      throw InvariantError("intercept column is not 1 in week " + week);
    }
    if (!dataset.design.row(static_cast<Eigen::Index>(i)).allFinite()) {
      throw InvariantError("non-finite covariate in week " + week);
    }
    if (dataset.years[i] < 1 || dataset.years[i] > dataset.n_years) {
      throw InvariantError("year index out of 1.." + std::to_string(dataset.n_years) + " in week " + week);
    }
    if (i > 0 && dataset.years[i] < dataset.years[i - 1]) {
      throw InvariantError("years decrease at week " + week);
    }
  }

  auto& bundle = dataset.distances;
  if (!(bundle.d_min > 0.0) || !std::isfinite(bundle.d_min)) throw InvariantError("d_min must be positive");
  for (double d : bundle.flat) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvariantError("distances must be finite and nonnegative");
  }
  if (bundle.ranges.size() != n) {
    throw DimensionError("distance index covers " + std::to_string(bundle.ranges.size()) + " weeks, counts has " +
                         std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int week = static_cast<int>(i) + 1;
    const auto& r = bundle.ranges[i];
    if (!r) {
      if (week >= 2) throw StructuralError("no distance range for week " + std::to_string(week));
      continue;
    }
    if (r->begin >= r->end || r->end > bundle.flat.size()) {
      throw InvariantError("distance range of week " + std::to_string(week) + " is empty or out of bounds");
    }
    if (week < 2) continue;
    const auto values = bundle.week_values(week);
    const int y = dataset.counts[i];
    const int y_prev = dataset.counts[i - 1];
    std::string problem;
    if (y == 0 && !is_single(values, bundle.d_min)) {
      problem = "week " + std::to_string(week) + " has no cases but does not store the d_min sentinel";
    } else if (y > 0 && y_prev == 0 && !is_single(values, 1.0)) {
      problem = "week " + std::to_string(week) + " follows a case-free week but does not store 1 km";
    }
    if (!problem.empty()) {
      if (strict) throw InvariantError(problem);
      dataset.warnings.push_back(problem);
    }
  }
}

Dataset load_dataset(const std::filesystem::path& manifest_path, bool strict) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  const auto dir = manifest_path.parent_path();

  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!manifest.contains(key)) throw ParseError(manifest_path.string() + ": missing key '" + key + "'");
    return manifest.at(key);
  };
  auto file = [&](const char* key, const char* fallback) {
    return dir / (manifest.contains(key) ? manifest.at(key).get<std::string>() : std::string(fallback));
  };

  int n = 0, p = 0, n_years = 0;
  double d_min = 250.0;
  try {
    n = field("n").get<int>();
    p = field("p").get<int>();
    n_years = field("years").get<int>();
    if (manifest.contains("d_min")) d_min = manifest.at("d_min").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  if (n < 1 || p < 0 || n_years < 1) throw DimensionError("manifest declares invalid n, p or years");

  Dataset ds;
  ds.n_years = n_years;

  const auto counts = csv::read(file("counts", kCountsFile));
  {
    const auto cw = counts.column("week"), cc = counts.column("count"), cy = counts.column("year");
    if (counts.rows.size() != static_cast<std::size_t>(n)) {
      throw DimensionError(counts.source.string() + " has " + std::to_string(counts.rows.size()) +
                           " weeks, manifest declares n=" + std::to_string(n));
    }
    for (std::size_t i = 0; i < counts.rows.size(); ++i) {
      if (counts.integer(i, cw) != static_cast<std::int64_t>(i) + 1) {
        throw ParseError(counts.source.string() + ": weeks must run 1..n in order");
      }
      ds.counts.push_back(static_cast<int>(counts.integer(i, cc)));
      ds.years.push_back(static_cast<int>(counts.integer(i, cy)));
    }
  }

  const auto cov = csv::read(file("covariates", kCovariatesFile));
  {
    const auto cw = cov.column("week");
    if (cov.header.size() != static_cast<std::size_t>(p) + 1) {
      throw DimensionError(cov.source.string() + " has " + std::to_string(cov.header.size() - 1) +
                           " covariate columns, manifest declares p=" + std::to_string(p));
    }
    if (cov.rows.size() != static_cast<std::size_t>(n)) {
      throw DimensionError(cov.source.string() + " has " + std::to_string(cov.rows.size()) +
                           " rows, manifest declares n=" + std::to_string(n));
    }
    for (std::size_t c = 0; c < cov.header.size(); ++c) {
      if (c != cw) ds.covariate_names.push_back(cov.header[c]);
    }
    ds.design.resize(n, p + 1);
    for (int i = 0; i < n; ++i) {
      if (cov.integer(i, cw) != i + 1) throw ParseError(cov.source.string() + ": weeks must run 1..n in order");
      ds.design(i, 0) = 1.0;
      int j = 1;
      for (std::size_t c = 0; c < cov.header.size(); ++c) {
        if (c != cw) ds.design(i, j++) = cov.number(i, c);
      }
    }
  }

  const auto dist = csv::read(file("distances", kDistancesFile));
  {
    const auto cd = dist.column("distance");
    for (std::size_t i = 0; i < dist.rows.size(); ++i) ds.distances.flat.push_back(dist.number(i, cd));
  }
  ds.distances.d_min = d_min;
  ds.distances.ranges.assign(n, std::nullopt);

  const auto index = csv::read(file("dist_index", kIndexFile));
  {
    const auto cw = index.column("week"), cs = index.column("start"), ce = index.column("end");
    for (std::size_t i = 0; i < index.rows.size(); ++i) {
      const auto week = index.integer(i, cw);
      const auto start = index.integer(i, cs);
      const auto end = index.integer(i, ce);
      if (week < 1 || week > n) {
        throw DimensionError(index.source.string() + ": week " + std::to_string(week) + " outside 1..n");
      }
      if (ds.distances.ranges[week - 1]) {
        throw ParseError(index.source.string() + ": duplicate week " + std::to_string(week));
      }
      if (start < 1 || end < start || end > static_cast<std::int64_t>(ds.distances.flat.size())) {
        throw InvariantError(index.source.string() + ": range of week " + std::to_string(week) +
                             " is empty or out of bounds");
      }
      ds.distances.ranges[week - 1] =
          IndexRange{static_cast<std::size_t>(start - 1), static_cast<std::size_t>(end)};
    }
  }

  bool strict_checks = strict;
  if (manifest.contains("strict")) strict_checks = strict_checks || manifest.at("strict").get<bool>();
  validate_dataset(ds, strict_checks);
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const auto n = dataset.n_weeks();
  const auto p = dataset.n_covariates();

  nlohmann::json manifest;
  manifest["n"] = n;
  manifest["p"] = p;
  manifest["years"] = dataset.n_years;
  manifest["d_min"] = dataset.distances.d_min;
  manifest["counts"] = kCountsFile;
  manifest["covariates"] = kCovariatesFile;
  manifest["distances"] = kDistancesFile;
  manifest["dist_index"] = kIndexFile;
  {
    std::ofstream out(directory / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (directory / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }

  csv::Writer counts(directory / kCountsFile);
  counts.row({"week", "count", "year"});
  for (int i = 0; i < n; ++i) {
    counts.row({std::to_string(i + 1), std::to_string(dataset.counts[i]), std::to_string(dataset.years[i])});
  }
  counts.close();

  csv::Writer cov(directory / kCovariatesFile);
  std::vector<std::string> header{"week"};
  header.insert(header.end(), dataset.covariate_names.begin(), dataset.covariate_names.end());
  cov.row(header);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (int j = 1; j <= p; ++j) row.push_back(csv::format_shortest(dataset.design(i, j)));
    cov.row(row);
  }
  cov.close();

  csv::Writer dist(directory / kDistancesFile);
  dist.row({"distance"});
  for (double d : dataset.distances.flat) dist.row({csv::format_shortest(d)});
  dist.close();

  csv::Writer index(directory / kIndexFile);
  index.row({"week", "start", "end"});
  for (std::size_t i = 0; i < dataset.distances.ranges.size(); ++i) {
    const auto& r = dataset.distances.ranges[i];
    if (!r) continue;
    index.row({std::to_string(i + 1), std::to_string(r->begin + 1), std::to_string(r->end)});
  }
  index.close();
}

Eigen::VectorXd covariate_means(const Dataset& dataset) {
  const auto p = dataset.n_covariates();
  Eigen::VectorXd means(p);
  for (int j = 0; j < p; ++j) means(j) = dataset.design.col(j + 1).mean();
  return means;
}

Dataset center_covariates(const Dataset& dataset) {
  Dataset out = dataset;
  const auto means = covariate_means(dataset);
  for (int j = 0; j < dataset.n_covariates(); ++j) {
    out.design.col(j + 1).array() -= means(j);
  }
  return out;
}

}  // namespace epikernel
