#pragma once

#include "wrl/serialize.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wrl::cli {

// Configuration problem tied to a specific field; run() maps it to exit 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error("config field '" + field + "': " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

Json load_config_file(const std::string& path);

// Applies one "dotted.path=value" override; the value is parsed as JSON when
// possible, else taken as a string.
void apply_override(Json& config, const std::string& spec);

// Strict validation: unknown fields, missing required fields and type
// mismatches all raise ConfigError naming the field.
void validate_config(const Json& config, const std::string& config_dir);

std::uint64_t fnv1a64(const std::string& text);

struct RunOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // --set key=value
  std::optional<long> seed;            // replaces the config's seed list
  std::string out_dir;                 // overrides config output_dir
  int jobs = 1;
};

// Runs the configured experiment once per seed (up to `jobs` concurrently),
// writing <stem>_seed<k>.csv and <stem>_seed<k>.manifest.json per seed.
// Exit codes: 0 ok, 2 invalid config, 3 NaN abort (snapshot path printed).
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

// Static SVG line chart (return vs. episode/iteration), one polyline per
// CSV. Runs with lambda < 0 and lambda = 0 are styled in distinct colours
// (from the manifest written next to each CSV). Errors out without writing
// when the CSVs disagree on schema or a CSV has no data rows.
int plot(const std::vector<std::string>& csv_paths, const std::string& out_svg,
         std::ostream& err);

struct OtOptions {
  std::string mu_path;
  std::string nu_path;
  std::string method = "sinkhorn";  // or "exact"
  std::string cost = "euclidean";
  std::string convention = "entropy_h";  // or "kl_product"
  double rho = 1.0;
  double tol = 1e-8;
  int max_iters = 10000;
};

// Solves transport between two serialised measures and prints a JSON record
// {value, iterations, converged, dual_u, dual_v}.
int ot(const OtOptions& options, std::ostream& out, std::ostream& err);

}  // namespace wrl::cli
