#include "wrl/cli.hpp"

#include "wrl/trainers.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace wrl::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

struct FieldSpec {
  const char* name;
  Json::value_t type;
  bool required = false;
};

void check_object(const Json& node, const std::string& path,
                  const std::vector<FieldSpec>& fields) {
  if (!node.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, value] : node.items()) {
    const FieldSpec* match = nullptr;
    for (const FieldSpec& f : fields)
      if (key == f.name) { match = &f; break; }
    const std::string field_path = path.empty() ? key : path + "." + key;
    if (!match) throw ConfigError(field_path, "unknown field");
    const bool numeric_ok = match->type == Json::value_t::number_float &&
                            (value.is_number_float() || value.is_number_integer());
    if (!numeric_ok && value.type() != match->type &&
        !(match->type == Json::value_t::number_integer && value.is_number_integer()))
      throw ConfigError(field_path, "wrong type");
  }
  for (const FieldSpec& f : fields)
    if (f.required && !node.contains(f.name))
      throw ConfigError(path.empty() ? f.name : path + "." + f.name, "missing required field");
}

const std::vector<FieldSpec> kStepsFields = {
    {"theta", Json::value_t::number_float},
    {"u", Json::value_t::number_float},
    {"v", Json::value_t::number_float},
    {"rkhs_constant", Json::value_t::number_float},
    {"rkhs_radius", Json::value_t::number_float},
};

const std::vector<FieldSpec> kEmbeddingFields = {
    {"kind", Json::value_t::string},
    {"cost", Json::value_t::string},
};

const std::vector<FieldSpec> kOtFields = {
    {"tol", Json::value_t::number_float},
    {"max_iters", Json::value_t::number_integer},
    {"log_domain", Json::value_t::string},
};

void require_file(const Json& config, const std::string& field, const std::string& config_dir) {
  const std::string rel = config.get<std::string>();
  const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : fs::path(config_dir) / rel;
  if (!fs::exists(p)) throw ConfigError(field, "referenced file does not exist: " + p.string());
}

std::string resolve_path(const std::string& rel, const std::string& config_dir) {
  const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : fs::path(config_dir) / rel;
  return p.string();
}

}  // namespace

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("(config)", "cannot open config file: " + path);
  Json config;
  try {
    in >> config;
  } catch (const std::exception& e) {
    throw ConfigError("(config)", std::string("parse error: ") + e.what());
  }
  return config;
}

void apply_override(Json& config, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("(override)", "expected key=value, got: " + spec);
  const std::string key = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (...) {
    value = raw;  // unquoted strings
  }
  Json* node = &config;
  std::istringstream parts(key);
  std::string part;
  std::vector<std::string> segments;
  while (std::getline(parts, part, '.')) segments.push_back(part);
  if (segments.empty()) throw ConfigError("(override)", "empty key in: " + spec);
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) node = &(*node)[segments[i]];
  (*node)[segments.back()] = std::move(value);
}

void validate_config(const Json& config, const std::string& config_dir) {
  check_object(config, "",
               {{"experiment", Json::value_t::string, true},
                {"seeds", Json::value_t::array},
                {"output_dir", Json::value_t::string},
                {"algorithm", Json::value_t::string},
                {"lambda", Json::value_t::number_float},
                {"rho", Json::value_t::number_float},
                {"episodes", Json::value_t::number_integer},
                {"iterations", Json::value_t::number_integer},
                {"batch_size", Json::value_t::number_integer},
                {"checkpoint_every", Json::value_t::number_integer},
                {"baseline", Json::value_t::boolean},
                {"baseline_rate", Json::value_t::number_float},
                {"diag_ema", Json::value_t::number_float},
                {"mu_ema", Json::value_t::number_float},
                {"convention", Json::value_t::string},
                {"warm_start_duals", Json::value_t::boolean},
                {"kernel_bandwidth", Json::value_t::number_float},
                {"rkhs_cap", Json::value_t::number_integer},
                {"steps", Json::value_t::object},
                {"embedding", Json::value_t::object},
                {"env", Json::value_t::object},
                {"policy", Json::value_t::object},
                {"ot", Json::value_t::object},
                {"mu_file", Json::value_t::string},
                {"nu_file", Json::value_t::string},
                {"method", Json::value_t::string},
                {"cost", Json::value_t::string},
                {"tol", Json::value_t::number_float},
                {"max_iters", Json::value_t::number_integer}});

  const std::string experiment = config.at("experiment").get<std::string>();
  if (experiment != "attract_gridworld" && experiment != "repulse_twogoal" &&
      experiment != "ot_solve")
    throw ConfigError("experiment", "must be attract_gridworld, repulse_twogoal or ot_solve");

  if (config.contains("seeds")) {
    if (config.at("seeds").empty()) throw ConfigError("seeds", "must be non-empty");
    for (const Json& s : config.at("seeds"))
      if (!s.is_number_integer()) throw ConfigError("seeds", "entries must be integers");
  }
  if (config.contains("steps")) check_object(config.at("steps"), "steps", kStepsFields);
  if (config.contains("embedding")) {
    check_object(config.at("embedding"), "embedding", kEmbeddingFields);
    if (config.at("embedding").contains("kind"))
      embedding_kind_from_string(config.at("embedding").at("kind").get<std::string>());
    if (config.at("embedding").contains("cost"))
      cost_kind_from_string(config.at("embedding").at("cost").get<std::string>());
  }
  if (config.contains("ot")) check_object(config.at("ot"), "ot", kOtFields);
  if (config.contains("convention")) {
    const std::string c = config.at("convention").get<std::string>();
    if (c != "entropy_h" && c != "kl_product")
      throw ConfigError("convention", "must be entropy_h or kl_product");
  }

  if (experiment == "attract_gridworld") {
    if (config.contains("algorithm")) {
      const std::string alg = config.at("algorithm").get<std::string>();
      if (alg != "alg1" && alg != "alg4")
        throw ConfigError("algorithm",
                          "attract_gridworld supports alg1 or alg4 (the target is a "
                          "single-atom measure; the finite-support trainers need an "
                          "explicit support)");
    }
    check_object(config.value("env", Json::object()), "env",
                 {{"terrain_file", Json::value_t::string, true},
                  {"timeout", Json::value_t::number_integer},
                  {"timeout_penalty", Json::value_t::number_float}});
    if (!config.contains("env")) throw ConfigError("env", "missing required field");
    require_file(config.at("env").at("terrain_file"), "env.terrain_file", config_dir);
    check_object(config.value("policy", Json::object()), "policy",
                 {{"rbf_bandwidth", Json::value_t::number_float},
                  {"init", Json::value_t::string},
                  {"init_scale", Json::value_t::number_float}});
  } else if (experiment == "repulse_twogoal") {
    check_object(config.value("env", Json::object()), "env",
                 {{"goal1", Json::value_t::array},
                  {"goal2", Json::value_t::array},
                  {"start", Json::value_t::array},
                  {"horizon", Json::value_t::number_integer},
                  {"reward_scale", Json::value_t::number_float},
                  {"step_clip", Json::value_t::number_float}});
    check_object(config.value("policy", Json::object()), "policy",
                 {{"stddev", Json::value_t::number_float},
                  {"hidden", Json::value_t::array},
                  {"init", Json::value_t::string},
                  {"init_scale", Json::value_t::number_float}});
  } else {  // ot_solve
    if (!config.contains("mu_file")) throw ConfigError("mu_file", "missing required field");
    if (!config.contains("nu_file")) throw ConfigError("nu_file", "missing required field");
    require_file(config.at("mu_file"), "mu_file", config_dir);
    require_file(config.at("nu_file"), "nu_file", config_dir);
    if (config.contains("method")) {
      const std::string m = config.at("method").get<std::string>();
      if (m != "sinkhorn" && m != "exact")
        throw ConfigError("method", "must be sinkhorn or exact");
    }
  }
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

// ---------------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------------

WrlConfig wrl_config_from_json(const Json& config, long seed) {
  WrlConfig cfg;
  cfg.lambda = config.value("lambda", -1.0);
  cfg.rho = config.value("rho", 1.0);
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.checkpoint_every = config.value("checkpoint_every", 100);
  cfg.baseline = config.value("baseline", false);
  cfg.baseline_rate = config.value("baseline_rate", 0.05);
  cfg.diag_ema = config.value("diag_ema", 0.05);
  cfg.mu_ema = config.value("mu_ema", 0.05);
  cfg.warm_start_duals = config.value("warm_start_duals", true);
  cfg.kernel_bandwidth = config.value("kernel_bandwidth", 0.0);
  cfg.rkhs_cap = config.value("rkhs_cap", std::size_t{5000});
  cfg.convention = config.value("convention", std::string("kl_product")) == "entropy_h"
                       ? ValueConvention::EntropyH
                       : ValueConvention::KlProduct;
  if (config.contains("steps")) {
    const Json& s = config.at("steps");
    cfg.steps.theta = s.value("theta", cfg.steps.theta);
    cfg.steps.u = s.value("u", cfg.steps.u);
    cfg.steps.v = s.value("v", cfg.steps.v);
    cfg.steps.rkhs_constant = s.value("rkhs_constant", cfg.steps.rkhs_constant);
    cfg.steps.rkhs_radius = s.value("rkhs_radius", cfg.steps.rkhs_radius);
  }
  if (config.contains("ot")) {
    const Json& o = config.at("ot");
    cfg.ot.tol = o.value("tol", cfg.ot.tol);
    cfg.ot.max_iters = o.value("max_iters", cfg.ot.max_iters);
    const std::string ld = o.value("log_domain", std::string("auto"));
    cfg.ot.log_domain = ld == "on"    ? LogDomainMode::On
                        : ld == "off" ? LogDomainMode::Off
                                      : LogDomainMode::Auto;
  }
  return cfg;
}

PolicyParams gridworld_policy(const GridworldSpec& grid, const Json& config, long seed) {
  RbfSoftmaxShape shape;
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x) shape.centers.push_back(point2(x, y));
  const Json policy = config.value("policy", Json::object());
  shape.bandwidth = policy.value("rbf_bandwidth", 1.0);
  shape.actions = 4;
  PolicyParams params = PolicyParams::rbf_softmax(std::move(shape));
  if (policy.value("init", std::string("zeros")) == "gaussian") {
    Rng init(stream_seed(static_cast<std::uint64_t>(seed), 31));
    const double scale = policy.value("init_scale", 0.1);
    for (Eigen::Index i = 0; i < params.theta.size(); ++i)
      params.theta(i) = scale * init.normal();
  }
  return params;
}

PolicyParams twogoal_policy(const Json& config, long seed, std::uint64_t init_stream) {
  const Json policy = config.value("policy", Json::object());
  MlpGaussianShape shape;
  shape.input = 2;
  shape.output = 2;
  shape.hidden = policy.value("hidden", std::vector<int>{15, 15});
  shape.stddev = policy.value("stddev", 0.3);
  PolicyParams params = PolicyParams::mlp_gaussian(std::move(shape));
  if (policy.value("init", std::string("gaussian")) == "gaussian") {
    Rng init(stream_seed(static_cast<std::uint64_t>(seed), init_stream));
    const double scale = policy.value("init_scale", 0.1);
    for (Eigen::Index i = 0; i < params.theta.size(); ++i)
      params.theta(i) = scale * init.normal();
  }
  return params;
}

Point point_from_json(const Json& arr) {
  Point p(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) p(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return p;
}

struct SeedOutput {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  Json checkpoints;  // final policy parameters, when the experiment trains any
};

SeedOutput run_one_seed(const Json& config, const std::string& config_dir, long seed) {
  const std::string experiment = config.at("experiment").get<std::string>();
  WrlConfig cfg = wrl_config_from_json(config, seed);

  if (experiment == "attract_gridworld") {
    const Json& env = config.at("env");
    GridworldSpec grid =
        load_terrain(resolve_path(env.at("terrain_file").get<std::string>(), config_dir));
    grid.timeout = env.value("timeout", 50);
    grid.timeout_penalty = env.value("timeout_penalty", -10.0);
    grid.validate();
    const GridworldMdp mdp(grid);
    const CostKind cost =
        cost_kind_from_string(config.value("embedding", Json::object()).value("cost", "l1"));
    cfg.embedding = visit_distribution_spec(grid, cost);
    cfg.iterations = config.value("episodes", 12000L);
    const DiscreteMeasure target = target_measure_from_optimal_path(grid);
    PolicyParams params = gridworld_policy(grid, config, seed);

    TrainResult result = [&] {
      if (config.value("algorithm", std::string("alg4")) == "alg1") {
        const Point atom = target.atoms().front();
        NuSampler sampler = [atom](Rng&) { return atom; };
        return train_alg1_continuous(mdp, std::move(params), sampler, cfg);
      }
      return train_alg4_semidiscrete(mdp, std::move(params), target, cfg);
    }();
    return {result.log.columns, result.log.rows, to_json(result.params)};
  }

  if (experiment == "repulse_twogoal") {
    const Json env = config.value("env", Json::object());
    TwoGoalSpec spec;
    if (env.contains("goal1")) spec.g1 = point_from_json(env.at("goal1"));
    if (env.contains("goal2")) spec.g2 = point_from_json(env.at("goal2"));
    if (env.contains("start")) spec.start = point_from_json(env.at("start"));
    spec.horizon = env.value("horizon", 20);
    spec.reward_scale = env.value("reward_scale", 1.0);
    spec.step_clip = env.value("step_clip", 0.5);
    spec.validate();
    const TwoGoalMdp mdp(spec);
    cfg.embedding.kind = EmbeddingKind::MeanX;
    if (config.contains("embedding")) {
      const Json& emb = config.at("embedding");
      cfg.embedding.kind = embedding_kind_from_string(emb.value("kind", "mean_x"));
      cfg.embedding.cost_kind = cost_kind_from_string(emb.value("cost", "l1"));
    }
    cfg.iterations = config.value("iterations", 150L);
    cfg.batch_size = config.value("batch_size", 100);
    cfg.checkpoint_every = 1;
    PolicyParams a = twogoal_policy(config, seed, 31);
    PolicyParams b = twogoal_policy(config, seed, 32);
    PairTrainResult result = train_repulsive_pair(mdp, std::move(a), std::move(b), cfg);
    return {result.log.columns, result.log.rows,
            Json{{"policy_a", to_json(result.params_a)}, {"policy_b", to_json(result.params_b)}}};
  }

  // ot_solve
  const DiscreteMeasure mu =
      load_measure(resolve_path(config.at("mu_file").get<std::string>(), config_dir));
  const DiscreteMeasure nu =
      load_measure(resolve_path(config.at("nu_file").get<std::string>(), config_dir));
  const CostKind cost = cost_kind_from_string(config.value("cost", "euclidean"));
  const CostMatrix c = build_cost_matrix(mu, nu, cost);
  SeedOutput out;
  out.columns = {"value", "iterations", "converged"};
  if (config.value("method", std::string("sinkhorn")) == "exact") {
    const auto [coupling, value] = exact_emd(mu, nu, c);
    out.rows.push_back({value, 0.0, 1.0});
  } else {
    OtConfig ot;
    ot.rho = config.value("rho", 1.0);
    ot.tol = config.value("tol", 1e-8);
    ot.max_iters = config.value("max_iters", 10000);
    ot.convention = config.value("convention", std::string("entropy_h")) == "kl_product"
                        ? ValueConvention::KlProduct
                        : ValueConvention::EntropyH;
    const SinkhornResult result = sinkhorn(mu, nu, c, ot);
    out.rows.push_back({result.primal_value, static_cast<double>(result.iterations),
                        result.converged ? 1.0 : 0.0});
  }
  return out;
}

std::string csv_text(const SeedOutput& data, long seed) {
  std::ostringstream os;
  os << "seed";
  for (const std::string& col : data.columns) os << "," << col;
  os << "\n";
  for (const auto& row : data.rows) {
    os << seed;
    for (double v : row) os << "," << format_double(v);
    os << "\n";
  }
  return os.str();
}

}  // namespace

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  Json config;
  std::string config_dir;
  std::string stem;
  try {
    config = load_config_file(options.config_path);
    config_dir = fs::path(options.config_path).parent_path().string();
    stem = fs::path(options.config_path).stem().string();
    for (const std::string& spec : options.overrides) apply_override(config, spec);
    if (options.seed) config["seeds"] = Json::array({*options.seed});
    if (!config.contains("seeds")) config["seeds"] = Json::array({1});
    if (!options.out_dir.empty()) config["output_dir"] = options.out_dir;
    if (!config.contains("output_dir")) {
      const char* env_dir = std::getenv("WRL_OUT_DIR");
      config["output_dir"] = env_dir ? env_dir : "out";
    }
    validate_config(config, config_dir);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  const fs::path out_dir(config.at("output_dir").get<std::string>());
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  std::vector<long> seeds;
  for (const Json& s : config.at("seeds")) seeds.push_back(s.get<long>());

  std::mutex failure_mutex;
  std::string nan_message;
  std::string other_failure;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t idx = next.fetch_add(1); idx < seeds.size(); idx = next.fetch_add(1)) {
      const long seed = seeds[idx];
      const auto started = std::chrono::steady_clock::now();
      try {
        const SeedOutput data = run_one_seed(config, config_dir, seed);
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
        Json effective = config;
        effective["seeds"] = Json::array({seed});
        Json manifest{{"config_hash", fnv1a64(effective.dump())},
                      {"seed", seed},
                      {"versions", Json{{"wrl", kVersion}, {"compiler", __VERSION__}}},
                      {"wall_clock_ms", elapsed},
                      {"config", effective}};
        const std::string base = stem + "_seed" + std::to_string(seed);
        std::ofstream csv(out_dir / (base + ".csv"));
        csv << csv_text(data, seed);
        std::ofstream mf(out_dir / (base + ".manifest.json"));
        mf << manifest.dump(2) << "\n";
        if (!data.checkpoints.is_null()) {
          std::ofstream ck(out_dir / (base + ".params.json"));
          ck << data.checkpoints.dump(2) << "\n";
        }
      } catch (const NanAbort& e) {
        const std::string base = stem + "_seed" + std::to_string(seed);
        const fs::path snapshot = out_dir / (base + ".nan_snapshot.json");
        std::ofstream snap(snapshot);
        snap << e.snapshot() << "\n";
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (nan_message.empty())
          nan_message = std::string(e.what()) + "; snapshot: " + snapshot.string();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (other_failure.empty()) other_failure = e.what();
      }
    }
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1 || seeds.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<std::size_t>(jobs, seeds.size()); ++t)
      pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!nan_message.empty()) {
    err << "error: " << nan_message << "\n";
    return 3;
  }
  if (!other_failure.empty()) {
    err << "error: " << other_failure << "\n";
    return 1;
  }
  out << "wrote " << seeds.size() << " run(s) to " << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Plot
// ---------------------------------------------------------------------------

namespace {

struct Series {
  std::string name;
  std::vector<double> x, y;
  double lambda = std::numeric_limits<double>::quiet_NaN();
};

Series read_csv_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  Series s;
  s.name = fs::path(path).stem().string();
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty CSV: " + path);
  std::vector<std::string> cols;
  std::istringstream hs(header);
  std::string col;
  while (std::getline(hs, col, ',')) cols.push_back(col);
  int x_col = -1, y_col = -1;
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    if (cols[i] == "episode" || cols[i] == "iteration") x_col = i;
    if (cols[i] == "return" || cols[i] == "return_a") y_col = i;
  }
  if (x_col < 0 || y_col < 0)
    throw std::runtime_error("CSV schema mismatch (need episode/iteration and return columns): " +
                             path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != cols.size()) throw std::runtime_error("ragged CSV row in: " + path);
    s.x.push_back(vals[x_col]);
    s.y.push_back(vals[y_col]);
  }
  if (s.x.empty()) throw std::runtime_error("CSV has no data rows: " + path);

  const fs::path manifest = fs::path(path).parent_path() /
                            (fs::path(path).stem().string() + ".manifest.json");
  if (fs::exists(manifest)) {
    std::ifstream mf(manifest);
    Json j;
    mf >> j;
    if (j.contains("config") && j.at("config").contains("lambda"))
      s.lambda = j.at("config").at("lambda").get<double>();
  }
  return s;
}

}  // namespace

int plot(const std::vector<std::string>& csv_paths, const std::string& out_svg,
         std::ostream& err) {
  std::vector<Series> series;
  try {
    if (csv_paths.empty()) throw std::runtime_error("no CSVs given");
    for (const std::string& path : csv_paths) series.push_back(read_csv_series(path));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  double xmin = series[0].x[0], xmax = xmin, ymin = series[0].y[0], ymax = ymin;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double width = 800, height = 500, left = 70, right = 20, top = 20, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * plot_h; };

  const char* palette[6] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    svg << "<text x=\"" << sx(xv) << "\" y=\"" << top + plot_h + 20
        << "\" font-size=\"11\" text-anchor=\"middle\">" << format_label(xv) << "</text>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << sy(yv) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << format_label(yv) << "</text>\n";
  }
  int idx = 0;
  for (const Series& s : series) {
    const char* colour = palette[2 + (idx % 4)];
    if (!std::isnan(s.lambda)) colour = s.lambda < 0 ? palette[0] : (s.lambda == 0 ? palette[1] : palette[2]);
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << left + 10 << "\" y=\"" << top + 15 + 15 * idx
        << "\" font-size=\"11\" fill=\"" << colour << "\">" << s.name << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";

  std::ofstream out(out_svg);
  if (!out) {
    err << "error: cannot write " << out_svg << "\n";
    return 1;
  }
  out << svg.str();
  return 0;
}

// ---------------------------------------------------------------------------
// OT solve
// ---------------------------------------------------------------------------

int ot(const OtOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const DiscreteMeasure mu = load_measure(options.mu_path);
    const DiscreteMeasure nu = load_measure(options.nu_path);
    const CostMatrix c = build_cost_matrix(mu, nu, cost_kind_from_string(options.cost));
    Json record;
    auto dump_vector = [](const Vector& v) {
      Json arr = Json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
      return arr;
    };
    if (options.method == "exact") {
      const ExactEmdResult result = exact_emd_full(mu, nu, c);
      record = Json{{"value", result.value},
                    {"iterations", 0},
                    {"converged", true},
                    {"dual_u", dump_vector(result.potential_u)},
                    {"dual_v", dump_vector(result.potential_v)}};
    } else if (options.method == "sinkhorn") {
      OtConfig cfg;
      cfg.rho = options.rho;
      cfg.tol = options.tol;
      cfg.max_iters = options.max_iters;
      cfg.convention = options.convention == "kl_product" ? ValueConvention::KlProduct
                                                          : ValueConvention::EntropyH;
      const SinkhornResult result = sinkhorn(mu, nu, c, cfg);
      record = Json{{"value", result.primal_value},
                    {"iterations", result.iterations},
                    {"converged", result.converged},
                    {"dual_u", dump_vector(result.dual_u)},
                    {"dual_v", dump_vector(result.dual_v)}};
    } else {
      err << "error: unknown method '" << options.method << "' (sinkhorn or exact)\n";
      return 2;
    }
    out << record.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace wrl::cli
