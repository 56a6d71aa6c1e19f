// Command-line frontend for the certified receding-horizon control toolkit:
// dataset generation, lifted-model identification, condensing, certified QP
// solves, closed-loop simulation, and iteration benchmarking.
//
// Exit codes: 0 success, 1 unexpected failure, 2 schema/configuration error,
// 3 numerical breakdown (factorization failure, rank deficiency, plant
// blow-up), 4 a solve exhausted its iteration certificate.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "koopmpc/boxqp/io.hpp"
#include "koopmpc/boxqp/solver.hpp"
#include "koopmpc/kdv/closed_loop.hpp"
#include "koopmpc/kdv/plant.hpp"
#include "koopmpc/koopman/io.hpp"
#include "koopmpc/koopman/lift.hpp"
#include "koopmpc/mpc/condense.hpp"
#include "koopmpc/mpc/io.hpp"
#include "koopmpc/util/csv.hpp"
#include "koopmpc/util/errors.hpp"
#include "koopmpc/util/json_io.hpp"
#include "koopmpc/util/manifest.hpp"
#include "koopmpc/util/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace koopmpc;

namespace {

class WallTimer {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double number_or(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  return util::require_number(j, key);
}

int64_t integer_or(const json& j, const std::string& key, int64_t fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  return util::require_index(j, key);
}

uint64_t seed_or(const json& j, const std::string& key, uint64_t fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  if (!j[key].is_number_unsigned()) {
    throw SchemaError("field '" + key + "' must be a nonnegative integer");
  }
  return j[key].get<uint64_t>();
}

// Misspelled or unsupported keys fail loudly instead of being ignored.
void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const char* candidate : known) {
      if (key == candidate) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw SchemaError(where + ": unknown field '" + key + "'");
    }
  }
}

kdv::KdvConfig kdv_config_from_json(const json& j) {
  kdv::KdvConfig config;
  config.n_grid = integer_or(j, "n_grid", config.n_grid);
  config.dt = number_or(j, "dt", config.dt);
  config.domain_half_length = number_or(j, "domain_half_length", config.domain_half_length);
  config.forcing_width = number_or(j, "forcing_width", config.forcing_width);
  config.validate();
  return config;
}

json kdv_config_to_json(const kdv::KdvConfig& config) {
  return json{{"n_grid", config.n_grid},
              {"dt", config.dt},
              {"domain_half_length", config.domain_half_length},
              {"forcing_width", config.forcing_width}};
}

fs::path sibling_manifest(const fs::path& output_file) {
  fs::path manifest = output_file;
  manifest.replace_extension();
  manifest += ".manifest.json";
  return manifest;
}

koopman::SnapshotSet head_rows(const koopman::SnapshotSet& s, Eigen::Index rows) {
  koopman::SnapshotSet out;
  out.states = s.states.topRows(rows);
  out.inputs = s.inputs.topRows(rows);
  out.next_states = s.next_states.topRows(rows);
  return out;
}

// ---------------------------------------------------------------------------

int run_gen_data(const fs::path& config_path, std::optional<uint64_t> seed_flag,
                 const fs::path& out_dir) {
  WallTimer timer;
  const json cfg = util::load_json(config_path);
  reject_unknown_keys(cfg,
                      {"n_grid", "dt", "domain_half_length", "forcing_width", "n_trajectories",
                       "trajectory_length", "seed"},
                      "gen-data config");
  const kdv::KdvConfig plant_config = kdv_config_from_json(cfg);
  const int n_trajectories = static_cast<int>(integer_or(cfg, "n_trajectories", 1000));
  const int trajectory_length = static_cast<int>(integer_or(cfg, "trajectory_length", 200));
  const uint64_t seed = seed_flag.value_or(seed_or(cfg, "seed", 1));

  const kdv::DatasetResult result =
      kdv::generate_dataset(plant_config, n_trajectories, trajectory_length, seed);

  fs::create_directories(out_dir);
  const fs::path snapshot_file = out_dir / "snapshots.csv";
  koopman::save_snapshots(result.snapshots, snapshot_file);

  json effective = kdv_config_to_json(plant_config);
  effective["n_trajectories"] = n_trajectories;
  effective["trajectory_length"] = trajectory_length;
  util::write_json(out_dir / "manifest.json",
                   util::make_manifest("gen-data", effective, json{{"root", seed}},
                                       {config_path}, {snapshot_file}, timer.seconds()));

  std::cout << "gen-data: " << result.snapshots.size() << " transition samples ("
            << n_trajectories << " trajectories, " << result.discarded_trajectories
            << " discarded) -> " << snapshot_file.string() << "\n";
  return 0;
}

int run_fit(const fs::path& data_path, const fs::path& config_path,
            std::optional<uint64_t> seed_flag, const fs::path& out_file) {
  WallTimer timer;
  const json cfg = util::load_json(config_path);
  reject_unknown_keys(
      cfg, {"n_rbf", "ridge", "center_lo", "center_hi", "train_fraction", "seed"},
      "fit config");
  const Eigen::Index n_rbf = integer_or(cfg, "n_rbf", 200);
  const double ridge = number_or(cfg, "ridge", 1e-8);
  const double center_lo = number_or(cfg, "center_lo", -1.0);
  const double center_hi = number_or(cfg, "center_hi", 1.0);
  const double train_fraction = number_or(cfg, "train_fraction", 0.9);
  const uint64_t seed = seed_flag.value_or(seed_or(cfg, "seed", 1));
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw SchemaError("field 'train_fraction' must lie in (0, 1]");
  }

  const koopman::SnapshotSet snapshots = koopman::load_snapshots(data_path);
  const Eigen::Index n_train = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(train_fraction * snapshots.size())));

  koopman::LiftSpec lift_spec;
  lift_spec.state_dim = snapshots.state_dim();
  lift_spec.centers =
      koopman::sample_rbf_centers(n_rbf, lift_spec.state_dim, center_lo, center_hi, seed);

  koopman::KoopmanModel model =
      koopman::fit_edmd(head_rows(snapshots, n_train), lift_spec, ridge);
  model.center_seed = seed;

  const double train_rms = koopman::one_step_state_rms(model, snapshots, 0, n_train);
  const double holdout_rms =
      n_train < snapshots.size()
          ? koopman::one_step_state_rms(model, snapshots, n_train, snapshots.size() - n_train)
          : train_rms;

  if (out_file.has_parent_path()) {
    fs::create_directories(out_file.parent_path());
  }
  koopman::save_model(model, out_file);

  json effective{{"n_rbf", n_rbf},          {"ridge", ridge},
                 {"center_lo", center_lo},  {"center_hi", center_hi},
                 {"train_fraction", train_fraction}, {"train_rows", n_train},
                 {"train_rms", train_rms},  {"holdout_rms", holdout_rms}};
  util::write_json(sibling_manifest(out_file),
                   util::make_manifest("fit", effective, json{{"centers", seed}},
                                       {data_path, config_path}, {out_file}, timer.seconds()));

  std::cout << "fit: n_psi=" << model.lifted_dim() << " train_rms=" << train_rms
            << " holdout_rms=" << holdout_rms << " -> " << out_file.string() << "\n";
  return 0;
}

int run_condense(const fs::path& model_path, const fs::path& config_path,
                 std::optional<int> horizon_flag, std::optional<double> rho_flag,
                 std::optional<double> epsilon_flag, const fs::path& out_file) {
  WallTimer timer;
  const koopman::KoopmanModel model = koopman::load_model(model_path);
  const json cfg = util::load_json(config_path);
  reject_unknown_keys(cfg,
                      {"horizon", "rho", "state_weight", "input_weight", "move_weight",
                       "state_ref", "input_ref", "epsilon", "initial_state"},
                      "condense config");

  mpc::NmpcSpec spec = mpc::spec_from_json(cfg, model.state_dim(), model.input_dim());
  if (horizon_flag) {
    spec.horizon = *horizon_flag;
  }
  if (rho_flag) {
    spec.rho = *rho_flag;
  }
  spec.validate();
  const double epsilon = epsilon_flag.value_or(number_or(cfg, "epsilon", 1e-6));

  Eigen::VectorXd initial_state = Eigen::VectorXd::Zero(model.state_dim());
  if (cfg.contains("initial_state")) {
    initial_state = util::vector_from_json(cfg["initial_state"], "initial_state");
    if (initial_state.size() != model.state_dim()) {
      throw SchemaError("field 'initial_state' length disagrees with the model");
    }
  }

  const mpc::PredictionStack stack = mpc::build_prediction_stack(model, spec.horizon);
  const Eigen::VectorXd lifted = koopman::lift(model.lift, initial_state);
  const mpc::KoopmanBoxQp qp(spec, stack, lifted);

  if (out_file.has_parent_path()) {
    fs::create_directories(out_file.parent_path());
  }
  boxqp::save_problem(qp.problem(), epsilon, out_file);

  fs::path sidecar = out_file;
  sidecar.replace_extension();
  sidecar += ".sidecar.json";
  util::write_json(sidecar, json{{"E", util::matrix_to_json(stack.free_response)},
                                 {"F", util::matrix_to_json(stack.forced_response)},
                                 {"spec", mpc::spec_to_json(spec)}});

  json effective = mpc::spec_to_json(spec);
  effective["epsilon"] = epsilon;
  util::write_json(sibling_manifest(out_file),
                   util::make_manifest("condense", effective, json::object(),
                                       {model_path, config_path}, {out_file, sidecar},
                                       timer.seconds()));

  std::cout << "condense: n=" << qp.problem().dim() << " (inputs "
            << spec.horizon * model.input_dim() << ", states "
            << spec.horizon * model.state_dim() << ") -> " << out_file.string() << "\n";
  return 0;
}

int run_solve(const fs::path& problem_path, std::optional<double> epsilon_flag, bool force_dense,
              bool refine, const fs::path& out_file) {
  WallTimer timer;
  boxqp::ProblemFile loaded = boxqp::load_problem(problem_path);
  const double epsilon = epsilon_flag.value_or(loaded.epsilon);

  boxqp::SolveOptions options;
  options.force_dense = force_dense;
  options.iterative_refinement = refine;
  const boxqp::SolveReport report = boxqp::solve(loaded.problem, epsilon, options);

  if (out_file.has_parent_path()) {
    fs::create_directories(out_file.parent_path());
  }
  util::write_json(out_file, boxqp::report_to_json(report));

  const json effective{{"epsilon", epsilon},
                       {"force_dense", force_dense},
                       {"iterative_refinement", refine}};
  util::write_json(sibling_manifest(out_file),
                   util::make_manifest("solve", effective, json::object(), {problem_path},
                                       {out_file}, timer.seconds()));

  std::cout << "solve: iterations=" << report.iterations << "/" << report.certified_bound
            << " final_gap=" << report.final_gap << " -> " << out_file.string() << "\n";
  return report.converged ? 0 : 4;
}

int run_simulate(const fs::path& model_path, const fs::path& config_path,
                 std::optional<int> horizon_flag, std::optional<double> rho_flag,
                 std::optional<double> epsilon_flag, const fs::path& out_dir) {
  WallTimer timer;
  const koopman::KoopmanModel model = koopman::load_model(model_path);
  const json cfg = util::load_json(config_path);
  reject_unknown_keys(cfg, {"kdv", "nmpc", "duration", "epsilon", "reference"},
                      "simulate config");
  if (cfg.contains("kdv")) {
    reject_unknown_keys(cfg["kdv"], {"n_grid", "dt", "domain_half_length", "forcing_width"},
                        "simulate config, kdv section");
  }
  if (cfg.contains("reference")) {
    reject_unknown_keys(cfg["reference"], {"amplitude", "period"},
                        "simulate config, reference section");
  }

  const kdv::KdvConfig plant_config =
      kdv_config_from_json(cfg.contains("kdv") ? cfg["kdv"] : json::object());
  if (model.state_dim() != plant_config.n_grid) {
    throw SchemaError("model state width disagrees with the configured grid");
  }

  mpc::NmpcSpec spec = mpc::spec_from_json(cfg.contains("nmpc") ? cfg["nmpc"] : json::object(),
                                           model.state_dim(), model.input_dim());
  if (horizon_flag) {
    spec.horizon = *horizon_flag;
  }
  if (rho_flag) {
    spec.rho = *rho_flag;
  }
  spec.validate();

  const double duration = number_or(cfg, "duration", 50.0);
  const double epsilon = epsilon_flag.value_or(number_or(cfg, "epsilon", 1e-6));
  const json reference_cfg = cfg.contains("reference") ? cfg["reference"] : json::object();
  const double amplitude = number_or(reference_cfg, "amplitude", 0.5);
  const double period = number_or(reference_cfg, "period", 25.0);

  const kdv::ClosedLoopLog log = kdv::closed_loop(
      plant_config, model, spec, duration, epsilon,
      [&](double t) {
        return kdv::sinusoidal_reference(t, plant_config.n_grid, amplitude, period);
      });

  fs::create_directories(out_dir);
  const Eigen::Index n_steps = log.times.size();

  const auto with_time = [&](const Eigen::MatrixXd& block) {
    Eigen::MatrixXd table(n_steps, block.cols() + 1);
    table.col(0) = log.times;
    table.rightCols(block.cols()) = block;
    return table;
  };
  const auto numbered_header = [](const std::string& prefix, Eigen::Index count) {
    std::vector<std::string> header{"t"};
    for (Eigen::Index i = 0; i < count; ++i) {
      header.push_back(prefix + "_" + std::to_string(i));
    }
    return header;
  };

  util::write_csv(out_dir / "states.csv", numbered_header("y", plant_config.n_grid),
                  with_time(log.states));
  util::write_csv(out_dir / "inputs.csv", numbered_header("u", model.input_dim()),
                  with_time(log.inputs));
  util::write_csv(out_dir / "references.csv", numbered_header("r", plant_config.n_grid),
                  with_time(log.references));

  Eigen::MatrixXd solve_table(n_steps, 3);
  for (Eigen::Index i = 0; i < n_steps; ++i) {
    solve_table(i, 0) = log.times[i];
    solve_table(i, 1) = static_cast<double>(log.iterations[static_cast<size_t>(i)]);
    solve_table(i, 2) = log.solve_gaps[static_cast<size_t>(i)];
  }
  util::write_csv(out_dir / "solves.csv", {"t", "iterations", "final_gap"}, solve_table);

  json effective{{"kdv", kdv_config_to_json(plant_config)},
                 {"nmpc", mpc::spec_to_json(spec)},
                 {"duration", duration},
                 {"epsilon", epsilon},
                 {"reference", json{{"amplitude", amplitude}, {"period", period}}}};
  util::write_json(
      out_dir / "manifest.json",
      util::make_manifest("simulate", effective, json::object(), {model_path, config_path},
                          {out_dir / "states.csv", out_dir / "inputs.csv",
                           out_dir / "references.csv", out_dir / "solves.csv"},
                          timer.seconds()));

  double mean_iterations = 0.0;
  for (const int rounds : log.iterations) {
    mean_iterations += rounds;
  }
  mean_iterations /= static_cast<double>(log.iterations.empty() ? 1 : log.iterations.size());

  std::cout << "simulate: " << n_steps << " instants, iterations mean=" << mean_iterations
            << " max=" << log.max_iterations() << " certified_bound=" << log.certified_bound
            << " state_overshoot=" << log.state_overshoot << " -> " << out_dir.string() << "\n";
  return log.all_converged ? 0 : 4;
}

Eigen::MatrixXd random_gaussian(Eigen::Index rows, Eigen::Index cols, util::Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = gauss(rng);
    }
  }
  return out;
}

boxqp::BoxQpProblem random_dense_problem(Eigen::Index n, util::Rng& rng) {
  const Eigen::MatrixXd square = random_gaussian(n, n, rng);
  Eigen::MatrixXd hessian = square.transpose() * square / static_cast<double>(n);
  hessian.diagonal().array() += 0.1;

  Eigen::VectorXd h = random_gaussian(n, 1, rng);
  std::uniform_real_distribution<double> log_scale(-1.0, 1.0);
  h *= std::pow(10.0, log_scale(rng));
  return boxqp::BoxQpProblem(boxqp::DenseHessian{std::move(hessian)}, std::move(h));
}

// Lifted-structure instance at the benchmark plant's shape (4 inputs, 100
// relaxed states per horizon step), scaled so the total dimension tracks n.
boxqp::BoxQpProblem random_structured_problem(Eigen::Index n, util::Rng& rng) {
  const Eigen::Index n_u = 4;
  const Eigen::Index n_x = 100;
  const Eigen::Index horizon = std::max<Eigen::Index>(1, (n + (n_u + n_x) / 2) / (n_u + n_x));

  boxqp::KoopmanHessian hessian;
  hessian.rho = 100.0;
  hessian.forced_response =
      random_gaussian(horizon * n_x, horizon * n_u, rng) / std::sqrt(static_cast<double>(n_x));
  const Eigen::MatrixXd square = random_gaussian(horizon * n_u, horizon * n_u, rng);
  hessian.input_block = square.transpose() * square / static_cast<double>(horizon * n_u) +
                        0.1 * Eigen::MatrixXd::Identity(horizon * n_u, horizon * n_u);
  hessian.state_diag = random_gaussian(horizon * n_x, 1, rng).array().abs() + 0.5;

  Eigen::VectorXd h = random_gaussian(horizon * (n_u + n_x), 1, rng);
  return boxqp::BoxQpProblem(std::move(hessian), std::move(h));
}

// Mean seconds per factorize() call, repeating until the measurement window
// is long enough to trust.
double time_factorization(boxqp::NewtonBackend& backend, const boxqp::IpmIterate& iterate) {
  backend.factorize(iterate);  // warm-up
  int repetitions = 1;
  while (true) {
    const auto begin = std::chrono::steady_clock::now();
    for (int i = 0; i < repetitions; ++i) {
      backend.factorize(iterate);
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    if (elapsed > 0.05 || repetitions >= 1024) {
      return elapsed / repetitions;
    }
    repetitions *= 4;
  }
}

int run_bench(std::vector<int> sizes, int instances, uint64_t seed, double epsilon,
              const fs::path& out_file) {
  WallTimer timer;
  if (sizes.empty() || instances < 1) {
    throw SchemaError("bench: need at least one size and one instance");
  }

  Eigen::MatrixXd table(static_cast<Eigen::Index>(sizes.size()), 6);
  Eigen::Index row = 0;
  bool all_converged = true;
  for (const int n : sizes) {
    if (n < 1) {
      throw SchemaError("bench: sizes must be positive");
    }

    int max_rounds = 0;
    double total_rounds = 0.0;
    double contraction_sum = 0.0;
    Eigen::Index contraction_count = 0;
    for (int instance = 0; instance < instances; ++instance) {
      util::Rng rng(util::derive_seed(
          seed, (static_cast<uint64_t>(n) << 32) | static_cast<uint64_t>(instance)));
      const boxqp::BoxQpProblem problem = random_dense_problem(n, rng);
      const boxqp::SolveReport report = boxqp::solve(problem, epsilon);
      all_converged = all_converged && report.converged;
      max_rounds = std::max(max_rounds, report.iterations);
      total_rounds += report.iterations;
      for (const double ratio : report.contraction) {
        contraction_sum += ratio;
        ++contraction_count;
      }
    }

    // Structured-vs-dense factorization timing on one lifted-structure
    // instance of comparable dimension; reported as structured/dense, so
    // values below 1 mean the Schur path wins.
    util::Rng rng(util::derive_seed(seed, (static_cast<uint64_t>(n) << 32) | 0xffffffffull));
    const boxqp::BoxQpProblem structured = random_structured_problem(n, rng);
    const boxqp::IpmIterate probe = initialize(structured).value();
    const auto structured_backend = boxqp::make_newton_backend(structured);
    const auto dense_backend = boxqp::make_newton_backend(structured, /*force_dense=*/true);
    const double time_ratio = time_factorization(*structured_backend, probe) /
                              time_factorization(*dense_backend, probe);

    table(row, 0) = n;
    table(row, 1) = boxqp::certified_iteration_bound(n, epsilon);
    table(row, 2) = max_rounds;
    table(row, 3) = total_rounds / instances;
    table(row, 4) =
        contraction_count > 0 ? contraction_sum / static_cast<double>(contraction_count) : 0.0;
    table(row, 5) = time_ratio;
    std::cout << "bench: n=" << n << " certified_bound=" << table(row, 1)
              << " max_iterations=" << max_rounds << " mean_iterations=" << table(row, 3)
              << " mean_contraction=" << table(row, 4)
              << " structured_over_dense_time=" << time_ratio << "\n";
    ++row;
  }

  if (out_file.has_parent_path()) {
    fs::create_directories(out_file.parent_path());
  }
  util::write_csv(out_file,
                  {"n", "certified_bound", "max_iterations", "mean_iterations",
                   "mean_contraction", "structured_over_dense_time"},
                  table);

  json sizes_json = json::array();
  for (const int n : sizes) {
    sizes_json.push_back(n);
  }
  const json effective{{"sizes", sizes_json}, {"instances", instances}, {"epsilon", epsilon}};
  util::write_json(sibling_manifest(out_file),
                   util::make_manifest("bench", effective, json{{"root", seed}}, {}, {out_file},
                                       timer.seconds()));
  return all_converged ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified receding-horizon control toolkit"};
  app.set_version_flag("--version", util::kToolVersion);
  app.require_subcommand(0, 1);

  std::function<int()> action;

  // gen-data ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "Excite the plant and record transition samples");
  {
    auto config = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    gen->add_option("--config", *config, "Plant/dataset configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* seed_opt = gen->add_option("--seed", *seed, "Root seed (overrides the config)");
    gen->add_option("--out", *out, "Output directory")->required();
    gen->callback([=, &action]() {
      const std::optional<uint64_t> seed_flag =
          seed_opt->count() > 0 ? std::optional<uint64_t>(*seed) : std::nullopt;
      action = [=]() { return run_gen_data(*config, seed_flag, *out); };
    });
  }

  // fit ---------------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "Identify a lifted linear model from samples");
  {
    auto data = std::make_shared<std::string>();
    auto config = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    fit->add_option("--data", *data, "Snapshot CSV from gen-data")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--config", *config, "Dictionary/fit configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* seed_opt = fit->add_option("--seed", *seed, "Center-sampling seed (overrides config)");
    fit->add_option("--out", *out, "Output model file (JSON)")->required();
    fit->callback([=, &action]() {
      const std::optional<uint64_t> seed_flag =
          seed_opt->count() > 0 ? std::optional<uint64_t>(*seed) : std::nullopt;
      action = [=]() { return run_fit(*data, *config, seed_flag, *out); };
    });
  }

  // condense ------------------------------------------------------------------
  auto* condense =
      app.add_subcommand("condense", "Assemble the box QP for one sampling instant");
  {
    auto model = std::make_shared<std::string>();
    auto config = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto horizon = std::make_shared<int>(0);
    auto rho = std::make_shared<double>(0.0);
    auto epsilon = std::make_shared<double>(0.0);
    condense->add_option("--model", *model, "Identified model (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    condense->add_option("--config", *config, "Horizon specification (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* horizon_opt = condense->add_option("--horizon", *horizon, "Override the horizon");
    auto* rho_opt = condense->add_option("--rho", *rho, "Override the relaxation penalty");
    auto* epsilon_opt = condense->add_option("--epsilon", *epsilon, "Override the target gap");
    condense->add_option("--out", *out, "Output problem file (JSON)")->required();
    condense->callback([=, &action]() {
      const auto horizon_flag =
          horizon_opt->count() > 0 ? std::optional<int>(*horizon) : std::nullopt;
      const auto rho_flag = rho_opt->count() > 0 ? std::optional<double>(*rho) : std::nullopt;
      const auto epsilon_flag =
          epsilon_opt->count() > 0 ? std::optional<double>(*epsilon) : std::nullopt;
      action = [=]() {
        return run_condense(*model, *config, horizon_flag, rho_flag, epsilon_flag, *out);
      };
    });
  }

  // solve ---------------------------------------------------------------------
  auto* solve_cmd = app.add_subcommand("solve", "Run the certified interior-point solver");
  {
    auto problem = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto epsilon = std::make_shared<double>(0.0);
    auto dense = std::make_shared<bool>(false);
    auto refine = std::make_shared<bool>(false);
    solve_cmd->add_option("--problem", *problem, "Problem file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* epsilon_opt =
        solve_cmd->add_option("--epsilon", *epsilon, "Target gap (overrides the problem file)");
    solve_cmd->add_flag("--dense", *dense, "Force the dense Newton backend");
    solve_cmd->add_flag("--refine", *refine, "One iterative-refinement pass per Newton solve");
    solve_cmd->add_option("--out", *out, "Output report file (JSON)")->required();
    solve_cmd->callback([=, &action]() {
      const auto epsilon_flag =
          epsilon_opt->count() > 0 ? std::optional<double>(*epsilon) : std::nullopt;
      action = [=]() { return run_solve(*problem, epsilon_flag, *dense, *refine, *out); };
    });
  }

  // simulate ------------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Closed-loop tracking run on the plant");
  {
    auto model = std::make_shared<std::string>();
    auto config = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto horizon = std::make_shared<int>(0);
    auto rho = std::make_shared<double>(0.0);
    auto epsilon = std::make_shared<double>(0.0);
    simulate->add_option("--model", *model, "Identified model (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--config", *config, "Simulation configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* horizon_opt = simulate->add_option("--horizon", *horizon, "Override the horizon");
    auto* rho_opt = simulate->add_option("--rho", *rho, "Override the relaxation penalty");
    auto* epsilon_opt = simulate->add_option("--epsilon", *epsilon, "Override the target gap");
    simulate->add_option("--out", *out, "Output directory")->required();
    simulate->callback([=, &action]() {
      const auto horizon_flag =
          horizon_opt->count() > 0 ? std::optional<int>(*horizon) : std::nullopt;
      const auto rho_flag = rho_opt->count() > 0 ? std::optional<double>(*rho) : std::nullopt;
      const auto epsilon_flag =
          epsilon_opt->count() > 0 ? std::optional<double>(*epsilon) : std::nullopt;
      action = [=]() {
        return run_simulate(*model, *config, horizon_flag, rho_flag, epsilon_flag, *out);
      };
    });
  }

  // bench ---------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Iteration counts vs certificates on random QPs");
  {
    auto sizes = std::make_shared<std::vector<int>>(std::vector<int>{2, 8, 32, 128});
    auto instances = std::make_shared<int>(5);
    auto seed = std::make_shared<uint64_t>(1);
    auto epsilon = std::make_shared<double>(1e-6);
    auto out = std::make_shared<std::string>();
    bench->add_option("--sizes", *sizes, "Problem sizes")->delimiter(',');
    bench->add_option("--instances", *instances, "Instances per size");
    bench->add_option("--seed", *seed, "Root seed");
    bench->add_option("--epsilon", *epsilon, "Target gap");
    bench->add_option("--out", *out, "Output CSV")->required();
    bench->callback([=, &action]() {
      action = [=]() { return run_bench(*sizes, *instances, *seed, *epsilon, *out); };
    });
  }

  CLI11_PARSE(app, argc, argv);

  if (!action) {
    std::cout << app.help();
    return 0;
  }

  try {
    return action();
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const boxqp::NumericalBreakdown& e) {
    std::cerr << "numerical breakdown: " << e.what() << "\n";
    return 3;
  } catch (const koopman::RankDeficiencyError& e) {
    std::cerr << "numerical breakdown: " << e.what() << "\n";
    return 3;
  } catch (const kdv::BlowupError& e) {
    std::cerr << "numerical breakdown: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
