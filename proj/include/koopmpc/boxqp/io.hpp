#pragma once

#include <json.hpp>

#include <filesystem>

#include "koopmpc/boxqp/problem.hpp"
#include "koopmpc/boxqp/solver.hpp"

namespace koopmpc::boxqp {

/// A problem file bundles the QP data with the target gap it should be
/// solved to.
struct ProblemFile {
  BoxQpProblem problem;
  double epsilon = 1e-6;
};

/// Problem document layout:
///   {
///     "n": <int>,
///     "hessian": {"dense": [[...], ...]}
///             or {"koopman": {"F": [[...], ...], "input_block": [[...], ...],
///                             "state_diag": [...], "rho": <number>}},
///     "h": [...],
///     "epsilon": <number>   (optional, default 1e-6)
///   }
/// Shape or type violations raise SchemaError; values that parse but fail the
/// problem's own validation (e.g. an indefinite hessian) raise
/// std::invalid_argument.
ProblemFile problem_from_json(const nlohmann::json& document);
ProblemFile load_problem(const std::filesystem::path& file);

nlohmann::json problem_to_json(const BoxQpProblem& problem, double epsilon);
void save_problem(const BoxQpProblem& problem, double epsilon,
                  const std::filesystem::path& file);

/// Serializes everything a caller needs to audit a solve: minimizer,
/// iteration count against the certificate, gap, and the per-round traces.
nlohmann::json report_to_json(const SolveReport& report);

}  // namespace koopmpc::boxqp
