#include "koopmpc/boxqp/io.hpp"

#include "koopmpc/util/errors.hpp"
#include "koopmpc/util/json_io.hpp"
#include "koopmpc/util/manifest.hpp"

namespace koopmpc::boxqp {

using koopmpc::SchemaError;
using koopmpc::util::matrix_from_json;
using koopmpc::util::require_field;
using koopmpc::util::require_index;
using koopmpc::util::require_number;
using koopmpc::util::matrix_to_json;
using koopmpc::util::vector_to_json;
using koopmpc::util::vector_from_json;

ProblemFile problem_from_json(const nlohmann::json& document) {
  if (!document.is_object()) {
    throw SchemaError("problem document must be a JSON object");
  }
  const Eigen::Index n = require_index(document, "n");
  Eigen::VectorXd h = vector_from_json(require_field(document, "h"), "h");
  if (h.size() != n) {
    throw SchemaError("field 'h' length disagrees with 'n'");
  }

  const auto& hessian = require_field(document, "hessian");
  if (!hessian.is_object()) {
    throw SchemaError("field 'hessian' must be an object");
  }

  HessianForm form;
  if (hessian.contains("dense")) {
    Eigen::MatrixXd m = matrix_from_json(hessian["dense"], "hessian.dense");
    if (m.rows() != n || m.cols() != n) {
      throw SchemaError("field 'hessian.dense' must be n x n");
    }
    form = DenseHessian{std::move(m)};
  } else if (hessian.contains("koopman")) {
    const auto& k = hessian["koopman"];
    if (!k.is_object()) {
      throw SchemaError("field 'hessian.koopman' must be an object");
    }
    KoopmanHessian structured;
    structured.forced_response = matrix_from_json(require_field(k, "F"), "hessian.koopman.F");
    structured.input_block =
        matrix_from_json(require_field(k, "input_block"), "hessian.koopman.input_block");
    structured.state_diag =
        vector_from_json(require_field(k, "state_diag"), "hessian.koopman.state_diag");
    structured.rho = require_number(k, "rho");
    if (structured.dim() != n) {
      throw SchemaError("structured hessian block dimensions disagree with 'n'");
    }
    form = std::move(structured);
  } else {
    throw SchemaError("field 'hessian' must contain either 'dense' or 'koopman'");
  }

  double epsilon = 1e-6;
  if (document.contains("epsilon")) {
    epsilon = require_number(document, "epsilon");
  }

  return ProblemFile{BoxQpProblem(std::move(form), std::move(h)), epsilon};
}

ProblemFile load_problem(const std::filesystem::path& file) {
  return problem_from_json(koopmpc::util::load_json(file));
}

nlohmann::json problem_to_json(const BoxQpProblem& problem, double epsilon) {
  nlohmann::json document;
  document["n"] = problem.dim();
  if (const auto* dense = std::get_if<DenseHessian>(&problem.hessian())) {
    document["hessian"] = {{"dense", matrix_to_json(dense->matrix)}};
  } else {
    const auto& k = std::get<KoopmanHessian>(problem.hessian());
    document["hessian"] = {{"koopman",
                            {{"F", matrix_to_json(k.forced_response)},
                             {"input_block", matrix_to_json(k.input_block)},
                             {"state_diag", vector_to_json(k.state_diag)},
                             {"rho", k.rho}}}};
  }
  document["h"] = vector_to_json(problem.linear_term());
  document["epsilon"] = epsilon;
  return document;
}

void save_problem(const BoxQpProblem& problem, double epsilon,
                  const std::filesystem::path& file) {
  koopmpc::util::write_json(file, problem_to_json(problem, epsilon));
}

nlohmann::json report_to_json(const SolveReport& report) {
  nlohmann::json document;
  document["z_star"] = vector_to_json(report.z_star);
  document["iterations"] = report.iterations;
  document["certified_bound"] = report.certified_bound;
  document["final_gap"] = report.final_gap;
  document["converged"] = report.converged;
  document["mu_trace"] = report.mu_trace;
  document["per_iteration_contraction"] = report.contraction;
  document["min_curvature"] = report.min_curvature;
  document["max_neighborhood_residual"] = report.max_neighborhood_residual;
  document["wall_time_seconds"] = report.wall_time_seconds;
  return document;
}

}  // namespace koopmpc::boxqp
