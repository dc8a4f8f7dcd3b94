#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "corrl/adversary.hpp"
#include "corrl/bonus_sim.hpp"
#include "corrl/harness.hpp"
#include "corrl/instances.hpp"
#include "corrl/io.hpp"
#include "corrl/lowerbound.hpp"
#include "corrl/mdp.hpp"

namespace py = pybind11;
using namespace corrl;

namespace {

// Policies cross the boundary as H x S integer matrices.
using PolicyMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

PolicyMatrix to_matrix(const PolicyTable& pi) {
  PolicyMatrix out(pi.horizon(), pi.num_states());
  for (int h = 0; h < pi.horizon(); ++h)
    for (int s = 0; s < pi.num_states(); ++s) out(h, s) = pi(h, s);
  return out;
}

PolicyTable from_matrix(const PolicyMatrix& m) {
  PolicyTable pi(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int h = 0; h < m.rows(); ++h)
    for (int s = 0; s < m.cols(); ++s) pi(h, s) = m(h, s);
  return pi;
}

py::dict values_dict(const ValueTables& v) {
  py::dict d;
  d["v"] = v.v;
  d["q"] = v.q;
  return d;
}

py::dict record_dict(const TrialRecord& r) {
  py::dict d;
  d["n"] = r.n;
  d["trial"] = r.trial;
  d["seed"] = r.seed;
  d["ok"] = r.ok;
  d["error"] = r.error;
  d["subopt_optimal"] = r.subopt_optimal;
  d["subopt_comparator"] = r.subopt_comparator;
  d["validity_margin"] = r.validity_margin;
  d["pessimism_bound"] = r.pessimism_bound;
  d["mean_bonus"] = r.mean_bonus;
  d["corrupted"] = r.corrupted;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Corruption-robust offline RL in linear MDPs";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<LinearMdp>(m, "LinearMdp")
      .def(py::init<>())
      .def_readwrite("num_states", &LinearMdp::num_states)
      .def_readwrite("num_actions", &LinearMdp::num_actions)
      .def_readwrite("horizon", &LinearMdp::horizon)
      .def_readwrite("features", &LinearMdp::features)
      .def_readwrite("measures", &LinearMdp::measures)
      .def_readwrite("reward_param", &LinearMdp::reward_param)
      .def_readwrite("noise_sigma", &LinearMdp::noise_sigma)
      .def_readwrite("init_dist", &LinearMdp::init_dist)
      .def_readwrite("param_bound", &LinearMdp::param_bound)
      .def_property_readonly("dim", &LinearMdp::dim)
      .def("transition_matrix", [](const LinearMdp& mdp) { return transition_matrix(mdp); })
      .def("mean_rewards", [](const LinearMdp& mdp) { return mean_rewards(mdp); })
      .def("to_text", [](const LinearMdp& mdp) { return mdp_to_text(mdp); })
      .def_static("from_text", &mdp_from_text, py::arg("text"));

  m.def("validate_mdp", &validate_mdp, py::arg("mdp"), "Problems found in the MDP; empty when valid.");
  m.def("demo_chain_mdp", &demo_chain_mdp, py::arg("noise_sigma") = 0.5);
  m.def("random_tabular_mdp", &random_tabular_mdp, py::arg("S"), py::arg("A"), py::arg("H"),
        py::arg("noise_sigma"), py::arg("seed"));

  m.def(
      "exact_optimal",
      [](const LinearMdp& mdp) {
        const auto sol = exact_optimal(mdp);
        py::dict d = values_dict(sol.values);
        d["policy"] = to_matrix(sol.policy);
        return d;
      },
      py::arg("mdp"), "Backward induction; returns {'policy', 'v', 'q'}.");
  m.def(
      "exact_policy_values",
      [](const LinearMdp& mdp, const PolicyMatrix& pi) { return values_dict(exact_policy_values(mdp, from_matrix(pi))); },
      py::arg("mdp"), py::arg("policy"));
  m.def(
      "occupancy", [](const LinearMdp& mdp, const PolicyMatrix& pi) { return occupancy(mdp, from_matrix(pi)); },
      py::arg("mdp"), py::arg("policy"), "Step-averaged state-action occupancy.");

  m.def("corruption_budget", &corruption_budget, py::arg("epsilon"), py::arg("n"));
  m.def("sweep_covariance", &sweep_covariance, py::arg("train"), py::arg("ridge"));
  m.def("max_possible_gap", &max_possible_gap, py::arg("test_phi"), py::arg("train"), py::arg("lam"),
        py::arg("epsilon"), py::arg("horizon"));
  m.def(
      "run_bonus_sweep",
      [](int dim, std::size_t n_train, double epsilon, int horizon, double ridge,
         std::optional<std::vector<double>> grid, std::size_t test_points, std::uint64_t seed) {
        SweepConfig cfg;
        cfg.dim = dim;
        cfg.n_train = n_train;
        cfg.epsilon = epsilon;
        cfg.horizon = horizon;
        cfg.ridge = ridge;
        if (grid) cfg.lambda_min_grid = *grid;
        cfg.test_points = test_points;
        cfg.seed = seed;
        py::list rows;
        for (const auto& r : run_bonus_sweep(cfg)) {
          py::dict d;
          d["lambda_min"] = r.lambda_min;
          d["neg_log_lambda_min"] = r.neg_log_lambda_min;
          d["mean_max_gap"] = r.mean_max_gap;
          d["mean_bonus1"] = r.mean_bonus1;
          d["mean_bonus2"] = r.mean_bonus2;
          rows.append(d);
        }
        return rows;
      },
      py::arg("dim") = 3, py::arg("n_train") = 100000, py::arg("epsilon") = 0.01, py::arg("horizon") = 1,
      py::arg("ridge") = 1.0, py::arg("lambda_min_grid") = std::nullopt, py::arg("test_points") = 1000,
      py::arg("seed") = 0);

  m.def(
      "minimax_gap",
      [](int S, int A, int H, double epsilon) {
        const auto rep = verify_minimax_gap(build_tree_pair(S, A, H, epsilon));
        py::dict d;
        d["v_star_m"] = rep.v_star_m;
        d["v_star_mprime"] = rep.v_star_mprime;
        d["min_simultaneous_regret"] = rep.min_simultaneous_regret;
        d["bound"] = rep.bound;
        d["exhaustive"] = rep.exhaustive;
        d["holds"] = rep.holds;
        return d;
      },
      py::arg("S"), py::arg("A"), py::arg("H"), py::arg("epsilon"));
  m.def(
      "tree_indistinguishability",
      [](int S, int A, int H, double epsilon, std::size_t n, std::size_t trials, std::uint64_t seed) {
        return simulate_indistinguishability(build_tree_pair(S, A, H, epsilon), n, trials, seed).frequency();
      },
      py::arg("S"), py::arg("A"), py::arg("H"), py::arg("epsilon"), py::arg("n"), py::arg("trials"),
      py::arg("seed"), "Fraction of trials in which the attack fits the budget.");
  m.def(
      "bandit_coupling",
      [](double p, double epsilon, std::size_t n, std::size_t trials, std::uint64_t seed) {
        const auto rep = simulate_coupling(build_bandit_pair(p, epsilon), n, trials, seed);
        py::dict d;
        d["collision_frequency"] = rep.collisions.frequency();
        d["mismatch_counts"] = rep.mismatch_counts;
        d["arm1_counts"] = rep.arm1_counts;
        d["monotone"] = rep.monotone;
        return d;
      },
      py::arg("p"), py::arg("epsilon"), py::arg("n"), py::arg("trials"), py::arg("seed"));

  m.def(
      "run_experiment",
      [](const std::string& config_text) {
        const auto bundle = run_experiment(parse_config(config_text));
        py::dict d;
        d["config"] = bundle.config_echo;
        d["failures"] = bundle.failures;
        py::dict files;
        for (const auto& [name, content] : bundle.files) files[py::str(name)] = content;
        d["files"] = files;
        py::list records;
        for (const auto& r : bundle.records) records.append(record_dict(r));
        d["records"] = records;
        return d;
      },
      py::arg("config_text"), "Runs an experiment described by key=value lines.");

  m.def(
      "sha256_hex", [](const py::bytes& b) { return sha256_hex(std::string(b)); }, py::arg("data"));
}
