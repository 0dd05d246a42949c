#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "chaosbsde/cli.hpp"
#include "chaosbsde/hermite.hpp"
#include "chaosbsde/multiindex.hpp"
#include "chaosbsde/oracles.hpp"
#include "chaosbsde/schemes.hpp"

namespace py = pybind11;
using namespace chaosbsde;
using nlohmann::json;

namespace {

cli::RunConfig parse(const std::string& text) {
  return cli::parse_config(json::parse(text), "config");
}

py::dict row_dict(const cli::ResultRow& r) {
  py::dict d;
  d["scheme"] = r.scheme;
  d["problem"] = r.problem;
  d["m"] = r.m;
  d["M"] = r.M;
  d["P"] = r.P;
  d["N"] = r.N;
  d["Q"] = r.Q;
  d["seed"] = r.seed;
  d["run"] = r.run;
  d["y0"] = r.y0;
  d["z0"] = r.z0;
  d["wall_ms"] = r.wall_ms;
  return d;
}

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "BSDE solver with truncated Wiener chaos projections";
  mod.attr("schema_version") = cli::kSchemaVersion;
  py::register_exception<cli::ConfigError>(mod, "ConfigError", PyExc_ValueError);

  mod.def("hermite", &hermite, py::arg("n"), py::arg("x"));
  mod.def("hermite_all", py::overload_cast<int, double>(&hermite_all), py::arg("n_max"),
          py::arg("x"));
  mod.def("index_count", &index_count, py::arg("order"), py::arg("width"));
  mod.def(
      "multi_indices",
      [](int P, int M, int d) {
        const IndexSet s(P, M, d);
        std::vector<std::vector<int>> out;
        for (std::size_t r = 0; r < s.size(); ++r) {
          const auto deg = s.degrees(r);
          out.emplace_back(deg.begin(), deg.end());
        }
        return out;
      },
      py::arg("P"), py::arg("M"), py::arg("d") = 1);
  mod.def("normal_cdf", &normal_cdf);
  mod.def("bs_call_price", &bs_call_price, py::arg("s0"), py::arg("strike"), py::arg("r"),
          py::arg("sigma"), py::arg("T"));
  mod.def("bs_call_delta", &bs_call_delta, py::arg("s0"), py::arg("strike"), py::arg("r"),
          py::arg("sigma"), py::arg("T"));
  mod.def("problem_ids", &problem_ids);

  mod.def("normalize_config", [](const std::string& text) {
    return cli::config_to_json(parse(text)).dump();
  });

  mod.def(
      "rows",
      [](const std::string& text, const std::string& command) {
        const auto cfg = parse(text);
        std::vector<cli::ResultRow> rows;
        {
          py::gil_scoped_release release;
          if (command == "run") rows = cli::cmd_run(cfg);
          else if (command == "repeat") rows = cli::cmd_repeat(cfg);
          else if (command == "sweep") rows = cli::cmd_sweep(cfg);
          else throw cli::ConfigError("unknown command " + command);
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("config"), py::arg("command") = "run");

  mod.def("solve", [](const std::string& text) {
    const auto cfg = parse(text);
    const auto problem = make_problem(cfg.problem);
    EulerParams ep;
    ep.m = cfg.m;
    ep.M = cfg.M;
    ep.P = cfg.P;
    ep.N = cfg.N;
    ep.seed = cfg.seed;
    ep.threads = cfg.threads;
    ep.retain = cfg.retain;
    ep.variance = cfg.variance;
    BsdeResult res;
    {
      py::gil_scoped_release release;
      if (cfg.scheme == "picard") {
        PicardParams pp;
        static_cast<EulerParams&>(pp) = ep;
        pp.Q = cfg.Q;
        res = run_picard(problem, pp);
      } else {
        res = run_euler(problem, ep);
      }
    }
    py::dict d;
    d["y0"] = res.y0;
    d["z0"] = res.z0;
    d["wall_ms"] = res.wall_ms;
    py::list steps;
    for (const auto& s : res.steps) {
      py::dict e;
      e["step"] = s.step;
      e["cells"] = s.cells;
      e["indices"] = s.indices;
      e["second_moment"] = s.second_moment;
      e["variance"] = s.variance;
      steps.append(e);
    }
    d["steps"] = steps;
    py::list coeffs;
    for (const auto& c : res.coefficients) coeffs.append(to_array(c.values()));
    d["coefficients"] = coeffs;
    if (res.terminal) d["terminal"] = to_array(res.terminal->values());
    return d;
  });

  mod.def("paths", [](const std::string& text) {
    const auto cfg = parse(text);
    TrajectoryTable t;
    {
      py::gil_scoped_release release;
      t = cli::cmd_paths(cfg);
    }
    const std::size_t cols = t.rows.empty() ? 0 : t.rows.front().size();
    py::array_t<double> a({t.rows.size(), cols});
    auto view = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      for (std::size_t j = 0; j < cols; ++j) view(i, j) = t.rows[i][j];
    }
    std::vector<std::string> names{"path", "t", "Y"};
    for (int l = 1; l <= t.dims; ++l) names.push_back("Z" + std::to_string(l));
    if (t.hedge) {
      for (int l = 1; l <= t.dims; ++l) names.push_back("H" + std::to_string(l));
    }
    return py::make_tuple(names, a);
  });

  mod.def("oracle", [](const std::string& text) {
    const auto cfg = parse(text);
    const auto problem = make_problem(cfg.problem);
    OracleEstimate price;
    std::vector<OracleEstimate> delta;
    {
      py::gil_scoped_release release;
      price = mc_price(problem, cfg.oracle_N, cfg.seed, cfg.threads);
      delta = mc_delta(problem, cfg.oracle_N, cfg.bump, cfg.seed, cfg.threads);
    }
    py::dict d;
    d["y0"] = py::make_tuple(price.value, price.stderr_);
    py::list z;
    for (const auto& e : delta) z.append(py::make_tuple(e.value, e.stderr_));
    d["z0"] = z;
    return d;
  });
}
