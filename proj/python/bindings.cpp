#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "estimand/cli/commands.hpp"
#include "estimand/cli/run.hpp"
#include "estimand/error.hpp"

namespace py = pybind11;
using namespace estimand;

namespace {

cli::Output run_with(const std::string& verb, const cli::AnalysisConfig& cfg, const std::optional<std::string>& figure) {
  py::gil_scoped_release release;
  return cli::run_analysis(verb, cfg, figure);
}

std::string render(const cli::Output& out, const std::string& format) {
  if (format == "csv") return out.csv.str();
  if (format == "json") return out.json.dump();
  throw ValidationError("format must be json or csv", "format");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conditional and marginal treatment-effect estimands";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "run_file",
      [](const std::string& verb, const std::string& path, std::optional<std::string> figure, const std::string& format) {
        auto cfg = cli::load_config(path);
        return render(run_with(verb, cfg, figure), format);
      },
      py::arg("verb"), py::arg("path"), py::arg("figure") = py::none(), py::arg("format") = "json",
      "Run one analysis on a config file; returns JSON or CSV text.");

  m.def(
      "run_json",
      [](const std::string& verb, const std::string& config_json, const std::string& base_dir,
         std::optional<std::string> figure, const std::string& format) {
        cli::Json doc;
        try {
          doc = cli::Json::parse(config_json);
        } catch (const cli::Json::parse_error& e) {
          throw ValidationError(e.what(), "config");
        }
        auto cfg = cli::parse_config(doc, base_dir, cli::fnv1a64_hex(config_json));
        return render(run_with(verb, cfg, figure), format);
      },
      py::arg("verb"), py::arg("config_json"), py::arg("base_dir") = ".", py::arg("figure") = py::none(),
      py::arg("format") = "json", "Run one analysis on an in-memory JSON config.");

  m.def(
      "main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "estimand-lab");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Command-line entry point; returns (exit_code, stdout, stderr).");

  m.def("link_forward", [](const std::string& link, double p) { return Link::parse(link).forward(p); });
  m.def("link_inverse", [](const std::string& link, double eta) { return Link::parse(link).inverse(eta).value(); });
  m.def("collapsibility",
        [](const std::string& link) { return std::string(to_string(classify_collapsibility(Link::parse(link)))); });
  m.def("config_hash", [](const std::string& bytes) { return cli::fnv1a64_hex(bytes); });
}
