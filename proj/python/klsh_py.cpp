#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "klsh/cli.hpp"
#include "klsh/infotheory.hpp"
#include "klsh/kernels.hpp"
#include "klsh/model_io.hpp"

namespace py = pybind11;
using namespace klsh;

namespace {

Dataset parse_records(const std::vector<std::string>& lines) {
  std::vector<DataPoint> pts;
  pts.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) pts.push_back(parse_record(lines[i], i + 1));
  return Dataset(std::move(pts));
}

std::vector<std::string> code_strings(const HashcodeMatrix& m) {
  std::vector<std::string> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m.row_string(i);
  return out;
}

py::dict fit(const std::vector<std::string>& records, const std::string& config_json,
             double pseudo_fraction) {
  const auto cfg = learn_config_from_json(nlohmann::json::parse(config_json));
  auto data = parse_records(records);
  ModelFile model;
  if (pseudo_fraction > 0.0) {
    data = split_pseudo_test(data, pseudo_fraction, cfg.seed);
    for (const auto& p : data.points())
      if (p.split == Split::Test) model.pseudo_test_ids.push_back(p.id);
  }
  LearnResult res;
  {
    py::gil_scoped_release nogil;
    res = learn(data, cfg);
  }
  model.ensemble = res.ensemble;
  model.learn_config = cfg;
  if (res.truncated) model.truncation_warning = res.warning;
  py::dict out;
  out["model"] = serialize_model(model);
  out["codes"] = code_strings(res.matrix);
  out["truncated"] = res.truncated;
  out["pseudo_test_ids"] = model.pseudo_test_ids;
  return out;
}

std::vector<std::string> transform(const std::string& model_json,
                                   const std::vector<std::string>& records) {
  const auto model = deserialize_model(model_json);
  const auto data = parse_records(records);
  py::gil_scoped_release nogil;
  return code_strings(hash_all(model.ensemble, data));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  static py::exception<Error> base(m, "KlshError", PyExc_RuntimeError);
  // also a ValueError, so callers can catch either
  static py::object invalid = py::module_::import("builtins").attr("type")(
      "ValidationError", py::make_tuple(base, py::handle(PyExc_ValueError)),
      py::dict(py::arg("__module__") = "klsh._core"));
  m.attr("ValidationError") = invalid;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyErr_SetString(invalid.ptr(), e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  m.def("entropy", [](const std::vector<std::uint64_t>& c) { return entropy(c); });
  m.def("mutual_information", [](const std::vector<std::vector<std::uint64_t>>& table) {
    if (table.empty()) throw ValidationError("empty table");
    JointCounts j(table.size(), table[0].size());
    for (std::size_t r = 0; r < table.size(); ++r) {
      if (table[r].size() != j.cols) throw ValidationError("ragged table");
      for (std::size_t c = 0; c < j.cols; ++c) j.at(r, c) = table[r][c];
    }
    return mutual_information(j);
  });
  m.def("kernel", [](const Payload& a, const Payload& b, const std::string& config_json) {
    const auto cfg = kernel_config_from_json(nlohmann::json::parse(config_json));
    return kernel_eval(a, b, cfg);
  });
  m.def("synth", [](const std::string& config_json) {
    const auto out = synth_generate(synth_config_from_json(nlohmann::json::parse(config_json)));
    std::vector<std::string> lines;
    for (const auto& p : out.dataset.points()) lines.push_back(format_record(p));
    return lines;
  });
  m.def("fit", &fit, py::arg("records"), py::arg("config_json"),
        py::arg("pseudo_test_fraction") = 0.0);
  m.def("transform", &transform, py::arg("model_json"), py::arg("records"));
  m.def("set_threads", &set_thread_count);
  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "klsh");
    std::ostringstream diag;
    int rc;
    {
      py::gil_scoped_release nogil;
      rc = run_cli(args, diag);
    }
    return py::make_tuple(rc, diag.str());
  });
}
