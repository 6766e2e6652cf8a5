#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prepmark/analytics.hpp"
#include "prepmark/equivalence.hpp"
#include "prepmark/error.hpp"
#include "prepmark/expr.hpp"
#include "prepmark/grading_json.hpp"
#include "prepmark/questionbank.hpp"
#include "prepmark/service.hpp"
#include "prepmark/simulate.hpp"
#include "prepmark/store.hpp"

namespace py = pybind11;
using namespace prepmark;

// JSON crosses the boundary as text; the Python package decodes it.
PYBIND11_MODULE(_core, m) {
  m.doc() = "prepmark core bindings";

  static py::exception<Error> error(m, "PrepmarkError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::tuple args = py::make_tuple(e.code(), e.what());
      PyErr_SetObject(error.ptr(), args.ptr());
    }
  });

  m.def("render", [](const std::string& text) { return render(parse(text)); },
        "Parse an expression and render it canonically.");
  m.def("evaluate", [](const std::string& text, const std::map<std::string, double>& vars) {
    Bindings b(vars.begin(), vars.end());
    return evaluate(parse(text), b);
  }, py::arg("text"), py::arg("bindings") = std::map<std::string, double>{});
  m.def("differentiate", [](const std::string& text, const std::string& var) {
    return render(differentiate(parse(text), var));
  });
  m.def("equivalent", [](const std::string& a, const std::string& b) {
    return equivalent(parse(a), parse(b));
  });
  m.def("grade_json", [](const std::string& kind, const std::string& spec, const std::string& response) {
    const GraderSpec s = spec_from_json(kind, json::parse(spec));
    return outcome_to_json(grade(s, response_from_json(kind, json::parse(response)))).dump();
  });
  m.def("validate_bank_json", [](const std::string& path) {
    return report_to_json(validate_bank_file(path)).dump();
  });
  m.def("instantiate_json", [](const std::string& bank_path, const std::string& template_id,
                               std::uint64_t seed) {
    const Bank bank = load_bank(bank_path);
    const QuestionTemplate& t = bank.find(template_id);
    return display_to_json(render(instantiate(t, seed), t)).dump();
  });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(x, y);
  });
  m.def("simulate", [](const std::string& bank, const std::string& cohort, const std::string& store,
                       int students, std::uint64_t seed) {
    init_store(store, bank, cohort);
    Store s(store, StoreOptions{.fsync = false, .snapshot_every = 0});
    SimulationConfig cfg;
    cfg.students = students;
    cfg.seed = seed;
    const SimulationResult r = simulate(s, cfg);
    write_ingest_files(s, r);
    return r.attempts;
  }, py::arg("bank"), py::arg("cohort"), py::arg("store"), py::arg("students") = 110,
     py::arg("seed") = 1);
  m.def("replay_verify", [](const std::string& store) { return replay_verify(store); });
  m.def("followup_json", [](const std::string& store, const std::string& now) {
    auto [session, seq] = replay(store);
    return followup_body(*session, parse_timestamp(now));
  });
  m.def("status_json", [](const std::string& store) {
    auto [session, seq] = replay(store);
    return status_report_body(*session);
  });
}
