#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pidkit/games.hpp"
#include "pidkit/io.hpp"
#include "pidkit/random.hpp"
#include "pidkit/sem.hpp"

namespace py = pybind11;
using namespace pidkit;

namespace {

Pid make_pid(int din, int dout, const std::vector<std::vector<CMatrix>>& blocks) {
  std::vector<std::vector<ChoiMatrix>> b(blocks.size());
  for (size_t x0 = 0; x0 < blocks.size(); ++x0)
    for (const auto& m : blocks[x0]) b[x0].emplace_back(din, dout, m);
  return Pid(din, dout, std::move(b));
}

std::vector<std::vector<CMatrix>> pid_blocks(const Pid& p) {
  std::vector<std::vector<CMatrix>> out(p.n_programs());
  for (int x0 = 0; x0 < p.n_programs(); ++x0)
    for (int x1 = 0; x1 < p.n_outcomes(); ++x1) out[x0].push_back(p.block(x0, x1).mat());
  return out;
}

// File contents come back as the matching Python-side object; kinds without a
// class here are returned as their JSON text.
py::object to_python(const DeviceFile& f) {
  if (auto* p = std::get_if<Pid>(&f.value)) return py::cast(*p);
  if (auto* m = std::get_if<Pmd>(&f.value)) return py::cast(*m);
  if (auto* g = std::get_if<GameSpec>(&f.value)) return py::cast(*g);
  return py::str(serialize_device(f));
}

DeviceFile from_python(const py::object& o) {
  if (py::isinstance<Pid>(o)) return DeviceFile{o.cast<Pid>(), {}};
  if (py::isinstance<Pmd>(o)) return DeviceFile{o.cast<Pmd>(), {}};
  if (py::isinstance<GameSpec>(o)) return DeviceFile{o.cast<GameSpec>(), {}};
  throw py::type_error("expected a Pid, Pmd or GameSpec");
}

}  // namespace

PYBIND11_MODULE(_pidkit, m) {
  m.doc() = "Programmable instrument devices: incompatibility, SEM, simulations and games";

  py::class_<Pid>(m, "Pid")
      .def(py::init(&make_pid), py::arg("din"), py::arg("dout"), py::arg("blocks"))
      .def_property_readonly("din", &Pid::din)
      .def_property_readonly("dout", &Pid::dout)
      .def_property_readonly("n_programs", &Pid::n_programs)
      .def_property_readonly("n_outcomes", &Pid::n_outcomes)
      .def_property_readonly("blocks", &pid_blocks)
      .def("__repr__", [](const Pid& p) {
        return "Pid(din=" + std::to_string(p.din()) + ", dout=" + std::to_string(p.dout()) +
               ", programs=" + std::to_string(p.n_programs()) + ", outcomes=" + std::to_string(p.n_outcomes()) + ")";
      });

  py::class_<Pmd>(m, "Pmd")
      .def(py::init<int, std::vector<std::vector<CMatrix>>>(), py::arg("dim"), py::arg("effects"))
      .def_readonly("dim", &Pmd::dim)
      .def_readonly("effects", &Pmd::effects)
      .def_property_readonly("n_programs", &Pmd::n_programs)
      .def_property_readonly("n_outcomes", &Pmd::n_outcomes);

  py::class_<GameSpec>(m, "GameSpec")
      .def_readonly("n_m", &GameSpec::n_m)
      .def_readonly("n_n", &GameSpec::n_n)
      .def_readonly("d_ref", &GameSpec::d_ref)
      .def_readonly("dout", &GameSpec::dout)
      .def_readonly("effects", &GameSpec::effects);

  m.def("loads", [](const std::string& text) { return to_python(parse_device(text)); });
  m.def("load", [](const std::string& path) { return to_python(load_device(path)); });
  m.def("dumps", [](const py::object& o) { return serialize_device(from_python(o)); });

  m.def("random_pid", [](int din, int dout, int np, int no, std::uint64_t seed, int effect_rank) {
    PidSampling s;
    s.effect_rank = effect_rank;
    return random_pid(din, dout, np, no, seed, s);
  }, py::arg("din"), py::arg("dout"), py::arg("n_programs"), py::arg("n_outcomes"), py::arg("seed"),
        py::arg("effect_rank") = 0);
  m.def("random_simple_pid", [](int din, int dout, int np, int no, std::uint64_t seed) {
    return random_simple_pid(din, dout, np, no, seed).pid;
  }, py::arg("din"), py::arg("dout"), py::arg("n_programs"), py::arg("n_outcomes"), py::arg("seed"));

  m.def("validate_pid", [](const Pid& p) {
    PidValidation v = validate_pid(p);
    py::dict d;
    d["valid"] = v.valid;
    d["cp_defect"] = v.cp_defect;
    d["tp_defect"] = v.tp_defect;
    d["nonsignaling_defect"] = v.nonsignaling_defect;
    d["message"] = v.message;
    return d;
  });
  m.def("is_simple", [](const Pid& p) { return is_simple_pid(p).verdict == Verdict::Simple; });
  m.def("roi_primal", [](const Pid& p) { return roi_primal(p).r; });
  m.def("roi_dual", [](const Pid& p) { return roi_dual(p).r; });
  m.def("roi_pmd", [](const Pmd& p) { return roi_pmd(p).r; });
  m.def("sem", [](const Pid& p) { return sem(p).pmd; });
  m.def("sem_monotone_value", [](const Pid& p) { return sem_monotone_value(p); });

  m.def("witness_game", [](const Pid& p, int n_dummy) {
    return witness_game(roi(p), p.din(), p.dout(), n_dummy);
  }, py::arg("pid"), py::arg("n_dummy"));
  m.def("game_value", [](const GameSpec& g, const Pid& p) {
    return game_value(g, p.n_outcomes() < g.n_n ? extend_outcomes(p, g.n_n) : p);
  });
  m.def("pguess_simple", [](const GameSpec& g) { return pguess_simple(g); });
  m.def("verify_robustness_bound", [](const Pid& p, const std::vector<int>& schedule) {
    BoundReport r = verify_robustness_bound(p, schedule);
    py::dict d;
    d["roi"] = r.roi;
    d["cap_violations"] = r.cap_violations;
    d["monotone"] = r.monotone;
    py::list pts;
    for (const auto& pt : r.points) {
      py::dict e;
      e["n_dummy"] = pt.n_dummy;
      e["ratio"] = pt.ratio;
      e["lower_bound"] = pt.lower_bound;
      e["pguess_simple"] = pt.pguess_simple;
      pts.append(e);
    }
    d["points"] = pts;
    return d;
  }, py::arg("pid"), py::arg("schedule") = std::vector<int>{8, 64, 512});
}
