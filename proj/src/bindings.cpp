#include "fomo2d/io.hpp"

#include <nlohmann/json.hpp>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace fomo2d;

PYBIND11_MODULE(_core, m) {
  m.doc() = "2D free orthotropic material optimization: energy-bound hierarchy, "
            "SGP solver and laminate baseline";

  py::class_<IsoModuli>(m, "IsoModuli")
      .def(py::init<double, double>(), py::arg("kappa"), py::arg("mu"))
      .def_readwrite("kappa", &IsoModuli::kappa)
      .def_readwrite("mu", &IsoModuli::mu);

  py::class_<PhasePair>(m, "PhasePair")
      .def_static("make", &PhasePair::make, py::arg("weak"), py::arg("strong"))
      .def_readwrite("weak", &PhasePair::weak)
      .def_readwrite("strong", &PhasePair::strong)
      .def("dkappa", &PhasePair::dkappa)
      .def("dmu", &PhasePair::dmu);

  py::class_<Tensor4>(m, "Tensor4")
      .def(py::init<>())
      .def_readwrite("m", &Tensor4::m)
      .def("trace", &Tensor4::trace);

  py::class_<OrthoTensor>(m, "OrthoTensor")
      .def(py::init<>())
      .def_readwrite("e1111", &OrthoTensor::e1111)
      .def_readwrite("e1122", &OrthoTensor::e1122)
      .def_readwrite("e2222", &OrthoTensor::e2222)
      .def_readwrite("e1212", &OrthoTensor::e1212)
      .def_readwrite("phi", &OrthoTensor::phi)
      .def("base_matrix", &OrthoTensor::base_matrix);

  py::class_<StrainM>(m, "StrainM")
      .def(py::init<>())
      .def_static("from_components", &StrainM::from_components, py::arg("e11"),
                  py::arg("e22"), py::arg("e12"))
      .def_readwrite("v", &StrainM::v);

  py::class_<StressM>(m, "StressM")
      .def(py::init<>())
      .def_static("from_components", &StressM::from_components, py::arg("s11"),
                  py::arg("s22"), py::arg("s12"))
      .def_readwrite("v", &StressM::v);

  m.def("plane_stress_moduli", &plane_stress_moduli, py::arg("young"), py::arg("poisson"));
  m.def("iso_tensor", &iso_tensor);
  m.def("rotate", &rotate);
  m.def("mandel_rotation", &mandel_rotation, py::arg("phi"));
  m.def("loewner_leq", &loewner_leq, py::arg("a"), py::arg("b"), py::arg("tol") = 1e-9);
  m.def("strain_invariants", &strain_invariants);
  m.def("energy", &energy);
  m.def("symmetrize_orthotropic", &symmetrize_orthotropic);

  m.def("q_correction",
        [](double t, double v, const PhasePair& p) {
          const auto q = q_correction(t, v, p);
          return py::make_tuple(q.value, static_cast<int>(q.branch) + 1);
        },
        py::arg("t"), py::arg("v"), py::arg("phases"));
  m.def("f_hs", &f_hs, py::arg("strain"), py::arg("v"), py::arg("phases"));
  m.def("activating_volume", &activating_volume);
  m.def("emax_energy", &emax_energy, py::arg("t"), py::arg("base"));
  m.def("worst_case_volume",
        [](const OrthoTensor& base, const PhasePair& p) {
          return worst_case_volume(base, p);
        },
        py::arg("base"), py::arg("phases"));
  m.def("voigt_min_volume", &voigt_min_volume);
  m.def("zo_volume", &zo_volume);

  m.def("f_c_hs",
        [](const StressM& s, double v, const PhasePair& p) {
          const auto f = f_c_hs(s, v, p);
          return py::make_tuple(f.value, static_cast<int>(f.branch) + 1);
        },
        py::arg("stress"), py::arg("v"), py::arg("phases"));
  m.def("f_c_derivative", &f_c_derivative);
  m.def("laminate_update", &laminate_update, py::arg("stress"), py::arg("v"),
        py::arg("phases"));
  m.def("fc_tensor", &fc_tensor, py::arg("e"), py::arg("phases"));

  m.def("sample_strains",
        [](int n, std::uint64_t seed) {
          const auto sample = sample_strains(n, seed);
          Eigen::MatrixXd out(n, 3);
          for (int i = 0; i < n; ++i) out.row(i) = sample.strains[static_cast<size_t>(i)].v;
          return out;
        },
        py::arg("n"), py::arg("seed"));

  m.def("run_json",
        [](const std::string& config_json) {
          const auto cfg = config_from_json(ordered_json::parse(config_json));
          return bundle_to_json(run(cfg)).dump();
        },
        py::arg("config_json"),
        "run a solve from a JSON configuration string; returns the bundle as JSON");

  m.attr("__version__") = "0.1.0";
}
