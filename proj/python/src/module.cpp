#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "biorhythm/data_model.hpp"
#include "biorhythm/errors.hpp"
#include "biorhythm/pipeline.hpp"
#include "biorhythm/rhythm.hpp"
#include "biorhythm/simulator.hpp"
#include "biorhythm/spike_sync.hpp"

namespace py = pybind11;
using namespace biorhythm;

namespace {

SpikeDistanceConfig spike_config(SpikeVariant variant, EdgeHandling edge, int grid) {
  SpikeDistanceConfig cfg{variant, grid, edge};
  cfg.validate();
  return cfg;
}

SpikeTrain make_train(std::vector<double> spikes, double length) { return SpikeTrain(std::move(spikes), length); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Population biorhythm analytics";
  m.attr("__version__") = std::string(kToolVersion);

  py::register_exception<Error>(m, "BiorhythmError", PyExc_RuntimeError);
  // Registered later, so consulted first.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DomainError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::enum_<SpikeVariant>(m, "SpikeVariant")
      .value("paper_verbatim", SpikeVariant::paper_verbatim)
      .value("standard_normalized", SpikeVariant::standard_normalized);
  py::enum_<EdgeHandling>(m, "EdgeHandling")
      .value("auxiliary_spikes", EdgeHandling::auxiliary_spikes)
      .value("clip", EdgeHandling::clip);

  m.def(
      "spike_distance",
      [](std::vector<double> a, std::vector<double> b, double begin, double end, SpikeVariant variant,
         EdgeHandling edge, int grid) {
        const auto cfg = spike_config(variant, edge, grid);
        return bivariate_spike_distance(make_train(std::move(a), end), make_train(std::move(b), end), {begin, end},
                                        cfg);
      },
      py::arg("a"), py::arg("b"), py::arg("begin"), py::arg("end"),
      py::arg("variant") = SpikeVariant::standard_normalized, py::arg("edge") = EdgeHandling::auxiliary_spikes,
      py::arg("grid_points_per_mean_isi") = 200,
      "Time-averaged SPIKE-distance of two spike trains over [begin, end].");

  m.def(
      "spike_function",
      [](double t, std::vector<double> a, std::vector<double> b, double begin, double end, SpikeVariant variant,
         EdgeHandling edge) {
        const auto cfg = spike_config(variant, edge, 200);
        return spike_function_at(t, make_train(std::move(a), end), make_train(std::move(b), end), {begin, end}, cfg);
      },
      py::arg("t"), py::arg("a"), py::arg("b"), py::arg("begin"), py::arg("end"),
      py::arg("variant") = SpikeVariant::standard_normalized, py::arg("edge") = EdgeHandling::auxiliary_spikes);

  m.def("outlier_fraction",
        [](std::vector<double> values, std::vector<double> reference) { return outlier_fraction(values, reference); },
        py::arg("values"), py::arg("reference"));
  m.def("outlier_growth", &outlier_growth, py::arg("before"), py::arg("after"));

  m.def(
      "welch_psd",
      [](std::vector<double> samples, int segment_days, double overlap, const std::string& detrend) {
        WelchConfig cfg;
        cfg.segment_days = segment_days;
        cfg.overlap_fraction = overlap;
        cfg.detrend = parse_detrend(detrend);
        cfg.validate();
        const auto psd = welch_psd(samples, cfg);
        return py::make_tuple(psd.periods, psd.power);
      },
      py::arg("samples"), py::arg("segment_days") = 14, py::arg("overlap") = 0.5, py::arg("detrend") = "linear",
      "Returns (periods_days, power).");

  m.def(
      "characteristic_rhythm",
      [](std::vector<double> samples, int segment_days) {
        WelchConfig cfg;
        cfg.segment_days = segment_days;
        cfg.validate();
        return dominant_period(welch_psd(samples, cfg));
      },
      py::arg("samples"), py::arg("segment_days") = 14);

  m.def("kl_divergence", [](std::vector<double> p, std::vector<double> q) { return kl_divergence(p, q); },
        py::arg("p"), py::arg("q"));

  m.def(
      "generate_cohort_csv",
      [](int n_users, int days, std::uint64_t seed) {
        CohortSpec spec;
        spec.n_users = n_users;
        spec.days = days;
        spec.seed = seed;
        std::ostringstream out;
        write_activity_csv(generate_cohort(spec), out);
        return out.str();
      },
      py::arg("n_users") = 10, py::arg("days") = 60, py::arg("seed") = 1,
      "Synthetic cohort as canonical CSV text.");
}
