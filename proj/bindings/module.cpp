#include "rainscale/evd.hpp"
#include "rainscale/fitting.hpp"
#include "rainscale/regression.hpp"
#include "rainscale/scenario.hpp"
#include "rainscale/spatial.hpp"
#include "rainscale/svg_map.hpp"
#include "rainscale/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace rainscale;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Downscaling precipitation extremes: point-process GEV fits, "
            "return-value regression and kriging";

  py::class_<GevParams>(m, "GevParams")
      .def(py::init<double, double, double>(), py::arg("mu"), py::arg("psi"), py::arg("xi"))
      .def_readwrite("mu", &GevParams::mu)
      .def_readwrite("psi", &GevParams::psi)
      .def_readwrite("xi", &GevParams::xi)
      .def("valid", &GevParams::valid)
      .def("__repr__", [](const GevParams& p) {
        return "GevParams(mu=" + std::to_string(p.mu) + ", psi=" + std::to_string(p.psi) +
               ", xi=" + std::to_string(p.xi) + ")";
      });

  py::class_<ReturnLevel>(m, "ReturnLevel")
      .def(py::init<double, double, double>(), py::arg("value") = 0.0, py::arg("se") = 0.0,
           py::arg("years") = 0.0)
      .def_readwrite("value", &ReturnLevel::value)
      .def_readwrite("se", &ReturnLevel::se)
      .def_readwrite("years", &ReturnLevel::years);

  m.def("gev_cdf", &gev_cdf, py::arg("params"), py::arg("y"));
  m.def("return_level", &return_level, py::arg("params"), py::arg("years"));
  m.def("return_level_gradient", &return_level_gradient, py::arg("params"), py::arg("years"));
  m.def("pp_intensity", &pp_intensity, py::arg("params"), py::arg("y"));
  m.def(
      "pp_neg_log_likelihood",
      [](const GevParams& p, const std::vector<double>& peaks, double threshold, double years) {
        return pp_neg_log_likelihood(p, peaks, threshold, years);
      },
      py::arg("params"), py::arg("peaks"), py::arg("threshold"), py::arg("years"));
  m.def("delta_method_se", &delta_method_se, py::arg("grad"), py::arg("cov"));

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("cov", &FitResult::cov)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("n_peaks", &FitResult::n_peaks)
      .def_readonly("threshold", &FitResult::threshold)
      .def_readonly("t_years", &FitResult::t_years)
      .def_readonly("neg_loglik", &FitResult::neg_loglik);

  m.def(
      "initial_params",
      [](const std::vector<double>& peaks, double threshold, double years) {
        return initial_params(peaks, threshold, years);
      },
      py::arg("peaks"), py::arg("threshold"), py::arg("years"));
  m.def(
      "fit_point_process",
      [](const std::vector<double>& peaks, double threshold, double years) {
        return fit_point_process(peaks, threshold, years);
      },
      py::arg("peaks"), py::arg("threshold"), py::arg("years"));
  m.def("return_level_with_se", &return_level_with_se, py::arg("fit"), py::arg("years"));

  m.def("simulate_pp_exceedances", &simulate_pp_exceedances, py::arg("truth"),
        py::arg("threshold"), py::arg("years"), py::arg("seed"));
  m.def("pp_exceedance_rate", &pp_exceedance_rate, py::arg("params"), py::arg("threshold"));
  m.def("pp_threshold_for_rate", &pp_threshold_for_rate, py::arg("params"),
        py::arg("rate_per_year"));

  m.def("great_circle_miles", &great_circle_miles, py::arg("lat1"), py::arg("lon1"),
        py::arg("lat2"), py::arg("lon2"));

  py::class_<PairedRecord>(m, "PairedRecord")
      .def(py::init([](std::string station_id, std::string cell_id, double y_point,
                       double x_grid, double elev, double lat, double lon) {
             return PairedRecord{std::move(station_id), std::move(cell_id),
                                 y_point,               x_grid,
                                 elev,                  lat,
                                 lon};
           }),
           py::arg("station_id"), py::arg("cell_id"), py::arg("y_point"), py::arg("x_grid"),
           py::arg("elev"), py::arg("lat"), py::arg("lon"))
      .def_readwrite("station_id", &PairedRecord::station_id)
      .def_readwrite("cell_id", &PairedRecord::cell_id)
      .def_readwrite("y_point", &PairedRecord::y_point)
      .def_readwrite("x_grid", &PairedRecord::x_grid)
      .def_readwrite("elev", &PairedRecord::elev)
      .def_readwrite("lat", &PairedRecord::lat)
      .def_readwrite("lon", &PairedRecord::lon);

  py::class_<DesignSpec>(m, "DesignSpec")
      .def(py::init<bool, bool, int>(), py::arg("include_grid") = true,
           py::arg("include_elev") = true, py::arg("latlon_degree") = 0)
      .def_readwrite("include_grid", &DesignSpec::include_grid)
      .def_readwrite("include_elev", &DesignSpec::include_elev)
      .def_readwrite("latlon_degree", &DesignSpec::latlon_degree);

  py::class_<RegressionFit>(m, "RegressionFit")
      .def_readonly("names", &RegressionFit::names)
      .def_readonly("coeffs", &RegressionFit::coeffs)
      .def_readonly("coeff_ses", &RegressionFit::coeff_ses)
      .def_readonly("residuals", &RegressionFit::residuals)
      .def_readonly("rss", &RegressionFit::rss)
      .def_readonly("sigma2", &RegressionFit::sigma2)
      .def_readonly("aic", &RegressionFit::aic)
      .def_readonly("n", &RegressionFit::n)
      .def_readonly("k", &RegressionFit::k);

  m.def(
      "fit_model",
      [](const std::vector<PairedRecord>& records, const DesignSpec& spec) {
        return fit_model(records, spec);
      },
      py::arg("records"), py::arg("spec"));
  m.def("fit_ols", &fit_ols, py::arg("X"), py::arg("y"));

  py::class_<PointPrediction>(m, "PointPrediction")
      .def_readonly("level", &PointPrediction::level)
      .def_readonly("se", &PointPrediction::se)
      .def_readonly("log_mean", &PointPrediction::log_mean)
      .def_readonly("log_var", &PointPrediction::log_var);

  m.def("predict_point_return", &predict_point_return, py::arg("fit"), py::arg("x_grid"),
        py::arg("elev"), py::arg("lat"), py::arg("lon"));

  py::class_<KrigingModel>(m, "KrigingModel")
      .def(py::init<>())
      .def_readwrite("sigma2", &KrigingModel::sigma2)
      .def_readwrite("range_miles", &KrigingModel::range_miles)
      .def_readwrite("nugget", &KrigingModel::nugget);

  m.def(
      "universal_krige",
      [](const std::vector<std::array<double, 4>>& obs,
         const std::vector<std::array<double, 3>>& targets, const KrigingModel& model) {
        std::vector<KrigingObservation> o;
        o.reserve(obs.size());
        for (const auto& v : obs) o.push_back({v[0], v[1], v[2], v[3]});
        std::vector<KrigingTarget> t;
        t.reserve(targets.size());
        for (const auto& v : targets) t.push_back({v[0], v[1], v[2]});
        const auto preds = universal_krige(o, t, model);
        std::vector<std::pair<double, double>> out;
        out.reserve(preds.size());
        for (const auto& p : preds) out.emplace_back(p.value, p.se);
        return out;
      },
      py::arg("observations"), py::arg("targets"), py::arg("model"),
      "observations: (lat, lon, elev, value) tuples; targets: (lat, lon, elev). "
      "Returns (prediction, se) pairs.");

  py::class_<RatioResult>(m, "RatioResult")
      .def_readonly("site_id", &RatioResult::site_id)
      .def_readonly("ratio", &RatioResult::ratio)
      .def_readonly("se", &RatioResult::se);

  m.def("future_present_ratio", &future_present_ratio, py::arg("future"), py::arg("present"));
  m.def(
      "ratio_significance",
      [](const RatioResult& r, double alpha) {
        const SignificanceIndicator ind = ratio_significance(r, alpha);
        return std::make_pair(ind.plain, ind.log_scale);
      },
      py::arg("ratio"), py::arg("alpha") = 0.05);

  m.def(
      "render_map_svg",
      [](const std::vector<std::array<double, 3>>& points, const std::string& title) {
        std::vector<MapPoint> pts;
        pts.reserve(points.size());
        for (const auto& p : points) pts.push_back({p[0], p[1], p[2]});
        return render_map_svg(pts, title);
      },
      py::arg("points"), py::arg("title") = "",
      "points: (lat, lon, value) tuples; returns the SVG document as a string.");
}
