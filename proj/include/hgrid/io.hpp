#pragma once

// CSV and JSON serialization of densities, FP solutions and reports.
// Numbers are written in shortest round-trip form so identical runs give
// byte-identical files.

#include <ostream>
#include <string>

#include <json.hpp>

#include "hgrid/expr.hpp"
#include "hgrid/fokker_planck.hpp"
#include "hgrid/noise.hpp"
#include "hgrid/sde.hpp"

namespace hgrid {

using json = nlohmann::ordered_json;

/// Header "t" followed by bin left edges, then one row of rho per slice.
inline void write_density_csv(std::ostream& os, const DensityField& d) {
  os << 't';
  for (std::size_t b = 0; b < d.bins(); ++b) os << ',' << format_number(d.bin_left_edge(b));
  os << '\n';
  for (std::size_t s = 0; s < d.slices().size(); ++s) {
    os << format_number(d.level().coordinate(d.slices()[s]));
    for (std::size_t b = 0; b < d.bins(); ++b) os << ',' << format_number(d.rho(s, b));
    os << '\n';
  }
}

/// Same layout as the density CSV with FP cell left edges.
inline void write_fp_csv(std::ostream& os, const FPSolution& fp) {
  os << 't';
  for (std::size_t i = 0; i < fp.cells(); ++i) os << ',' << format_number(fp.left_edge(i));
  os << '\n';
  for (std::size_t s = 0; s < fp.times.size(); ++s) {
    os << format_number(fp.times[s]);
    for (double p : fp.density[s]) os << ',' << format_number(p);
    os << '\n';
  }
}

inline json to_json(const NoiseAlphabet& a) {
  json arr = json::array();
  for (double q : a.symbols()) arr.push_back(q);
  return arr;
}

inline json ensemble_descriptor(const NoiseEnsemble& e) {
  json j;
  j["mode"] = e.exhaustive() ? "exhaustive" : "sampled";
  j["n"] = e.level().n();
  j["alphabet"] = to_json(e.alphabet());
  j["paths"] = e.size();
  if (!e.exhaustive()) j["seed"] = e.seed();
  return j;
}

inline json problem_descriptor(const CauchyProblem& p) {
  json j;
  j["n"] = p.level().n();
  j["window"] = p.level().spatial_halfwidth();
  j["x0"] = p.x0();
  j["f"] = to_string(p.drift());
  j["h"] = to_string(p.diffusion());
  return j;
}

inline json density_sidecar(const DensityField& d, const CauchyProblem& p, const NoiseEnsemble& e) {
  json j;
  j["level"] = d.level().n();
  j["window"] = d.level().spatial_halfwidth();
  j["ensemble"] = ensemble_descriptor(e);
  j["x0"] = p.x0();
  j["f"] = to_string(p.drift());
  j["h"] = to_string(p.diffusion());
  json slices = json::array();
  for (std::size_t s = 0; s < d.slices().size(); ++s) {
    json row;
    row["t"] = d.level().coordinate(d.slices()[s]);
    row["overflow"] = d.overflow(s);
    row["overflow_fraction"] = d.overflow_fraction(s);
    slices.push_back(row);
  }
  j["slices"] = slices;
  return j;
}

inline json to_json(const ItoReport& r) {
  json j;
  j["max_abs"] = r.max_abs;
  j["mean_abs"] = r.mean_abs;
  j["max_speed"] = r.max_speed;
  j["speed_bound"] = r.speed_bound;
  j["hypothesis_violated"] = r.hypothesis_violated;
  j["residuals"] = r.residuals;
  return j;
}

inline json to_json(const WeakFormReport& r) {
  json j;
  j["n"] = r.n;
  j["paths"] = r.paths;
  j["exhaustive"] = r.exhaustive;
  j["residual"] = r.residual;
  j["density_sum"] = r.density_sum;
  j["std_error"] = r.std_error;
  j["initial_term"] = r.initial_term;
  j["drift_term"] = r.drift_term;
  j["noise_term"] = r.noise_term;
  j["eps_correction"] = r.eps_correction;
  j["quadratic_term"] = r.quadratic_term;
  j["pieces_total"] = r.pieces_total;
  j["expansion_total"] = r.expansion_total;
  j["noise_scale"] = r.noise_scale;
  j["telescoped"] = r.telescoped;
  return j;
}

inline json to_json(const CrossValidationReport& r) {
  json j;
  j["times"] = r.times;
  j["l1"] = r.l1;
  j["max_l1"] = r.max_l1;
  return j;
}

inline json fp_summary(const FPSolution& fp) {
  json j;
  j["dx"] = fp.dx;
  j["dt"] = fp.dt;
  j["cells"] = fp.cells();
  j["times"] = fp.times;
  j["mass"] = fp.mass;
  j["min_value"] = fp.min_value;
  j["max_mass_error"] = fp.max_mass_error;
  json means = json::array(), vars = json::array();
  for (std::size_t s = 0; s < fp.times.size(); ++s) {
    means.push_back(fp.mean(s));
    vars.push_back(fp.variance(s));
  }
  j["mean"] = means;
  j["variance"] = vars;
  return j;
}

}  // namespace hgrid
