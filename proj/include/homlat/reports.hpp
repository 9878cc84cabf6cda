#pragma once
// JSON and CSV emission for every report type. JSON objects keep nlohmann's
// default key ordering (alphabetical), carry no timestamps, and print doubles
// with shortest-round-trip precision, so identical runs emit identical bytes.
// CSV columns are fixed per writer and doubles are printed with %.17g.

#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "homlat/cz.hpp"
#include "homlat/enumeration.hpp"
#include "homlat/green_probes.hpp"
#include "homlat/helmholtz.hpp"
#include "homlat/moments.hpp"
#include "homlat/multipliers.hpp"
#include "homlat/solver.hpp"
#include "homlat/stats.hpp"
#include "homlat/version.hpp"

namespace homlat {

inline std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using json = nlohmann::json;

inline void to_json(json& j, const Summary& s) {
  j = json{{"mean", s.mean}, {"sd", s.sd}, {"se", s.se}, {"n", s.n}};
}

inline void to_json(json& j, const LinearFit& f) {
  j = json{{"slope", f.slope},
           {"intercept", f.intercept},
           {"r2", f.r2},
           {"slope_se", f.slope_se},
           {"n", f.n}};
}

inline void to_json(json& j, const SolveReport& r) {
  j = json{{"iterations", r.iterations},
           {"residual", r.residual},
           {"rhs_norm", r.rhs_norm},
           {"restarts", r.restarts},
           {"method", r.method}};
}

inline void to_json(json& j, const CorrectorReport& r) {
  j = json{{"solve", r.solve},
           {"xi_norm", r.xi_norm},
           {"sup_abs", r.sup_abs},
           {"sup_abs_over_xi", r.sup_abs_over_xi},
           {"energy_defect", r.energy_defect}};
}

inline void to_json(json& j, const GreenColumnReport& r) {
  j = json{{"solve", r.solve}, {"row_sum", r.row_sum}, {"row_sum_defect", r.row_sum_defect}};
}

inline void to_json(json& j, const DecayFitReport& r) {
  j = json{{"mode", r.mode == DecayMode::value ? "value" : "gradient"},
           {"alpha", r.alpha},
           {"delta", r.delta},
           {"offset", r.offset},
           {"r2", r.r2},
           {"window_lo", r.window_lo},
           {"window_hi", r.window_hi},
           {"radii", r.radii},
           {"maxima", r.maxima}};
}

inline void to_json(json& j, const WeightedSumReport& r) {
  j = json{{"q", r.q}, {"T", r.T}, {"value", r.value}, {"solve", r.solve}};
}

inline void to_json(json& j, const PerturbationIdentityReport& r) {
  j = json{{"max_defect", r.max_defect},   {"xi_norm", r.xi_norm},
           {"c_norm", r.c_norm},           {"tol", r.tol},
           {"threshold", r.threshold},     {"passed", r.passed}};
}

inline void to_json(json& j, const OscillationConsistencyReport& r) {
  j = json{{"site", r.site},
           {"osc_exact", r.osc_exact},
           {"grad_green", r.grad_green},
           {"grad_phi_xi", r.grad_phi_xi},
           {"empirical_constant", r.empirical_constant},
           {"theory_constant", r.theory_constant},
           {"passed", r.passed}};
}

inline void to_json(json& j, const HelmholtzIdentityReport& r) {
  j = json{{"max_defect", r.max_defect}, {"l2_defect", r.l2_defect}, {"tol", r.tol},
           {"threshold", r.threshold},   {"passed", r.passed},       {"solve", r.solve}};
}

inline void to_json(json& j, const CzTrialRow& r) {
  j = json{{"trial", r.trial}, {"side", r.side},   {"p", r.p},
           {"gamma", r.gamma}, {"ratio", r.ratio}, {"skipped", r.skipped}};
}

inline void to_json(json& j, const CzReport& r) {
  j = json{{"p", r.p},
           {"gamma", r.gamma},
           {"max_ratio", r.max_ratio},
           {"mean_ratio", r.mean_ratio},
           {"trials_used", r.trials_used},
           {"ladder_sides", r.ladder_sides},
           {"ladder_T", r.ladder_T},
           {"ladder_max_ratio", r.ladder_max_ratio},
           {"slope_vs_log_side", r.slope_vs_log_side}};
}

inline void to_json(json& j, const InequalityReport& r) {
  j = json{{"kind", inequality_kind_to_string(r.kind)},
           {"p", r.p},
           {"lhs", r.lhs},
           {"osc_sum", r.osc_sum},
           {"rhs_at_unit", r.rhs_at_unit},
           {"ratio", r.ratio},
           {"best_constant", r.best_constant},
           {"degenerate", r.degenerate},
           {"holds", r.holds},
           {"configurations", r.configurations}};
}

inline void to_json(json& j, const MomentSampleRow& r) {
  j = json{{"sample", r.sample},   {"seed", r.seed},
           {"failed", r.failed},   {"phi0", r.phi0},
           {"grad0", r.grad0},     {"phi_avg", r.phi_avg},
           {"grad_avg", r.grad_avg}, {"phi0_signed", r.phi0_signed},
           {"energy_defect", r.energy_defect}};
  if (r.failed) j["error"] = r.error;
  if (!r.ahom.empty()) j["ahom"] = r.ahom;
}

inline void to_json(json& j, const MomentReport& r) {
  j = json{{"dim", r.dim},
           {"side", r.side},
           {"T", r.T},
           {"lambda", r.lambda},
           {"xi", r.xi},
           {"p_list", r.p_list},
           {"samples", r.samples},
           {"master_seed", r.master_seed},
           {"phi_site0", r.phi_site0},
           {"phi_spatial", r.phi_spatial},
           {"grad_site0", r.grad_site0},
           {"grad_spatial", r.grad_spatial},
           {"phi_mean", r.phi_mean},
           {"failed_count", r.failed_count},
           {"failures", r.failures}};
  if (!r.ahom.empty()) {
    j["ahom"] = r.ahom;
    j["ahom_se"] = r.ahom_se;
    j["ahom_sym_eig_min"] = r.ahom_sym_eig_min;
    j["ahom_sym_eig_max"] = r.ahom_sym_eig_max;
  }
}

inline void to_json(json& j, const GradientRatioCheck& r) {
  j = json{{"p", r.p},
           {"max_mean", r.max_mean},
           {"min_mean", r.min_mean},
           {"ratio", r.ratio},
           {"ratio_3sigma", r.ratio_3sigma},
           {"within_factor_2", r.within_factor_2}};
}

inline void to_json(json& j, const ScalingReport& r) {
  j = json{{"dim", r.dim},
           {"ladder", r.ladder},
           {"sides", r.sides},
           {"samples", r.samples},
           {"master_seed", r.master_seed},
           {"p_list", r.p_list},
           {"rungs", r.rungs},
           {"degenerate", r.degenerate},
           {"phi_ratio", r.phi_ratio},
           {"phi_ratio_3sigma", r.phi_ratio_3sigma},
           {"gradient_checks", r.gradient_checks}};
  if (r.dim == 2 && !r.degenerate) {
    j["phi_fit_spatial"] = r.phi_fit_spatial;
    j["phi_fit_site0"] = r.phi_fit_site0;
  }
}

inline void to_json(json& j, const MomentOscillationReport& r) {
  j = json{{"phi_moment_checks", r.phi_moment_checks}, {"grad_lsi", r.grad_lsi}};
}

// Wraps a report payload with the resolved configuration, seed, and version
// that every emitted document carries.
inline json make_report_document(const std::string& subcommand, const json& config,
                                 const json& payload) {
  return json{{"version", version_string},
              {"subcommand", subcommand},
              {"config", config},
              {"report", payload}};
}

// ---------------------------------------------------------------------------
// CSV writers. One row per observation, %.17g doubles, stable headers.

inline void write_decay_csv(std::ostream& os, const DecayFitReport& rep) {
  os << "r,max_value\n";
  for (std::size_t i = 0; i < rep.radii.size(); ++i)
    os << g17(rep.radii[i]) << ',' << g17(rep.maxima[i]) << '\n';
}

inline void write_weighted_sum_csv(std::ostream& os, std::span<const WeightedSumReport> rows) {
  os << "sample_id,q,T,value\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    os << i << ',' << g17(rows[i].q) << ',' << g17(rows[i].T) << ',' << g17(rows[i].value)
       << '\n';
}

inline void write_defect_csv(std::ostream& os, std::span<const double> defects) {
  os << "sample_id,defect\n";
  for (std::size_t i = 0; i < defects.size(); ++i) os << i << ',' << g17(defects[i]) << '\n';
}

inline void write_cz_csv(std::ostream& os, const CzReport& rep) {
  os << "trial,L,p,gamma,ratio\n";
  for (const CzTrialRow& row : rep.rows) {
    if (row.skipped) continue;
    os << row.trial << ',' << row.side << ',' << g17(row.p) << ',' << g17(row.gamma) << ','
       << g17(row.ratio) << '\n';
  }
}

inline void write_moments_csv_header(std::ostream& os, const MomentReport& rep) {
  os << "sample_id,seed,T,L";
  for (int p : rep.p_list)
    os << ",phi0_m" << 2 * p << ",grad0_m" << 2 * p << ",phi_avg_m" << 2 * p << ",grad_avg_m"
       << 2 * p;
  os << ",energy_defect";
  if (!rep.ahom.empty())
    for (int i = 0; i < rep.dim; ++i)
      for (int j = 0; j < rep.dim; ++j) os << ",ahom_" << i + 1 << j + 1;
  os << '\n';
}

inline void write_moments_csv_rows(std::ostream& os, const MomentReport& rep) {
  for (const MomentSampleRow& row : rep.rows) {
    if (row.failed) continue;
    os << row.sample << ',' << row.seed << ',' << g17(rep.T) << ',' << rep.side;
    for (std::size_t ip = 0; ip < rep.p_list.size(); ++ip)
      os << ',' << g17(row.phi0[ip]) << ',' << g17(row.grad0[ip]) << ',' << g17(row.phi_avg[ip])
         << ',' << g17(row.grad_avg[ip]);
    os << ',' << g17(row.energy_defect);
    for (double v : row.ahom) os << ',' << g17(v);
    os << '\n';
  }
}

inline void write_moments_csv(std::ostream& os, const MomentReport& rep) {
  write_moments_csv_header(os, rep);
  write_moments_csv_rows(os, rep);
}

// Scaling runs concatenate per-rung sample rows under a single header; the T
// and L columns distinguish rungs.
inline void write_scaling_csv(std::ostream& os, const ScalingReport& rep) {
  if (rep.rungs.empty()) return;
  write_moments_csv_header(os, rep.rungs.front());
  for (const MomentReport& rung : rep.rungs) write_moments_csv_rows(os, rung);
}

}  // namespace homlat
