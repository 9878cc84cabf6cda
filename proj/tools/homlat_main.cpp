// Experiment runner. Every subcommand prints one self-describing JSON
// document to stdout (resolved configuration, seed, library version, report
// payload) with no timestamps, so a fixed configuration emits identical
// bytes. `--format csv --out FILE` additionally writes per-observation rows.
//
// Exit codes: 0 success, 2 invalid configuration, 3 solver failure,
// 4 enumeration capacity exceeded.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "homlat/homlat.hpp"

namespace {

using homlat::json;

// ---------------------------------------------------------------------------
// Option plumbing.

struct CommonOpts {
  int dim = 2;
  int size = 0;  // 0: derive from T
  double T = 16.0;
  std::vector<double> T_ladder;
  double lambda = 0.25;
  std::vector<double> xi;
  std::string ensemble = "two-state";
  std::int64_t samples = 10;
  double tol = 1e-10;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out;
  std::string format = "json";
  std::string config_path;

  CLI::Option* dim_opt = nullptr;
  CLI::Option* size_opt = nullptr;
  CLI::Option* T_opt = nullptr;
  CLI::Option* ladder_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* xi_opt = nullptr;
  CLI::Option* ensemble_opt = nullptr;
  CLI::Option* samples_opt = nullptr;
  CLI::Option* tol_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  o.dim_opt = cmd->add_option("--dim", o.dim, "lattice dimension (1..4)");
  o.size_opt = cmd->add_option("--size", o.size, "torus side; 0 derives max(16, 4*ceil(sqrt(T)))");
  o.T_opt = cmd->add_option("--T", o.T, "mass scale T > 0");
  o.ladder_opt = cmd->add_option("--T-ladder", o.T_ladder, "increasing T values")
                     ->delimiter(',');
  o.lambda_opt = cmd->add_option("--lambda", o.lambda, "ellipticity ratio in (0, 1]");
  o.xi_opt = cmd->add_option("--xi", o.xi, "slope vector, comma separated")->delimiter(',');
  o.ensemble_opt = cmd->add_option("--ensemble", o.ensemble,
                                   "ensemble: JSON file path, inline JSON, 'two-state', or "
                                   "'constant'");
  o.samples_opt = cmd->add_option("--samples", o.samples, "sample count");
  o.tol_opt = cmd->add_option("--tol", o.tol, "relative solver tolerance");
  o.seed_opt = cmd->add_option("--seed", o.seed, "master seed");
  o.jobs_opt = cmd->add_option("--jobs", o.jobs, "worker threads (default 1)");
  cmd->add_option("--out", o.out, "output file for CSV rows or field data");
  cmd->add_option("--format", o.format, "output format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--config", o.config_path, "JSON config file; flags override its values");
}

// Values from --config fill in wherever the flag was not passed.
template <typename T>
void merge(const json& cfg, const char* key, CLI::Option* opt, T& target) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) target = cfg.at(key).get<T>();
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw homlat::ValidationError("cannot open config file: " + path);
  json j;
  in >> j;
  if (!j.is_object()) throw homlat::ValidationError("config file must hold a JSON object");
  return j;
}

void apply_config(const json& cfg, CommonOpts& o) {
  merge(cfg, "dim", o.dim_opt, o.dim);
  merge(cfg, "size", o.size_opt, o.size);
  merge(cfg, "T", o.T_opt, o.T);
  merge(cfg, "T_ladder", o.ladder_opt, o.T_ladder);
  merge(cfg, "lambda", o.lambda_opt, o.lambda);
  merge(cfg, "xi", o.xi_opt, o.xi);
  merge(cfg, "ensemble", o.ensemble_opt, o.ensemble);
  merge(cfg, "samples", o.samples_opt, o.samples);
  merge(cfg, "tol", o.tol_opt, o.tol);
  merge(cfg, "seed", o.seed_opt, o.seed);
  merge(cfg, "jobs", o.jobs_opt, o.jobs);
}

// ---------------------------------------------------------------------------
// Resolution helpers.

homlat::EnsembleSpec resolve_ensemble(const std::string& text, int dim, double lambda) {
  if (text == "two-state") return homlat::reference_two_state(dim, lambda);
  if (text == "constant")
    return homlat::EnsembleSpec::make_constant(dim, lambda, homlat::identity_matrix(dim));
  json j;
  if (!text.empty() && text.front() == '{') {
    j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw homlat::ValidationError("inline ensemble JSON does not parse");
  } else {
    std::ifstream in(text);
    if (!in) throw homlat::ValidationError("cannot open ensemble file: " + text);
    in >> j;
  }
  return homlat::EnsembleSpec::from_json(j);
}

std::vector<double> resolve_xi(const std::vector<double>& xi, int dim) {
  if (xi.empty()) {
    std::vector<double> e1(static_cast<std::size_t>(dim), 0.0);
    e1[0] = 1.0;
    return e1;
  }
  if (static_cast<int>(xi.size()) != dim)
    throw homlat::ValidationError("xi must have one entry per dimension");
  return xi;
}

int resolve_side(const CommonOpts& o) {
  return o.size > 0 ? o.size : homlat::default_side_for(o.T);
}

homlat::SolveOptions resolve_solve_options(const CommonOpts& o) {
  homlat::SolveOptions opts;
  opts.tol = o.tol;
  return opts;
}

json resolved_common(const CommonOpts& o, const homlat::EnsembleSpec& spec) {
  json j{{"dim", o.dim},       {"lambda", o.lambda}, {"tol", o.tol},
         {"seed", o.seed},     {"jobs", o.jobs},     {"format", o.format},
         {"ensemble", spec.to_json()}};
  if (!o.out.empty()) j["out"] = o.out;
  return j;
}

void require_out_for_csv(const CommonOpts& o) {
  if (o.format == "csv" && o.out.empty())
    throw homlat::ValidationError("--format csv requires --out");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw homlat::ValidationError("cannot open output file: " + path);
  return f;
}

void emit(const std::string& subcommand, const json& config, const json& payload) {
  std::cout << homlat::make_report_document(subcommand, config, payload).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Subcommands.

int run_corrector(const CommonOpts& o) {
  require_out_for_csv(o);
  const auto spec = resolve_ensemble(o.ensemble, o.dim, o.lambda);
  const int side = resolve_side(o);
  const auto grid = homlat::make_grid(o.dim, side);
  const auto xi = resolve_xi(o.xi, o.dim);
  const auto a = homlat::sample_field(spec, grid, homlat::derive_seed(o.seed, 0));
  const auto result = homlat::solve_corrector(a, o.T, xi, resolve_solve_options(o));

  if (!o.out.empty()) {
    const auto fmt = o.format == "csv" ? homlat::FieldFileFormat::csv
                                       : homlat::FieldFileFormat::binary;
    homlat::write_scalar_field(o.out, result.phi, fmt);
  }

  json config = resolved_common(o, spec);
  config["size"] = side;
  config["T"] = o.T;
  config["xi"] = xi;
  emit("corrector", config, json(result.report));
  return 0;
}

int run_green(const CommonOpts& o, const std::string& mode) {
  require_out_for_csv(o);
  const auto spec = resolve_ensemble(o.ensemble, o.dim, o.lambda);
  const int side = resolve_side(o);
  const auto grid = homlat::make_grid(o.dim, side);
  const auto a = homlat::sample_field(spec, grid, homlat::derive_seed(o.seed, 0));
  const auto result = homlat::solve_green(a, o.T, 0, resolve_solve_options(o));

  json payload{{"column", result.report}};
  if (side >= 16) {
    const auto dm = mode == "value" ? homlat::DecayMode::value : homlat::DecayMode::gradient;
    const auto fit = homlat::decay_profile(result.column, dm, o.T);
    payload["decay"] = fit;
    if (o.format == "csv") {
      auto f = open_out(o.out);
      homlat::write_decay_csv(f, fit);
    }
  }

  json config = resolved_common(o, spec);
  config["size"] = side;
  config["T"] = o.T;
  config["mode"] = mode;
  emit("green", config, payload);
  return 0;
}

int run_weighted_sum(const CommonOpts& o, double q) {
  require_out_for_csv(o);
  const auto spec = resolve_ensemble(o.ensemble, o.dim, o.lambda);
  const int side = resolve_side(o);
  const auto grid = homlat::make_grid(o.dim, side);
  const auto opts = resolve_solve_options(o);

  std::vector<homlat::WeightedSumReport> rows(static_cast<std::size_t>(o.samples));
  homlat::parallel_for(o.samples, o.jobs, [&](std::int64_t i) {
    const auto a = homlat::sample_field(spec, grid, homlat::derive_seed(o.seed, i));
    rows[static_cast<std::size_t>(i)] = homlat::weighted_gradient_sum(a, o.T, q, opts);
  });

  std::vector<double> values;
  for (const auto& r : rows) values.push_back(r.value);
  json payload{{"rows", rows}, {"summary", homlat::summarize(values)}};

  if (o.format == "csv") {
    auto f = open_out(o.out);
    homlat::write_weighted_sum_csv(f, rows);
  }

  json config = resolved_common(o, spec);
  config["size"] = side;
  config["T"] = o.T;
  config["q"] = q;
  config["samples"] = o.samples;
  emit("weighted-sum", config, payload);
  return 0;
}

int run_helmholtz(const CommonOpts& o) {
  require_out_for_csv(o);
  const auto spec = resolve_ensemble(o.ensemble, o.dim, o.lambda);
  const int side = resolve_side(o);
  const auto grid = homlat::make_grid(o.dim, side);

  std::vector<homlat::HelmholtzIdentityReport> rows(static_cast<std::size_t>(o.samples));
  homlat::parallel_for(o.samples, o.jobs, [&](std::int64_t i) {
    const auto a = homlat::sample_field(spec, grid, homlat::derive_seed(o.seed, i));
    rows[static_cast<std::size_t>(i)] = homlat::helmholtz_identity_check(a, o.T, o.lambda, o.tol);
  });

  double max_defect = 0.0;
  bool all_passed = true;
  std::vector<double> defects;
  for (const auto& r : rows) {
    max_defect = std::max(max_defect, r.max_defect);
    all_passed = all_passed && r.passed;
    defects.push_back(r.max_defect);
  }
  json payload{{"rows", rows}, {"max_defect", max_defect}, {"all_passed", all_passed}};

  if (o.format == "csv") {
    auto f = open_out(o.out);
    homlat::write_defect_csv(f, defects);
  }

  json config = resolved_common(o, spec);
  config["size"] = side;
  config["T"] = o.T;
  config["samples"] = o.samples;
  emit("helmholtz", config, payload);
  return 0;
}

int run_multiplier(const CommonOpts& o, const std::string& kind, int j_idx, int l_idx,
                   const std::vector<double>& xi_point, int spot_checks) {
  require_out_for_csv(o);
  homlat::MultiplierSpec spec;
  spec.kind = homlat::multiplier_kind_from_string(kind);
  spec.j = j_idx;
  spec.l = l_idx;
  spec.T = o.T;
  spec.lambda = o.lambda;

  json payload;
  if (!xi_point.empty()) {
    if (static_cast<int>(xi_point.size()) != o.dim)
      throw homlat::ValidationError("--xi-point must have one entry per dimension");
    const auto v = homlat::eval_multiplier(spec, xi_point);
    payload["value_re"] = v.real();
    payload["value_im"] = v.imag();
    payload["xi_point"] = xi_point;
  }
  if (spot_checks > 0) {
    homlat::CounterRng rng(homlat::derive_seed(o.seed, 0));
    double max_identity = 0.0, max_star = 0.0;
    std::vector<double> xi(static_cast<std::size_t>(o.dim));
    constexpr double pi = 3.14159265358979323846;
    for (int t = 0; t < spot_checks; ++t) {
      for (auto& x : xi) x = rng.next_in(-pi, pi);
      max_identity =
          std::max(max_identity, homlat::multiplier_identity_defect(o.T, xi, j_idx, l_idx));
      max_star = std::max(max_star, homlat::star_decomposition_defect(o.T, xi, j_idx, l_idx));
    }
    payload["spot_checks"] = spot_checks;
    payload["max_identity_defect"] = max_identity;
    payload["max_star_decomposition_defect"] = max_star;
  }
  if (payload.is_null())
    throw homlat::ValidationError("multiplier needs --xi-point and/or --spot-checks");

  json config{{"dim", o.dim}, {"T", o.T},           {"lambda", o.lambda},
              {"kind", kind}, {"j", j_idx},         {"l", l_idx},
              {"seed", o.seed}, {"format", o.format}};
  emit("multiplier", config, payload);
  return 0;
}

int run_cz_check(const CommonOpts& o, double p, double gamma, std::vector<int> ladder,
                 bool T_given) {
  require_out_for_csv(o);
  if (ladder.empty()) ladder.push_back(resolve_side(o));
  const double T_override = T_given ? o.T : 0.0;  // 0: per-side T = L^2
  const int trials = static_cast<int>(o.samples);
  const auto rep =
      homlat::cz_ladder_experiment(o.dim, ladder, T_override, p, gamma, trials, o.seed);

  if (o.format == "csv") {
    auto f = open_out(o.out);
    homlat::write_cz_csv(f, rep);
  }

  json config{{"dim", o.dim},     {"p", p},
              {"gamma", gamma},   {"sides", ladder},
              {"trials", trials}, {"seed", o.seed},
              {"format", o.format}};
  if (T_given) config["T"] = o.T;
  emit("cz-check", config, json(rep));
  return 0;
}

int run_moments(const CommonOpts& o, const std::vector<int>& p_list, bool with_ahom) {
  require_out_for_csv(o);
  const auto spec = resolve_ensemble(o.ensemble, o.dim, o.lambda);
  homlat::CorrectorProblem problem;
  problem.grid = homlat::make_grid(o.dim, resolve_side(o));
  problem.T = o.T;
  problem.xi = resolve_xi(o.xi, o.dim);
  problem.options = resolve_solve_options(o);

  const auto rep =
      homlat::estimate_moments(spec, p_list, problem, o.samples, o.seed, o.jobs, with_ahom);

  if (o.format == "csv") {
    auto f = open_out(o.out);
    homlat::write_moments_csv(f, rep);
  }

  json config = resolved_common(o, spec);
  config["size"] = problem.grid->side();
  config["T"] = o.T;
  config["xi"] = problem.xi;
  config["p"] = p_list;
  config["samples"] = o.samples;
  config["ahom"] = with_ahom;
  emit("moments", config, json(rep));
  return 0;
}

int run_scaling(const CommonOpts& o, const std::vector<int>& p_list) {
  require_out_for_csv(o);
  if (o.T_ladder.empty()) throw homlat::ValidationError("scaling requires --T-ladder");
  const auto spec = resolve_ensemble(o.ensemble, o.dim, o.lambda);
  const auto xi = resolve_xi(o.xi, o.dim);

  const auto rep = homlat::scaling_study(spec, xi, o.T_ladder, o.samples, o.seed, p_list,
                                         resolve_solve_options(o), o.jobs, o.size);

  if (o.format == "csv") {
    auto f = open_out(o.out);
    homlat::write_scaling_csv(f, rep);
  }

  json config = resolved_common(o, spec);
  config["T_ladder"] = o.T_ladder;
  config["xi"] = xi;
  config["p"] = p_list;
  config["samples"] = o.samples;
  if (o.size > 0) config["size"] = o.size;
  emit("scaling", config, json(rep));
  return 0;
}

int run_ineq_check(const CommonOpts& o, const std::string& mode, const std::string& observable,
                   int p) {
  require_out_for_csv(o);
  const auto spec = resolve_ensemble(o.ensemble, o.dim, o.lambda);
  const int side = o.size > 0 ? o.size : 2;  // enumeration wants tiny tori
  const auto grid = homlat::make_grid(o.dim, side);
  const auto kind = homlat::inequality_kind_from_string(mode);
  const auto xi = resolve_xi(o.xi, o.dim);
  const double T = o.T;
  const auto opts = resolve_solve_options(o);

  homlat::Observable obs;
  if (observable == "a11") {
    obs = [](const homlat::CoefficientField& a) { return a.entry(0, 0, 0); };
  } else if (observable == "phi0") {
    obs = [&](const homlat::CoefficientField& a) {
      return homlat::solve_corrector(a, T, xi, opts).phi[0];
    };
  } else if (observable == "grad0") {
    obs = [&](const homlat::CoefficientField& a) {
      const auto r = homlat::solve_corrector(a, T, xi, opts);
      return r.phi[a.grid().neighbor(0, 0, +1)] - r.phi[0] + xi[0];
    };
  } else {
    throw homlat::ValidationError("unknown observable: '" + observable +
                                  "' (expected a11, phi0, or grad0)");
  }

  const auto rep = homlat::verify_functional_inequality(spec, grid, obs, kind, p);

  json config = resolved_common(o, spec);
  config["size"] = side;
  config["T"] = T;
  config["xi"] = xi;
  config["mode"] = mode;
  config["observable"] = observable;
  config["p"] = p;
  emit("ineq-check", config, json(rep));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice corrector and Green function laboratory"};
  app.require_subcommand(1);

  CommonOpts o_corrector, o_green, o_weighted, o_helmholtz, o_multiplier, o_cz, o_moments,
      o_scaling, o_ineq;

  auto* corrector = app.add_subcommand("corrector", "solve one corrector instance");
  add_common_options(corrector, o_corrector);

  auto* green = app.add_subcommand("green", "Green column, row sum, decay profile");
  add_common_options(green, o_green);
  std::string green_mode = "gradient";
  green->add_option("--mode", green_mode, "decay probe: value or gradient")
      ->check(CLI::IsMember({"value", "gradient"}));

  auto* weighted = app.add_subcommand("weighted-sum", "weighted Green gradient sums");
  add_common_options(weighted, o_weighted);
  double ws_q = 1.1;
  weighted->add_option("--q", ws_q, "weight exponent q >= 1");

  auto* helmholtz = app.add_subcommand("helmholtz", "Helmholtz projection identity check");
  add_common_options(helmholtz, o_helmholtz);

  auto* multiplier = app.add_subcommand("multiplier", "Fourier multiplier evaluation");
  add_common_options(multiplier, o_multiplier);
  std::string mult_kind = "M_T";
  int mult_j = 1, mult_l = 1, mult_spot = 0;
  std::vector<double> mult_xi;
  multiplier->add_option("--kind", mult_kind,
                         "M_T, M_T_cont, M_star_1, M_star_2, M_star_T, h_factor, "
                         "helmholtz_symbol");
  multiplier->add_option("--j", mult_j, "first component index (1-based)");
  multiplier->add_option("--l", mult_l, "second component index (1-based)");
  multiplier->add_option("--xi-point", mult_xi, "evaluation point in (-pi, pi]^d")
      ->delimiter(',');
  multiplier->add_option("--spot-checks", mult_spot, "random identity spot checks");

  auto* cz = app.add_subcommand("cz-check", "spectral gradient-ratio experiment");
  add_common_options(cz, o_cz);
  double cz_p = 2.0, cz_gamma = 0.0;
  std::vector<int> cz_ladder;
  cz->add_option("--p", cz_p, "exponent p in (1, inf)");
  cz->add_option("--gamma", cz_gamma, "weight exponent, 0 <= gamma < min(d(p-1), 1/2)");
  cz->add_option("--size-ladder", cz_ladder, "grid sides to sweep")->delimiter(',');

  auto* moments = app.add_subcommand("moments", "Monte Carlo corrector moments");
  add_common_options(moments, o_moments);
  std::vector<int> mom_p = {1, 2};
  bool mom_ahom = true;
  moments->add_option("--p", mom_p, "half-moment orders")->delimiter(',');
  moments->add_flag("--ahom,!--no-ahom", mom_ahom, "estimate the homogenized matrix");

  auto* scaling = app.add_subcommand("scaling", "moment growth across a T ladder");
  add_common_options(scaling, o_scaling);
  std::vector<int> sc_p = {1, 2};
  scaling->add_option("--p", sc_p, "half-moment orders")->delimiter(',');

  auto* ineq = app.add_subcommand("ineq-check", "functional inequality by enumeration");
  add_common_options(ineq, o_ineq);
  std::string ineq_mode = "sg", ineq_obs = "a11";
  int ineq_p = 1;
  ineq->add_option("--mode", ineq_mode, "sg, lsi, or sgp");
  ineq->add_option("--observable", ineq_obs, "a11, phi0, or grad0");
  ineq->add_option("--p", ineq_p, "moment order for sgp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: validation: " << e.what() << '\n';
    return 2;
  }

  try {
    if (app.got_subcommand(corrector)) {
      apply_config(load_config(o_corrector.config_path), o_corrector);
      return run_corrector(o_corrector);
    }
    if (app.got_subcommand(green)) {
      apply_config(load_config(o_green.config_path), o_green);
      return run_green(o_green, green_mode);
    }
    if (app.got_subcommand(weighted)) {
      apply_config(load_config(o_weighted.config_path), o_weighted);
      return run_weighted_sum(o_weighted, ws_q);
    }
    if (app.got_subcommand(helmholtz)) {
      apply_config(load_config(o_helmholtz.config_path), o_helmholtz);
      return run_helmholtz(o_helmholtz);
    }
    if (app.got_subcommand(multiplier)) {
      apply_config(load_config(o_multiplier.config_path), o_multiplier);
      return run_multiplier(o_multiplier, mult_kind, mult_j, mult_l, mult_xi, mult_spot);
    }
    if (app.got_subcommand(cz)) {
      apply_config(load_config(o_cz.config_path), o_cz);
      return run_cz_check(o_cz, cz_p, cz_gamma, cz_ladder, o_cz.T_opt->count() > 0);
    }
    if (app.got_subcommand(moments)) {
      apply_config(load_config(o_moments.config_path), o_moments);
      return run_moments(o_moments, mom_p, mom_ahom);
    }
    if (app.got_subcommand(scaling)) {
      apply_config(load_config(o_scaling.config_path), o_scaling);
      return run_scaling(o_scaling, sc_p);
    }
    if (app.got_subcommand(ineq)) {
      apply_config(load_config(o_ineq.config_path), o_ineq);
      return run_ineq_check(o_ineq, ineq_mode, ineq_obs, ineq_p);
    }
    std::cerr << "error: validation: no subcommand selected\n";
    return 2;
  } catch (const homlat::CapacityError& e) {
    std::cerr << "error: capacity: " << e.what() << '\n';
    return 4;
  } catch (const homlat::SolverError& e) {
    std::cerr << "error: solver: " << e.what() << '\n';
    return 3;
  } catch (const homlat::ValidationError& e) {
    std::cerr << "error: validation: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: validation: " << e.what() << '\n';
    return 2;
  }
}
