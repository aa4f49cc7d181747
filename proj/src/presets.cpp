#include <json.hpp>

#include "scl/config.hpp"

// Shipped experiment presets. Paper-scale rows keep the published iteration
// counts and evaluation grids; every row also has a desk-scale variant
// (suffix _desk) with reduced epochs and coefficient grids so the full
// pipeline runs on a workstation.

namespace scl::harness {

using nlohmann::ordered_json;

namespace {

ordered_json base(const std::string& name, const std::string& mode, long epochs, bool decay) {
  ordered_json j;
  j["version"] = 1;
  j["name"] = name;
  j["seed"] = 0;
  j["train"] = {{"mode", mode},
                {"epochs", epochs},
                {"primal_lr", 1e-3},
                {"dual_lr", 1e-4},
                {"decay_factor", decay ? 0.9 : 1.0},
                {"decay_interval", decay ? 5000 : 0},
                {"log_every", epochs > 50000 ? 100 : 10}};
  return j;
}

ordered_json bc_objective(int n_ic, int n_periodic, double weight) {
  return {{"kind", "bc"},       {"role", "objective"},       {"label", "bc"},
          {"n_ic", n_ic},       {"n_periodic", n_periodic},  {"weight", weight}};
}

ordered_json mh_pde(double eps, std::vector<double> cov, int keep, int chains) {
  return {{"kind", "pde"},
          {"label", "pde"},
          {"tolerance", eps},
          {"policy", "mh"},
          {"batch", keep},
          {"proposal", ordered_json{{"cov_diag", cov}, {"steps", 5000}, {"chains", chains}}}};
}

ordered_json uniform_pde(int batch, double weight) {
  return {{"kind", "pde"},   {"label", "pde"},  {"tolerance", 0.0},
          {"policy", "uniform_per_epoch"}, {"batch", batch}, {"weight", weight}};
}

// Single-BVP rows (convection / reaction-diffusion): SCL and the
// weighted-sum baseline with uniform resampling.
void add_single(std::map<std::string, ordered_json>& out, const std::string& stem,
                const std::string& bvp_id, std::vector<double> coeffs, double eps_pde,
                long paper_epochs, bool decay) {
  for (const bool desk : {false, true}) {
    const std::string suffix = desk ? "_desk" : "";
    const long epochs = desk ? 30000 : paper_epochs;
    const int chains = desk ? 2 : 1;
    {
      ordered_json j = base(stem + "_scl" + suffix, "scl", epochs, decay);
      j["bvp"] = {{"id", bvp_id}, {"coefficients", {{"fixed", coeffs}}}};
      j["model"] = {{"hidden_layers", 4}, {"hidden_width", 50}, {"parametric", false}};
      j["constraints"] = {bc_objective(256, 100, 1.0),
                          mh_pde(eps_pde, {0.25, 0.01}, 1000, chains)};
      j["evaluation"] = {{"grid", {256, 100}}};
      out[j["name"]] = j;
    }
    {
      ordered_json j = base(stem + "_pinn" + suffix, "pinn", epochs, decay);
      j["bvp"] = {{"id", bvp_id}, {"coefficients", {{"fixed", coeffs}}}};
      j["model"] = {{"hidden_layers", 4}, {"hidden_width", 50}, {"parametric", false}};
      j["constraints"] = {bc_objective(256, 100, 100.0), uniform_pde(1000, 1.0)};
      j["evaluation"] = {{"grid", {256, 100}}};
      out[j["name"]] = j;
    }
  }
}

// Fixed-collocation variants used for the invariance study.
void add_invariance(std::map<std::string, ordered_json>& out) {
  for (const bool desk : {false, true}) {
    const std::string suffix = desk ? "_desk" : "";
    const long epochs = desk ? 30000 : 200000;
    const int chains = desk ? 2 : 1;
    const ordered_json bvp = {{"id", "convection"}, {"coefficients", {{"fixed", {30.0}}}}};
    const ordered_json model = {{"hidden_layers", 4}, {"hidden_width", 50}, {"parametric", false}};
    const ordered_json fixed_pde = {{"kind", "pde"},   {"label", "pde"},   {"tolerance", 1e-3},
                                    {"policy", "fixed"}, {"batch", 100},   {"weight", 1.0}};
    {
      ordered_json j = base("convection_b30_fixed_scl_inv" + suffix, "scl", epochs, true);
      j["bvp"] = bvp;
      j["model"] = model;
      ordered_json inv = {{"kind", "invariance"},
                          {"label", "inv"},
                          {"tolerance", 1e-3},
                          {"policy", "mh"},
                          {"batch", 1000},
                          {"transform", 0},
                          {"proposal", ordered_json{{"cov_diag", {0.5, 0.1}},
                                                    {"steps", 5000},
                                                    {"chains", chains}}}};
      j["constraints"] = {bc_objective(256, 100, 1.0), fixed_pde, inv};
      j["evaluation"] = {{"grid", {256, 100}}};
      out[j["name"]] = j;
    }
    {
      ordered_json j = base("convection_b30_fixed_scl" + suffix, "scl", epochs, true);
      j["bvp"] = bvp;
      j["model"] = model;
      j["constraints"] = {bc_objective(256, 100, 1.0), fixed_pde};
      j["evaluation"] = {{"grid", {256, 100}}};
      out[j["name"]] = j;
    }
    {
      ordered_json j = base("convection_b30_fixed_pinn" + suffix, "pinn", epochs, true);
      j["bvp"] = bvp;
      j["model"] = model;
      ordered_json pde = fixed_pde;
      j["constraints"] = {bc_objective(256, 100, 100.0), pde};
      j["evaluation"] = {{"grid", {256, 100}}};
      out[j["name"]] = j;
    }
  }
}

void add_eikonal(std::map<std::string, ordered_json>& out) {
  for (const bool desk : {false, true}) {
    const std::string suffix = desk ? "_desk" : "";
    const long epochs = desk ? 20000 : 60000;
    const int chains = desk ? 2 : 1;
    for (const bool pinn : {false, true}) {
      ordered_json j =
          base(std::string("eikonal_") + (pinn ? "pinn" : "scl") + suffix, pinn ? "pinn" : "scl",
               epochs, true);
      j["bvp"] = {{"id", "eikonal"},
                  {"shape", ordered_json{{"kind", "two_circles"},
                                         {"center", {-0.5, -0.3}},
                                         {"radius", 0.35},
                                         {"center2", {0.45, 0.4}},
                                         {"radius2", 0.3}}}};
      j["model"] = {{"hidden_layers", 4}, {"hidden_width", 128}, {"parametric", false}};
      ordered_json bc = {{"kind", "bc"},        {"role", "objective"}, {"label", "bc"},
                         {"n_boundary", 512},   {"weight", 10.0}};
      ordered_json structural = {{"kind", "structural"},
                                 {"label", "sign"},
                                 {"tolerance", 1e-3},
                                 {"policy", "fixed"},
                                 {"batch", 40},
                                 {"weight", 500.0}};
      if (pinn) {
        j["constraints"] = {bc, uniform_pde(1000, 1.0), structural};
      } else {
        j["constraints"] = {bc, mh_pde(0.5, {0.04, 0.04}, 1000, chains), structural};
      }
      j["evaluation"] = {{"grid", {384, 384}}};
      out[j["name"]] = j;
    }
  }
}

// Parametric families: worst-case coefficients for SCL, fixed coefficient
// discretizations for the baseline.
void add_parametric(std::map<std::string, ordered_json>& out) {
  struct Row {
    std::string stem;
    ordered_json bvp;
    double eps;
    std::vector<double> cov;
    int keep;
    bool decay;
    std::vector<int> grid;
    int coeff_grid_paper, coeff_grid_desk;
    std::vector<int> pinn_grids;
  };
  const std::vector<Row> rows = {
      {"convection_param",
       {{"id", "convection"}, {"coefficients", {{"lo", {1.0}}, {"hi", {30.0}}}}},
       1e-3,
       {0.25, 0.01, 9.0},
       2500,
       true,
       {256, 100},
       1000,
       20,
       {4, 7, 30}},
      {"rd_param_0_5",
       {{"id", "reaction_diffusion"},
        {"coefficients", {{"lo", {0.0, 0.0}}, {"hi", {5.0, 5.0}}}}},
       5e-3,
       {0.25, 0.01, 1.0, 1.0},
       2500,
       false,
       {256, 100},
       100,
       5,
       {3, 6}},
      {"rd_param_0_10",
       {{"id", "reaction_diffusion"},
        {"coefficients", {{"lo", {0.0, 0.0}}, {"hi", {10.0, 10.0}}}}},
       1e-2,
       {0.25, 0.01, 1.0, 1.0},
       2500,
       false,
       {256, 100},
       100,
       5,
       {3, 6}},
      {"rd_param_0_20",
       {{"id", "reaction_diffusion"},
        {"coefficients", {{"lo", {0.0, 0.0}}, {"hi", {20.0, 20.0}}}}},
       1e-1,
       {0.25, 0.01, 1.0, 1.0},
       2500,
       false,
       {256, 100},
       100,
       5,
       {3, 5}},
      {"helmholtz_param_1_2",
       {{"id", "helmholtz"},
        {"wave_number", 1.0},
        {"coefficients", {{"lo", {1.0, 1.0}}, {"hi", {2.0, 2.0}}}}},
       0.5,
       {0.04, 0.04, 0.04, 0.04},
       2500,
       true,
       {256, 256},
       100,
       5,
       {3, 6}},
      {"helmholtz_param_1_3",
       {{"id", "helmholtz"},
        {"wave_number", 1.0},
        {"coefficients", {{"lo", {1.0, 1.0}}, {"hi", {3.0, 3.0}}}}},
       5.0,
       {0.04, 0.04, 0.04, 0.04},
       5000,
       true,
       {256, 256},
       100,
       5,
       {3, 6}},
  };
  for (const auto& row : rows) {
    const bool helmholtz = row.stem.rfind("helmholtz", 0) == 0;
    for (const bool desk : {false, true}) {
      const std::string suffix = desk ? "_desk" : "";
      const long epochs = desk ? (row.stem == "convection_param" ? 60000 : 30000) : 200000;
      const int chains = desk ? 2 : 1;
      ordered_json bc = helmholtz ? ordered_json{{"kind", "bc"},
                                                 {"role", "objective"},
                                                 {"label", "bc"},
                                                 {"n_boundary", 1024},
                                                 {"weight", 100.0}}
                                  : bc_objective(256, 100, 100.0);
      {
        ordered_json j = base(row.stem + "_scl" + suffix, "scl", epochs, row.decay);
        j["bvp"] = row.bvp;
        j["model"] = {{"hidden_layers", 4}, {"hidden_width", 50}, {"parametric", true}};
        ordered_json obj = bc;
        obj["weight"] = 1.0;
        j["constraints"] = {obj, mh_pde(row.eps, row.cov, row.keep, chains)};
        j["evaluation"] = {{"grid", row.grid},
                           {"coefficient_grid", desk ? row.coeff_grid_desk : row.coeff_grid_paper}};
        out[j["name"]] = j;
      }
      for (int g : row.pinn_grids) {
        ordered_json j =
            base(row.stem + "_pinn" + std::to_string(g) + suffix, "pinn", epochs, row.decay);
        j["bvp"] = row.bvp;
        j["model"] = {{"hidden_layers", 4}, {"hidden_width", 50}, {"parametric", true}};
        ordered_json pde = uniform_pde(1000, 1.0);
        pde["pi_grid"] = g;
        j["constraints"] = {bc, pde};
        j["evaluation"] = {{"grid", row.grid},
                           {"coefficient_grid", desk ? row.coeff_grid_desk : row.coeff_grid_paper}};
        out[j["name"]] = j;
      }
    }
  }
}

// Observation-only (feasibility) training on synthesized datasets, plus the
// averaged-loss baseline with the identical budget.
void add_observational(std::map<std::string, ordered_json>& out) {
  for (const bool desk : {false, true}) {
    const std::string suffix = desk ? "_desk" : "";
    const long epochs = desk ? 15000 : 100000;
    for (const bool avg : {false, true}) {
      ordered_json j = base(std::string("convection_obs12_") + (avg ? "avg" : "sclo") + suffix,
                            avg ? "pinn" : "scl", epochs, true);
      j["train"]["dual_lr"] = 1e-3;
      j["bvp"] = {{"id", "convection"}, {"coefficients", {{"lo", {1.0}}, {"hi", {30.0}}}}};
      j["model"] = {{"hidden_layers", 4}, {"hidden_width", 50}, {"parametric", true}};
      j["observations"] = {
          {"count", 12}, {"noise_sigma", 0.0}, {"grid", {64, 32}}, {"seed", 7}};
      j["constraints"] = {ordered_json{{"kind", "observation"},
                                       {"label", "obs"},
                                       {"tolerance", 1e-3},
                                       {"policy", "uniform_per_epoch"},
                                       {"batch", 256},
                                       {"per_dataset", true},
                                       {"dataset", 0},
                                       {"weight", 1.0}}};
      j["evaluation"] = {{"grid", {64, 32}}, {"coefficient_grid", 12}};
      out[j["name"]] = j;
    }
  }
}

}  // namespace

const std::map<std::string, ordered_json>& presets() {
  static const std::map<std::string, ordered_json> map = [] {
    std::map<std::string, ordered_json> m;
    add_single(m, "convection_b30", "convection", {30.0}, 1e-3, 175000, true);
    add_single(m, "convection_b50", "convection", {50.0}, 5e-3, 200000, true);
    add_single(m, "rd_nu3_rho3", "reaction_diffusion", {3.0, 3.0}, 1e-2, 200000, false);
    add_single(m, "rd_nu3_rho5", "reaction_diffusion", {3.0, 5.0}, 5e-3, 200000, false);
    add_invariance(m);
    add_eikonal(m);
    add_parametric(m);
    add_observational(m);
    return m;
  }();
  return map;
}

}  // namespace scl::harness
