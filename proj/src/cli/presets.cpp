#include <algorithm>

#include "conet/cli.hpp"

namespace conet::cli {

namespace {

Preset make(std::string name, std::string description, const char* json)
{
    return {std::move(name), std::move(description), Json::parse(json)};
}

// Opinion dynamics on a line: attraction toward the local mass centre with
// weights relaxing to the mass-weighted proximity of the endpoints.
std::string opinion_line(int n)
{
    return R"json({
        "graph": {"recipe": "uniform-grid", "n": )json" +
           std::to_string(n) + R"json(, "dim": 1},
        "interpolation": "upwind",
        "velocity": {"kind": "interaction", "kernel": "gaussian(0.3)", "strength": -0.5},
        "omega": {"kind": "convolution", "kernel": "gaussian(0.3)", "strength": 1.0},
        "regime": "coupled",
        "horizon": 1.0,
        "mass_bound": 1.0,
        "initial": {
            "rho": {"profile": "gaussian-bump", "center": 0.35, "width": 0.15, "floor": 0.05, "total": 1.0},
            "eta": {"kind": "constant", "value": 1.0}
        },
        "integrator": {"scheme": "rk4", "dt": 0.001}
    })json";
}

// Shared model of the two time-scale studies.
constexpr const char* kLimitModel = R"json(
        "graph": {"recipe": "uniform-grid", "n": 20, "dim": 1},
        "interpolation": "upwind",
        "velocity": {"kind": "interaction", "kernel": "gaussian(0.3)", "strength": -0.4},
        "omega": {"kind": "convolution", "kernel": "gaussian(0.4)", "strength": 0.8},
        "horizon": 1.0,
        "mass_bound": 1.0,
        "initial": {
            "rho": {"profile": "gaussian-bump", "center": 0.4, "width": 0.2, "total": 1.0},
            "eta": {"kind": "omega"}
        },
        "integrator": {"scheme": "rk4", "dt": 0.01},)json";

std::vector<Preset> build()
{
    std::vector<Preset> out;
    out.push_back(make("zero-velocity", "8 vertices, no transport: rho stays at rho0 while eta relaxes",
                       R"json({
        "graph": {"recipe": "uniform-grid", "n": 8},
        "velocity": {"kind": "zero"},
        "omega": {"kind": "convolution", "kernel": "gaussian(0.3)", "strength": 1.0},
        "regime": "coupled",
        "horizon": 1.0,
        "initial": {
            "rho": {"profile": "gaussian-bump", "center": 0.5, "width": 0.2},
            "eta": {"kind": "constant", "value": 0.5}
        },
        "integrator": {"scheme": "rk4", "dt": 0.01}
    })json"));
    out.push_back({"opinion-line-16", "16 vertices on [0,1], Gaussian interaction velocity and Gaussian omega",
                   Json::parse(opinion_line(16))});
    out.push_back({"opinion-line-50", "opinion-line with 50 vertices",
                   Json::parse(opinion_line(50))});
    out.push_back(make("picard-10", "10 random vertices, weak coupling, Picard solve at T = 0.25 on 1001 grid points",
                       R"json({
        "graph": {"recipe": "random", "n": 10, "dim": 1, "seed": 7},
        "interpolation": "upwind",
        "velocity": {"kind": "interaction", "kernel": "gaussian(0.3)", "strength": 0.05},
        "omega": {"kind": "convolution", "kernel": "gaussian(0.3)", "strength": 0.7071067811865476},
        "regime": "coupled",
        "horizon": 0.25,
        "mass_bound": 1.0,
        "initial": {
            "rho": {"profile": "gaussian-bump", "center": 0.5, "width": 0.25, "floor": 0.1},
            "eta": {"kind": "constant", "value": 1.0}
        },
        "integrator": {"scheme": "rk4", "dt": 0.00025},
        "solver": "picard",
        "picard": {"grid_points": 1001, "tol": 1e-12, "max_iters": 60}
    })json"));
    out.push_back({"slow-20", "slow-graph limit study, n = 20, five epsilons from 1e-1 to 1e-3",
                   Json::parse(std::string("{") + kLimitModel + R"json(
        "regime": "coupled",
        "study": {
            "epsilons": [0.1, 0.031622776601683794, 0.01, 0.0031622776601683794, 0.001],
            "gates": {"slope": [0.9, 1.1], "within_bounds": true, "monotone": true, "required": true}
        }
    })json")});
    out.push_back({"fast-20", "fast-graph limit study with well-prepared eta0 = omega_0[rho0]",
                   Json::parse(std::string("{") + kLimitModel + R"json(
        "regime": "coupled",
        "study": {
            "epsilons": [0.1, 0.031622776601683794, 0.01, 0.0031622776601683794, 0.001],
            "well_prepared": true,
            "gates": {"slope": [0.85, 1.15], "within_bounds": true, "monotone": true, "required": true}
        }
    })json")});
    out.push_back(make("graph-limit-line", "uniform grids with 8..128 vertices on [0,1], finest rung as reference",
                       R"json({
        "graph": {"recipe": "uniform-grid", "n": 8},
        "velocity": {"kind": "interaction", "kernel": "gaussian(0.3)", "strength": -0.5},
        "omega": {"kind": "convolution", "kernel": "gaussian(0.3)", "strength": 1.0},
        "horizon": 0.5,
        "integrator": {"scheme": "rk4", "dt": 0.01},
        "study": {
            "counts": [8, 16, 32, 64, 128],
            "vertices": "uniform-grid",
            "density": {"profile": "cosine", "offset": 1.0, "amplitude": 0.5, "frequency": 1.0},
            "weights": {"offset": 0.5, "kernel": "gaussian(0.3)", "strength": 1.0},
            "gates": {"monotone": true, "mass_observable": 1e-10, "required": true}
        }
    })json"));
    out.push_back(make("positivity-ghosts",
                       "12 vertices with ghosts 3 and 8, repulsive omega, eta0 above the nonnegativity threshold",
                       R"json({
        "graph": {"recipe": "uniform-grid", "n": 12, "ghost_vertices": [3, 8]},
        "interpolation": "upwind",
        "velocity": {"kind": "interaction", "kernel": "gaussian(0.3)", "strength": -0.5},
        "omega": {"kind": "convolution", "kernel": "gaussian(0.3)", "strength": -0.3},
        "regime": "coupled",
        "horizon": 1.0,
        "initial": {
            "rho": {"profile": "gaussian-bump", "center": 0.4, "width": 0.2},
            "eta": {"kind": "constant", "value": 1.0}
        },
        "integrator": {"scheme": "rk4", "dt": 0.001}
    })json"));
    out.push_back(make("lemma-worked-example",
                       "contraction constants (1, 1, 0, 1, 0, 0, 1): beta = 3 binds and T* = 1/3",
                       R"json({
        "graph": {"recipe": "uniform-grid", "n": 2},
        "horizon": 0.25,
        "contraction_constants": {
            "L_phi": 1, "C_V": 1, "L_V": 0, "M": 1, "C_omega": 0, "L_omega": 0, "eta0_sup": 1
        }
    })json"));
    return out;
}

}  // namespace

const std::vector<Preset>& presets()
{
    static const std::vector<Preset> all = build();
    return all;
}

const Preset& find_preset(std::string_view name)
{
    const auto& all = presets();
    const auto it = std::find_if(all.begin(), all.end(), [&](const Preset& p) { return p.name == name; });
    if (it == all.end()) throw ConfigError("config /preset: unknown preset '" + std::string(name) + "'");
    return *it;
}

}  // namespace conet::cli
