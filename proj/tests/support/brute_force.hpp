#pragma once

#include "hbflow/mesh.hpp"

#include <random>
#include <vector>

namespace oracle {

struct Params {
    double p;
    double g;
    double gamma;
};

/// Objective and gradient written out triangle by triangle from the vertex
/// coordinates, sharing nothing with the library beyond the Mesh container.
double objective(const hbflow::Mesh& mesh, const std::vector<double>& u, const Params& params,
                 double f);
std::vector<double> gradient(const hbflow::Mesh& mesh, const std::vector<double>& u,
                             const Params& params, double f);

/// Uniform random interior values in [-scale, scale], redrawn until every
/// triangle with an interior vertex has |grad u| >= min_slope and gamma |grad u|
/// at least `margin` (relative) away from g.
std::vector<double> random_state(const hbflow::Mesh& mesh, const Params& params, std::mt19937& rng,
                                 double scale, double margin = 0.05, double min_slope = 1e-3);

/// Interior values scattered to a full vertex vector with zeros on the boundary.
std::vector<double> to_vertices(const hbflow::Mesh& mesh, const std::vector<double>& u);

} // namespace oracle
