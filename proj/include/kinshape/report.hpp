#pragma once

#include "kinshape/linfshape.hpp"
#include "kinshape/sim.hpp"
#include "kinshape/sweep.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>

namespace kinshape {

/// Shortest decimal with 17 significant digits; round-trips exactly.
std::string format_double(double v);

/// Columns: t, q_1..q_n, p_1..p_n, u_1..u_m, uki_1..uki_m, uovki_1..uovki_m,
/// hd, phi, selected.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj);

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const Mat& m);
nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const ShapeSolution& s, const Vec& x, const Vec& b);
nlohmann::json to_json(const CheckResult& c);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace kinshape
