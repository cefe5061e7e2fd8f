#include "kinshape/report.hpp"

#include <cstdio>
#include <fstream>

namespace kinshape {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.size() == 0) return;
  const Eigen::Index n = traj.states.front().q.size();
  const Eigen::Index m = traj.controls.front().u.size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",q_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",p_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",uki_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",uovki_" << i;
  os << ",hd,phi,selected\n";

  std::string line;
  const auto put = [&line](double v) {
    line += ',';
    line += format_double(v);
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const State& s = traj.states[k];
    const ControlBreakdown& c = traj.controls[k];
    line = format_double(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) put(s.q[i]);
    for (Eigen::Index i = 0; i < n; ++i) put(s.p[i]);
    for (Eigen::Index i = 0; i < m; ++i) put(c.u[i]);
    for (Eigen::Index i = 0; i < m; ++i) put(c.u_ki[i]);
    for (Eigen::Index i = 0; i < m; ++i) put(c.u_ovki[i]);
    put(traj.hd[k]);
    put(c.phi);
    line += ',';
    line += to_string(c.selected);
    os << line << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(out, traj);
}

json to_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i))));
  return rows;
}

json to_json(const Metrics& m) {
  json j = {{"peak_u_inf", m.peak_u_inf},
            {"peak_u_per_channel", to_json(m.peak_u_per_channel)},
            {"peak_uovki_inf", m.peak_uovki_inf},
            {"final_q_error", to_json(m.final_q_error)},
            {"settled", m.settled}};
  j["reduction_vs"] = m.reduction_vs ? json(*m.reduction_vs) : json(nullptr);
  return j;
}

json to_json(const ShapeSolution& s, const Vec& x, const Vec& b) {
  return {{"A_s", to_json(s.a_sym)},
          {"A_w", to_json(s.a_skew)},
          {"a_s", s.a_s},
          {"xi", to_json(s.xi)},
          {"v", to_json(s.v)},
          {"phi", s.phi},
          {"residual_inf", (s.matrix() * x - b).lpNorm<Eigen::Infinity>()}};
}

json to_json(const CheckResult& c) {
  json j = {{"name", c.name},
            {"kind", c.kind == CheckKind::AtMost ? "max" : "min"},
            {"tolerance", c.tolerance},
            {"evaluated", c.evaluated},
            {"passed", c.passed()}};
  if (!c.skipped.empty()) {
    j["status"] = "skipped: " + c.skipped;
  } else {
    j["status"] = c.passed() ? "ok" : "failed";
    j["worst"] = c.worst;
    j["worst_sample"] = c.worst_index;
  }
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace kinshape
