#include "rejuv/report.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace rejuv {

using nlohmann::json;

namespace {

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error("report: malformed matrix");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw Error("report: ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

std::string report_to_json(const DesignReport& r) {
  const Design& d = r.design;
  json root;
  root["model"] = {{"a", matrix_to_json(d.a)}, {"b", matrix_to_json(d.b)}};
  root["controller"] = {
      {"k_safety", matrix_to_json(d.safety.k)},
      {"k_tracking", matrix_to_json(d.tracking.k)},
      {"u_ff", vec_to_json(d.safety.u_ff.to_vec())},
  };
  root["sets"] = {
      {"p", matrix_to_json(d.p)},
      {"log_det_p_inv", d.log_det_p_inv},
      {"eps_sc", d.eps_sc},
      {"eps_tc", d.eps_tc},
  };
  json normals = json::array();
  json offsets = json::array();
  for (std::size_t j = 0; j < d.constraint.normals.size(); ++j) {
    normals.push_back(vec_to_json(d.constraint.normals[j]));
    offsets.push_back(d.constraint.offsets[j]);
  }
  root["constraint"] = {{"center", vec_to_json(d.constraint.center)},
                        {"normals", normals},
                        {"offsets", offsets}};
  root["input_set"] = {{"lo", vec_to_json(d.input_set.box.lo)},
                       {"hi", vec_to_json(d.input_set.box.hi)}};

  if (r.verify) {
    const TucReport& v = *r.verify;
    json grid = json::array();
    for (const TucGridEntry& g : v.grid) {
      grid.push_back({{"t", g.t}, {"max_v", g.max_v}});
    }
    root["verify"] = {
        {"t_uc", v.t_uc},
        {"pass", v.pass},
        {"margin", v.margin},
        {"tolerance", v.tolerance},
        {"worst_time", v.worst_time},
        {"worst_margin_slope", v.worst_margin_slope},
        {"grid", std::move(grid)},
        {"settle_measured", v.settle_measured},
        {"settle_ok", v.settle_ok},
        {"settle_time", v.settle_time},
    };
  }
  if (r.max_tuc) root["max_tuc"] = *r.max_tuc;
  return root.dump(2) + "\n";
}

DesignReport report_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("report is not valid JSON: ") + e.what());
  }
  DesignReport r;
  Design& d = r.design;
  try {
    d.a = matrix_from_json(root.at("model").at("a"));
    d.b = matrix_from_json(root.at("model").at("b"));
    const json& ctl = root.at("controller");
    const Vec u_ff = vec_from_json(ctl.at("u_ff"));
    d.safety = {matrix_from_json(ctl.at("k_safety")),
                Wrench::from_vec(u_ff), Mat()};
    d.tracking = {matrix_from_json(ctl.at("k_tracking")),
                  Wrench::from_vec(u_ff), Mat()};
    const json& sets = root.at("sets");
    d.p = matrix_from_json(sets.at("p"));
    d.log_det_p_inv = sets.at("log_det_p_inv").get<double>();
    d.eps_sc = sets.at("eps_sc").get<double>();
    d.eps_tc = sets.at("eps_tc").get<double>();
    d.safety.p = d.p;
    d.tracking.p = d.p;
    const json& con = root.at("constraint");
    d.constraint.center = vec_from_json(con.at("center"));
    for (const json& n : con.at("normals")) {
      d.constraint.normals.push_back(vec_from_json(n));
    }
    for (const json& o : con.at("offsets")) {
      d.constraint.offsets.push_back(o.get<double>());
    }
    const json& u = root.at("input_set");
    d.input_set = InputSet(Box(vec_from_json(u.at("lo")),
                               vec_from_json(u.at("hi"))));
    if (root.contains("verify")) {
      const json& v = root["verify"];
      TucReport tuc;
      tuc.t_uc = v.at("t_uc").get<double>();
      tuc.pass = v.at("pass").get<bool>();
      tuc.margin = v.at("margin").get<double>();
      tuc.tolerance = v.at("tolerance").get<double>();
      tuc.worst_time = v.at("worst_time").get<double>();
      tuc.worst_margin_slope = v.at("worst_margin_slope").get<double>();
      for (const json& g : v.at("grid")) {
        tuc.grid.push_back({g.at("t").get<double>(), g.at("max_v").get<double>()});
      }
      tuc.settle_measured = v.at("settle_measured").get<bool>();
      tuc.settle_ok = v.at("settle_ok").get<bool>();
      tuc.settle_time = v.at("settle_time").get<double>();
      r.verify = std::move(tuc);
    }
    if (root.contains("max_tuc")) r.max_tuc = root["max_tuc"].get<double>();
  } catch (const json::exception& e) {
    throw Error(std::string("report: missing or malformed field: ") + e.what());
  }
  return r;
}

void write_report(const DesignReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write report to '" + path + "'");
  out << report_to_json(r);
}

DesignReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

}  // namespace rejuv
