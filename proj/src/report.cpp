#include "daeh/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace daeh::report {

namespace {

void write_string(std::string& out, const std::string& s) {
  // reuse the library's escaping
  out += Json(s).dump();
}

void write(std::string& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        write_string(out, it.key());
        out += ": ";
        write(out, it.value(), indent, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // short numeric arrays stay on one line
      const bool flat = j.size() <= 8 && std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_number(); });
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          write(out, j[i], indent, depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write(out, j[i], indent, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.12e", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump(const Json& j, int indent) {
  std::string out;
  write(out, j, indent, 0);
  out += "\n";
  return out;
}

Json vec(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json mat(const Matrix& m) {
  Json a = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i)));
  return a;
}

Json box(const Box& b) {
  Json a = Json::array();
  for (const auto& iv : b.bounds) a.push_back(Json::array({iv.lo, iv.hi}));
  return a;
}

Json point(const PointKS& z) { return Json{{"x", vec(z.p)}, {"y", vec(z.q)}}; }

Json complex_list(const std::vector<linalg::Complex>& v) {
  Json a = Json::array();
  for (const auto& c : v) a.push_back(Json{{"re", c.real()}, {"im", c.imag()}});
  return a;
}

Json zero(const degree::ZeroRecord& z) {
  Json j{{"z", point(z.z)}, {"residual", z.residual}, {"det", z.det_jac}, {"nondegenerate", z.nondegenerate}};
  j["index"] = z.index ? Json(*z.index) : Json("unknown");
  j["index_method"] = z.index_method;
  return j;
}

Json degree_report(const degree::DegreeReport& r) {
  Json zs = Json::array();
  for (const auto& z : r.zeros) zs.push_back(zero(z));
  Json j{{"box", box(r.box)}, {"zeros", zs}};
  j["total"] = r.total_degree ? Json(*r.total_degree) : Json("unknown");
  j["boundary_min"] = r.boundary_min_norm;
  j["grid_per_dim"] = r.grid_per_dim;
  j["stable_under_refinement"] = r.stable;
  j["warnings"] = r.warnings;
  return j;
}

Json psi_report(const degree::PsiDegreeReport& r) {
  Json zs = Json::array();
  for (const auto& z : r.zeros) {
    zs.push_back(Json{{"z", point(z.z)}, {"det", z.det}, {"index", z.index}, {"method", z.method}});
  }
  return Json{{"zeros", zs}, {"total", r.total}};
}

Json resonance_report(const resonance::ResonanceReport& r) {
  return Json{{"zero", point(r.zero)},
              {"phi", mat(r.phi)},
              {"eigenvalues", complex_list(r.eigenvalues)},
              {"resonant", r.resonant},
              {"marginal", r.marginal},
              {"matched_n", r.matched_n},
              {"min_distance", r.min_distance},
              {"det_jac", r.det_jac},
              {"det_d2g", r.det_d2g},
              {"det_phi", r.det_phi},
              {"det_residual", r.det_identity_residual}};
}

Json prop41(const resonance::Prop41Report& r) {
  return Json{{"monodromy", mat(r.monodromy)},
              {"exp_T_phi", mat(r.exp_t_phi)},
              {"residual", r.residual},
              {"monodromy_resonant", r.monodromy_resonant},
              {"exp_resonant", r.exp_resonant},
              {"verdicts_agree", r.verdicts_agree}};
}

Json monodromy(const flow::MonodromyReport& r) {
  Json j{{"x0", vec(r.x0)}, {"y0", vec(r.y0)}, {"P_T", vec(r.p_t)}, {"y_T", vec(r.y_t)}};
  j["M_matrix"] = mat(r.monodromy);
  j["max_g_residual"] = r.max_g_residual;
  return j;
}

Json trajectory_summary(const flow::Trajectory& t) {
  Json j{{"lambda", t.lambda}, {"samples", t.samples.size()}, {"steps", t.steps}, {"max_g_residual", t.max_g_residual}};
  if (!t.samples.empty()) {
    j["t_start"] = t.samples.front().t;
    j["z_start"] = vec(t.samples.front().z);
    j["t_end"] = t.samples.back().t;
    j["z_end"] = vec(t.samples.back().z);
  }
  return j;
}

Json orbit(const continuation::PeriodicOrbit& o) {
  Json j{{"lambda", o.lambda},
         {"x0", vec(o.x0)},
         {"y0", vec(o.y0)},
         {"shoot_residual", o.shoot_residual},
         {"floquet", mat(o.floquet)},
         {"uncertainty", o.uncertainty},
         {"verification", o.verification}};
  if (!o.orbit.samples.empty()) j["max_g_residual"] = o.orbit.max_g_residual;
  return j;
}

Json branch(const continuation::Branch& b) {
  Json pts = Json::array();
  for (const auto& p : b.points) {
    pts.push_back(Json{{"lambda", p.lambda}, {"x0", vec(p.x0)}, {"shoot_residual", p.shoot_residual}});
  }
  Json j{{"origin", zero(b.origin)}, {"termination", continuation::to_string(b.termination)}};
  j["conclusive"] = continuation::conclusive(b.termination);
  if (b.returned_to) j["returned_to_zero"] = *b.returned_to;
  if (!b.detail.empty()) j["detail"] = b.detail;
  j["steps"] = b.points.size();
  if (!b.points.empty()) j["lambda_end"] = b.points.back().lambda;
  j["points"] = pts;
  return j;
}

Json multiplicity(const continuation::MultiplicityReport& r) {
  Json os = Json::array();
  for (const auto& o : r.orbits) os.push_back(orbit(o));
  return Json{{"lambda", r.lambda},
              {"backoffs", r.backoffs},
              {"degree_total", r.degree_total},
              {"index_sum_listed", r.index_sum},
              {"required", r.required},
              {"periodic_orbits_found", r.orbits.size()},
              {"orbits", os},
              {"pairwise_distance", mat(r.distances)},
              {"unverified_candidates", r.unverified_candidates},
              {"warnings", r.warnings}};
}

Json svd_reduction(const svd::SvdReduction& r) {
  return Json{{"rank", r.rank},
              {"singular_values", vec(r.factors.sigma)},
              {"P", mat(r.factors.p)},
              {"Q", mat(r.factors.q)},
              {"A11", mat(r.a11)},
              {"A12", mat(r.a12)},
              {"A21", mat(r.a21)},
              {"A22", mat(r.a22)},
              {"kernel_residual", r.kernel_residual},
              {"c_offblock", r.c_offblock},
              {"k", r.reduced.k()},
              {"s", r.reduced.s()},
              {"note", "f is scaled by the inverse of E_s; zero set and |index| are unchanged"}};
}

Json error(const Error& e) {
  return Json{{"kind", std::string(to_string(e.kind()))},
              {"class", is_precondition(e.kind()) ? "precondition" : "numerical"},
              {"message", e.what()}};
}

}  // namespace daeh::report
