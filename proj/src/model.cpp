#include "gridtopo/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace gridtopo {

MathModel build_model(const Network& net, const ProblemSpec& spec) {
  switch (spec.formulation) {
    case Formulation::ExactBigM:
      return build_exact(net, spec);
    case Formulation::Soc: {
      ProblemSpec es = spec;
      es.formulation = Formulation::ExactBigM;
      return soc_lift(build_exact(net, es), net);
    }
    case Formulation::Lpac:
      return lpac_build(net, spec);
  }
  throw ModelError("unknown formulation");
}

BranchFlows ac_flow_exact(const AcBranch& br, double vm_f, double vm_t, double va_f,
                          double va_t) {
  const double g = br.r / (br.r * br.r + br.x * br.x);
  const double b = -br.x / (br.r * br.r + br.x * br.x);
  const double t = br.tap;
  const double d_f = va_f - va_t - br.shift;
  const double d_t = va_t - va_f + br.shift;
  const double uu = vm_f * vm_t / t;
  BranchFlows out;
  out.p_fr = g / (t * t) * vm_f * vm_f - uu * (g * std::cos(d_f) + b * std::sin(d_f));
  out.q_fr = -(b + br.b_fr) / (t * t) * vm_f * vm_f - uu * (g * std::sin(d_f) - b * std::cos(d_f));
  out.p_to = g * vm_t * vm_t - uu * (g * std::cos(d_t) + b * std::sin(d_t));
  out.q_to = -(b + br.b_to) * vm_t * vm_t - uu * (g * std::sin(d_t) - b * std::cos(d_t));
  return out;
}

std::pair<double, double> dc_flow(const DcBranch& br, double u_f, double u_t) {
  const double g = 1.0 / br.r;
  const double p = static_cast<double>(br.poles);
  return {p * g * u_f * (u_f - u_t), p * g * u_t * (u_t - u_f)};
}

ConverterResiduals converter_coupling(const Converter& cv, const ConverterState& st) {
  ConverterResiduals r;
  r.loss_eq = st.p_ac + st.p_dc -
              (st.z * cv.loss_a + cv.loss_b * st.i_ac + cv.loss_c * st.i_ac * st.i_ac);
  r.ac_coupling = st.p_ac * st.p_ac + st.q_ac * st.q_ac -
                  st.u_term * st.u_term * st.i_ac * st.i_ac;
  r.dc_product = st.p_dc - st.z * st.u_dc * st.i_dc;
  r.current_bound = std::max(0.0, st.i_ac - st.z * cv.i_max);
  const double s = std::hypot(st.p_ac, st.q_ac);
  r.power_bound = std::max(0.0, s - st.z * cv.s_max);
  return r;
}

double objective_eval(const Network& net, const std::vector<double>& pg) {
  double total = 0.0;
  for (size_t g = 0; g < net.gens.size(); ++g) {
    const Generator& gen = net.gens[g];
    if (!gen.in_service) continue;
    const double p = g < pg.size() ? pg[g] : 0.0;
    total += gen.c2 * p * p + gen.c1 * p + gen.c0;
  }
  return total;
}

double eval_affine(const AffExpr& e, const std::vector<double>& x) {
  double v = e.c;
  for (const LinTerm& t : e.lin) v += t.c * x[static_cast<size_t>(t.v)];
  return v;
}

double eval_constraint(const Constraint& con, const std::vector<double>& x) {
  double v = 0.0;
  for (const LinTerm& t : con.lin) v += t.c * x[static_cast<size_t>(t.v)];
  for (const NlTerm& t : con.nl) {
    double term = t.c;
    switch (t.kind) {
      case TermKind::Quad:
        term *= x[static_cast<size_t>(t.x)] * x[static_cast<size_t>(t.y)];
        break;
      case TermKind::TrigCos:
        term *= x[static_cast<size_t>(t.x)] * x[static_cast<size_t>(t.y)] *
                std::cos(x[static_cast<size_t>(t.u)] - x[static_cast<size_t>(t.v)] - t.phi);
        break;
      case TermKind::TrigSin:
        term *= x[static_cast<size_t>(t.x)] * x[static_cast<size_t>(t.y)] *
                std::sin(x[static_cast<size_t>(t.u)] - x[static_cast<size_t>(t.v)] - t.phi);
        break;
      case TermKind::SqSq: {
        const double a = x[static_cast<size_t>(t.x)];
        const double b = x[static_cast<size_t>(t.y)];
        term *= a * a * b * b;
        break;
      }
    }
    if (t.z >= 0) term *= x[static_cast<size_t>(t.z)];
    v += term;
  }
  return v;
}

std::vector<double> cosine_knots(double lo, double hi, int segments) {
  if (segments < 1) segments = 1;
  std::vector<double> knots;
  knots.reserve(static_cast<size_t>(segments) + 2);
  const double step = (hi - lo) / segments;
  for (int k = 0; k <= segments; ++k) knots.push_back(lo + step * k);
  // the flat tangent at 0 carries the cos <= 1 face; make sure it is present
  bool has_zero = false;
  for (double t : knots)
    if (std::abs(t) < 1e-12) has_zero = true;
  if (!has_zero && lo < 0.0 && hi > 0.0) {
    knots.push_back(0.0);
    std::sort(knots.begin(), knots.end());
  }
  return knots;
}

const char* family_name(ConFamily f) {
  switch (f) {
    case ConFamily::AcBalance: return "ac-balance";
    case ConFamily::DcBalance: return "dc-balance";
    case ConFamily::AcFlow: return "ac-flow";
    case ConFamily::DcFlow: return "dc-flow";
    case ConFamily::ConverterLoss: return "converter-loss";
    case ConFamily::ConverterCoupling: return "converter-coupling";
    case ConFamily::SwitchVoltage: return "switch-voltage";
    case ConFamily::SwitchFlowBound: return "switch-flow-bound";
    case ConFamily::Exclusivity: return "exclusivity";
    case ConFamily::Thermal: return "thermal";
    case ConFamily::AngleDiff: return "angle-diff";
    case ConFamily::Reference: return "reference";
    case ConFamily::Definition: return "definition";
  }
  return "?";
}

namespace {

const char* term_name(TermKind k) {
  switch (k) {
    case TermKind::Quad: return "quad";
    case TermKind::TrigCos: return "cos";
    case TermKind::TrigSin: return "sin";
    case TermKind::SqSq: return "sqsq";
  }
  return "?";
}

nlohmann::ordered_json affine_json(const AffExpr& e, const std::vector<Variable>& vars) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const LinTerm& t : e.lin)
    j.push_back({{"c", t.c}, {"var", vars[static_cast<size_t>(t.v)].name}});
  if (e.c != 0.0) j.push_back({{"const", e.c}});
  return j;
}

}  // namespace

std::string model_to_json(const MathModel& m) {
  nlohmann::ordered_json doc;
  doc["formulation"] = m.spec.formulation == Formulation::ExactBigM ? "exact"
                       : m.spec.formulation == Formulation::Soc     ? "soc"
                                                                    : "lpac";
  doc["num_vars"] = m.vars.size();
  doc["num_cons"] = m.cons.size();
  doc["num_cones"] = m.cones.size();
  doc["num_binaries"] = m.binaries.size();
  auto jvars = nlohmann::ordered_json::array();
  for (const Variable& v : m.vars) {
    nlohmann::ordered_json jv;
    jv["name"] = v.name;
    jv["kind"] = v.kind == VarKind::Binary ? "binary" : "continuous";
    jv["lb"] = v.lb;
    jv["ub"] = v.ub;
    jvars.push_back(std::move(jv));
  }
  doc["vars"] = std::move(jvars);
  auto jcons = nlohmann::ordered_json::array();
  for (const Constraint& c : m.cons) {
    nlohmann::ordered_json jc;
    jc["name"] = c.name;
    jc["family"] = family_name(c.family);
    jc["lb"] = c.lb;
    jc["ub"] = c.ub;
    auto jlin = nlohmann::ordered_json::array();
    for (const LinTerm& t : c.lin)
      jlin.push_back({{"c", t.c}, {"var", m.vars[static_cast<size_t>(t.v)].name}});
    jc["lin"] = std::move(jlin);
    if (!c.nl.empty()) {
      auto jnl = nlohmann::ordered_json::array();
      for (const NlTerm& t : c.nl) {
        nlohmann::ordered_json jt;
        jt["kind"] = term_name(t.kind);
        jt["c"] = t.c;
        if (t.x >= 0) jt["x"] = m.vars[static_cast<size_t>(t.x)].name;
        if (t.y >= 0) jt["y"] = m.vars[static_cast<size_t>(t.y)].name;
        if (t.u >= 0) jt["u"] = m.vars[static_cast<size_t>(t.u)].name;
        if (t.v >= 0) jt["v"] = m.vars[static_cast<size_t>(t.v)].name;
        if (t.phi != 0.0) jt["phi"] = t.phi;
        if (t.z >= 0) jt["z"] = m.vars[static_cast<size_t>(t.z)].name;
        jnl.push_back(std::move(jt));
      }
      jc["nl"] = std::move(jnl);
    }
    jcons.push_back(std::move(jc));
  }
  doc["cons"] = std::move(jcons);
  auto jcones = nlohmann::ordered_json::array();
  for (const Cone& cn : m.cones) {
    nlohmann::ordered_json jc;
    jc["name"] = cn.name;
    jc["family"] = family_name(cn.family);
    jc["x"] = affine_json(cn.x, m.vars);
    jc["y"] = affine_json(cn.y, m.vars);
    auto ju = nlohmann::ordered_json::array();
    for (const AffExpr& u : cn.u) ju.push_back(affine_json(u, m.vars));
    jc["u"] = std::move(ju);
    jcones.push_back(std::move(jc));
  }
  doc["cones"] = std::move(jcones);
  auto jobj = nlohmann::ordered_json::array();
  for (const LinTerm& t : m.objective)
    jobj.push_back({{"c", t.c}, {"var", m.vars[static_cast<size_t>(t.v)].name}});
  doc["objective"] = std::move(jobj);
  doc["objective_const"] = m.obj_const;
  return doc.dump(2) + "\n";
}

}  // namespace gridtopo
