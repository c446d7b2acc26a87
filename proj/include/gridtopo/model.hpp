#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gridtopo/augment.hpp"
#include "gridtopo/network.hpp"

namespace gridtopo {

enum class ProblemKind { Opf = 0, Ots, Bs, OtsBs };
enum class Formulation { ExactBigM = 0, Soc, Lpac };
enum class Exclusivity { Equal = 0, AtMostOne };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Opf;
  SwitchScope scope = SwitchScope::None;  // which elements get on/off binaries
  Formulation formulation = Formulation::ExactBigM;
  Exclusivity exclusivity = Exclusivity::Equal;
  double big_m_theta = 6.283185307179586;  // angle big-M
  double big_m_vm = 1.0;                   // magnitude (and lifted W, phi) big-M
  double big_m_vdc = 1.0;
  int cos_segments = 100;    // piecewise cosine segments, knots include 0
  int thermal_facets = 16;  // polygon size replacing quadratic ratings
  bool zil_in_pairs = false;
};

enum class VarKind { Continuous = 0, Binary };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lb = 0.0;
  double ub = 0.0;
  double x0 = 0.0;
};

enum class ConFamily {
  AcBalance = 0,
  DcBalance,
  AcFlow,
  DcFlow,
  ConverterLoss,
  ConverterCoupling,
  SwitchVoltage,
  SwitchFlowBound,
  Exclusivity,
  Thermal,
  AngleDiff,
  Reference,
  Definition  // auxiliary identities (epigraphs, on/off helpers)
};

enum class ConShape { Linear = 0, Soc, NonlinearSmooth };

struct LinTerm {
  double c = 0.0;
  int v = -1;
};

// Smooth nonlinear terms. Each one may carry an extra on/off factor z.
//   Quad     c * x * y                      (x == y gives squares)
//   TrigCos  c * x * y * cos(u - v - phi)
//   TrigSin  c * x * y * sin(u - v - phi)
//   SqSq     c * x^2 * y^2
enum class TermKind { Quad = 0, TrigCos, TrigSin, SqSq };

struct NlTerm {
  TermKind kind = TermKind::Quad;
  double c = 0.0;
  int x = -1;
  int y = -1;
  int u = -1;
  int v = -1;
  double phi = 0.0;
  int z = -1;
};

struct Constraint {
  std::string name;
  ConFamily family = ConFamily::Definition;
  ConShape shape = ConShape::Linear;
  double lb = 0.0;
  double ub = 0.0;
  std::vector<LinTerm> lin;
  std::vector<NlTerm> nl;
};

struct AffExpr {
  std::vector<LinTerm> lin;
  double c = 0.0;
};

// Rotated second order cone: x * y >= sum_i u_i^2, x >= 0, y >= 0.
struct Cone {
  std::string name;
  ConFamily family = ConFamily::Thermal;
  AffExpr x;
  AffExpr y;
  std::vector<AffExpr> u;
};

// Variable handles per network element, -1 where a formulation does not
// carry that quantity.
struct VarIndex {
  std::vector<int> vm, va, phi, w;           // per AC bus
  std::vector<int> udc, wdc, phid;           // per DC bus
  std::vector<int> pf, qf, pt, qt;           // per AC branch
  std::vector<int> cs;                       // LPAC cosine per AC branch
  std::vector<int> pdc_f, pdc_t;             // per DC branch
  std::vector<int> pc_ac, qc_ac, pc_dc;      // per converter
  std::vector<int> ic, ic_sq, idc, q_filter; // per converter
  std::vector<int> pg, qg;                   // per generator
  std::vector<int> psw, qsw;                 // per switch
  std::vector<int> z_acbr, z_dcbr, z_conv, z_sw;  // binaries (or fixed stand-ins)
};

struct MathModel {
  ProblemSpec spec;
  std::vector<Variable> vars;
  std::vector<Constraint> cons;
  std::vector<Cone> cones;
  std::vector<LinTerm> objective;
  double obj_const = 0.0;
  VarIndex idx;
  std::vector<int> binaries;                      // free binaries only
  std::vector<std::pair<int, int>> excl_pairs;    // element switch pair binaries
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Entry point: dispatches on spec.formulation.
MathModel build_model(const Network& net, const ProblemSpec& spec);

// The exact formulation: trigonometric AC flows, quadratic DC flows, smooth
// converter coupling, big-M switch rows.
MathModel build_exact(const Network& net, const ProblemSpec& spec);

// Term-wise lifting of an exact model into the conic space: squared
// magnitudes become W, trigonometric products become cross terms, converter
// current squares become their own variables, and each product family gains
// its rotated cone.
MathModel soc_lift(const MathModel& exact, const Network& net);

// Linear cold-start approximation: voltages 1 + phi, piecewise linear
// cosine, polygonal ratings, DC flows linearized at nominal voltage.
MathModel lpac_build(const Network& net, const ProblemSpec& spec);

std::string model_to_json(const MathModel& m);

// Pure evaluators, shared by tests and the feasibility audit.
struct BranchFlows {
  double p_fr = 0.0, q_fr = 0.0, p_to = 0.0, q_to = 0.0;
};
BranchFlows ac_flow_exact(const AcBranch& br, double vm_f, double vm_t, double va_f, double va_t);

// Returns (p_from_to, p_to_from) for one DC branch.
std::pair<double, double> dc_flow(const DcBranch& br, double u_f, double u_t);

struct ConverterState {
  double p_ac = 0.0, q_ac = 0.0, p_dc = 0.0;
  double i_ac = 0.0, i_dc = 0.0;
  double u_term = 1.0, u_dc = 1.0;
  double z = 1.0;
};
struct ConverterResiduals {
  double loss_eq = 0.0;     // P_ac + P_dc - (z a + b I + c I^2)
  double ac_coupling = 0.0; // P^2 + Q^2 - U^2 I^2
  double dc_product = 0.0;  // P_dc - z U_dc I_dc
  double current_bound = 0.0;
  double power_bound = 0.0;
};
ConverterResiduals converter_coupling(const Converter& cv, const ConverterState& st);

double objective_eval(const Network& net, const std::vector<double>& pg);

// Constraint evaluation at a point (nonlinear terms included).
double eval_constraint(const Constraint& con, const std::vector<double>& x);
double eval_affine(const AffExpr& e, const std::vector<double>& x);

// Tangent knots for the piecewise linear cosine over [lo, hi] with the
// given segment count; knots are uniform and include 0 when lo < 0 < hi.
std::vector<double> cosine_knots(double lo, double hi, int segments);

const char* family_name(ConFamily f);

}  // namespace gridtopo
