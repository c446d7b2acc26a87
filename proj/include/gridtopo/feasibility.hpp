#pragma once

#include <string>
#include <vector>

#include "gridtopo/model.hpp"
#include "gridtopo/network.hpp"

namespace gridtopo {

// Candidate topology: service state per element, closed state per switch.
// Converter expansion branches follow their converter and may be left as
// stored; apply_topology overrides them.
struct Topology {
  std::vector<char> acbr;
  std::vector<char> dcbr;
  std::vector<char> conv;
  std::vector<char> sw;
};

Topology topology_all_on(const Network& net);

// Reads the element states out of a solved model: elements with a binary
// take its rounded value, everything else keeps its stored state.
Topology topology_from_solution(const Network& net, const MathModel& m,
                                const std::vector<double>& binary_values);

// Copy of net with service and switch states replaced.
Network apply_topology(const Network& net, const Topology& topo);

// Full physical assignment in network element order; flows are always
// re-derived from the voltages, never stored.
struct GridState {
  std::vector<double> vm, va;                              // per AC bus
  std::vector<double> udc;                                 // per DC bus
  std::vector<double> pg, qg;                              // per generator
  std::vector<double> pc_ac, qc_ac, pc_dc, ic, idc, qflt;  // per converter
  std::vector<double> psw, qsw;                            // per switch
  Topology topo;
};

struct ResidualMaxima {
  double balance = 0.0;
  double flow = 0.0;       // ratings, angle windows, de-energized leakage
  double converter = 0.0;  // coupling equations and converter caps
  double bounds = 0.0;     // voltage and generator box bounds
  double switch_eq = 0.0;  // closed-switch equalities, open-switch zero flow
  double worst() const;
};

// Re-evaluates every constraint family from the voltages with the exact
// element evaluators; shares no state with any solver.
ResidualMaxima residual_audit(const Network& net, const GridState& st);

struct PfOptions {
  double tol = 1e-8;  // max power mismatch, per unit
  int max_iter = 60;
  int max_halvings = 6;  // step control on mismatch growth
};

struct PfResult {
  bool converged = false;
  int iters = 0;
  double max_mismatch = 0.0;
  std::vector<double> vm, va, udc;  // per original bus; de-energized buses 0
  // Converter working values at the solved state (power into converter);
  // slack converters carry their absorbed values.
  std::vector<double> conv_pac, conv_qac, conv_pdc;
  std::string msg;
};

// Generator and converter injections for the power flow. Where a value is
// absent the element's stored setpoint applies. Slack elements (one per
// energized island) absorb the residual instead of holding their setpoint.
struct Dispatch {
  std::vector<double> pg, qg;        // per generator
  std::vector<double> pc_ac, qc_ac;  // per converter, power into converter
  std::vector<double> vm_slack;      // per AC bus, magnitude held at slacks
  std::vector<double> udc_slack;     // per DC bus, held at DC slack buses
};

Dispatch dispatch_from_case(const Network& net);

// Sequential AC/DC Newton power flow on the merged fixed topology: closed
// switches join buses, open elements drop, converter coupling updates
// between passes. Flat start unless `start` is given.
// Power flow from the stored generator and converter setpoints, packed into
// model-variable order for use as an NLP starting point. Converters start at
// their working points, away from the degenerate origin of the coupling
// surface where the Jacobian vanishes. Empty when the flow does not converge.
std::vector<double> setpoint_start(const Network& net, const MathModel& m);

// Same packing, but the injections come from a fresh LPAC optimum instead of
// the stored setpoints. The linear model is solved globally, so its dispatch
// pattern points the smooth solver at the right basin when the setpoints do
// not. Empty when either the LPAC solve or the flow fails.
std::vector<double> lpac_start(const Network& net, const MathModel& m);

PfResult newton_acdc_power_flow(const Network& net, const Dispatch& dispatch,
                                const PfOptions& opt = {},
                                const GridState* start = nullptr);

struct FeasibilityReport {
  bool topology_ok = false;  // no load left without a source
  bool opf_converged = false;
  bool pf_converged = false;
  bool ac_feasible = false;
  bool lower_than_baseline = false;
  double objective = 0.0;  // recomputed, fixed-topology exact optimum
  double baseline = 0.0;
  double benefit_pct = 0.0;  // (baseline - objective)/baseline * 100
  ResidualMaxima residuals;
  double time_s = 0.0;
  std::string msg;
  GridState state;
};

// Fixes the topology, solves the exact fixed-topology problem (continuous
// interior point for the recomputed objective, then an independent Newton
// power flow at that dispatch), and audits the result: AC-feasible iff
// every family residual and bound holds within tol.
FeasibilityReport fix_and_check(const Network& net, const Topology& topo,
                                double baseline, double tol = 1e-6);

std::string report_to_json(const FeasibilityReport& rep);

}  // namespace gridtopo
