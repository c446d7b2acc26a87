#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridtopo {

// Raw, unvalidated case data. Values carry the units of the source table
// (MW, MVAr, per-unit impedances on the system base, degrees). Validation
// and per-unit conversion happen in network_model.

struct ParseError : std::runtime_error {
  ParseError(const std::string& file, int line, int col, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(col) +
                           ": " + what),
        line(line),
        col(col) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what), line(0), col(0) {}
  int line;
  int col;
};

struct RawAcBus {
  int id = 0;
  int type = 1;  // 1 PQ, 2 PV, 3 reference, 4 isolated
  double pd_mw = 0.0;
  double qd_mvar = 0.0;
  double gs_mw = 0.0;   // shunt conductance, MW at U = 1
  double bs_mvar = 0.0; // shunt susceptance, MVAr at U = 1
  double vm = 1.0;
  double va_deg = 0.0;
  double base_kv = 0.0;
  double vmax = 1.1;
  double vmin = 0.9;
};

struct RawGen {
  int bus = 0;
  double pg_mw = 0.0;
  double qg_mvar = 0.0;
  double qmax_mvar = 0.0;
  double qmin_mvar = 0.0;
  double vg = 1.0;
  double mbase = 0.0;
  int status = 1;
  double pmax_mw = 0.0;
  double pmin_mw = 0.0;
};

struct RawGenCost {
  int model = 2;  // 2 = polynomial
  double startup = 0.0;
  double shutdown = 0.0;
  std::vector<double> coeff;  // highest order first, MATPOWER convention
};

struct RawAcBranch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;  // total line charging susceptance
  double rate_a_mva = 0.0;
  double rate_b_mva = 0.0;
  double rate_c_mva = 0.0;
  double tap = 0.0;       // 0 means nominal (1.0)
  double shift_deg = 0.0;
  int status = 1;
  double angmin_deg = -60.0;
  double angmax_deg = 60.0;
};

struct RawDcBus {
  int id = 0;
  int grid = 1;
  double pd_mw = 0.0;  // DC load
  double vdc = 1.0;
  double base_kv = 0.0;
  double vdcmax = 1.1;
  double vdcmin = 0.9;
};

struct RawDcBranch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double rate_a_mw = 0.0;
  double rate_b_mw = 0.0;
  double rate_c_mw = 0.0;
  int status = 1;
  int poles = 0;  // 0 means use the case-wide default
};

struct RawConverter {
  int dc_bus = 0;
  int ac_bus = 0;
  int grid = 1;
  int type_dc = 1;
  int type_ac = 1;
  double p_g_mw = 0.0;
  double q_g_mvar = 0.0;
  int islcc = 0;
  double vtar = 1.0;
  double rtf = 0.0;
  double xtf = 0.0;
  int transformer = 0;
  double tm = 1.0;
  double bf = 0.0;
  int filter = 0;
  double rc = 0.0;
  double xc = 0.0;
  int reactor = 0;
  double base_kv_ac = 0.0;
  double vmmax = 1.1;
  double vmmin = 0.9;
  double imax = 0.0;  // per-unit converter current limit
  int status = 1;
  double loss_a_mw = 0.0;
  double loss_b = 0.0;      // MW per unit current
  double loss_c_rec = 0.0;  // MW per unit current squared
  double loss_c_inv = 0.0;
  double droop = 0.0;
  double pdcset_mw = 0.0;
  double vdcset = 1.0;
  double dvdcset = 0.0;
  // NaN means absent; validation derives bounds from imax and vmmax
  double pacmax_mw = std::numeric_limits<double>::quiet_NaN();
  double pacmin_mw = std::numeric_limits<double>::quiet_NaN();
  double qacmax_mvar = std::numeric_limits<double>::quiet_NaN();
  double qacmin_mvar = std::numeric_limits<double>::quiet_NaN();
};

// What a switch connects to its busbar. ZILs connect two busbar halves and
// reference no element.
enum class SwitchTarget { Zil = 0, AcBranch, DcBranch, Converter, Generator, Load };

struct RawSwitch {
  int id = 0;
  char side = 'a';  // 'a' AC, 'd' DC
  int from_bus = 0;
  int to_bus = 0;
  SwitchTarget target = SwitchTarget::Zil;
  int element_id = -1;   // index into the side's element table, -1 for ZIL
  int element_end = 0;   // 0 = from end, 1 = to end (branch targets only)
  double rate_mva = 0.0; // 0 means unbounded
  bool closed = true;
  bool switchable = true;
};

// Loads are a table of their own so busbar splitting can move them between
// busbar halves. The MATPOWER reader synthesizes one row per bus with nonzero
// demand; the native schema lists them explicitly.
struct RawLoad {
  int id = 0;
  char side = 'a';
  int bus = 0;
  double pd_mw = 0.0;
  double qd_mvar = 0.0;
};

// Optional study annotations carried inside a case document.
struct RawSplitRequest {
  char side = 'a';
  int bus = 0;
};

struct BusbarSplitRecord {
  char side = 'a';
  int original_bus = 0;
  int aux_bus = 0;
  int zil_switch = 0;
  std::vector<int> element_switches;
};

struct RawCase {
  std::string name;
  double base_mva = 100.0;
  int dc_poles = 2;
  std::vector<RawAcBus> ac_buses;
  std::vector<RawGen> gens;
  std::vector<RawGenCost> gencosts;
  std::vector<RawAcBranch> ac_branches;
  std::vector<RawDcBus> dc_buses;
  std::vector<RawDcBranch> dc_branches;
  std::vector<RawConverter> converters;
  std::vector<RawSwitch> switches;  // native schema only
  std::vector<RawLoad> loads;
  std::vector<RawSplitRequest> split_plan;    // optional "split_plan" key
  std::vector<BusbarSplitRecord> bs_records;  // present when the case was augmented
};

}  // namespace gridtopo
