#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gridtopo/raw_case.hpp"

namespace gridtopo {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Validated network. All quantities are per-unit on base_mva; angles in
// radians. Element cross references use 0-based indices into the vectors
// below, never external ids.

enum class BusRole {
  Busbar = 0,        // bus from the source case
  BusbarHalf,        // second half created by a busbar split
  ElementStub,       // per-element connection node created by a split
  ConverterInternal  // filter or terminal node from converter expansion
};

struct AcBus {
  int id = 0;
  BusRole role = BusRole::Busbar;
  double gs = 0.0;  // shunt conductance at U = 1
  double bs = 0.0;
  double vmax = 1.1;
  double vmin = 0.9;
  double base_kv = 0.0;
  bool reference = false;
  double vm0 = 1.0;
  double va0 = 0.0;
  int conv_owner = -1;  // converter index for ConverterInternal buses
  int mp_type = 1;      // source bus type, kept for round trips
};

struct DcBus {
  int id = 0;
  BusRole role = BusRole::Busbar;
  double vmax = 1.1;
  double vmin = 0.9;
  double base_kv = 0.0;
  double vdc0 = 1.0;
  int grid = 1;
};

struct AcBranch {
  int id = 0;
  int from = -1;
  int to = -1;
  double r = 0.0;
  double x = 0.0;
  double b_fr = 0.0;  // half charging at each end
  double b_to = 0.0;
  double tap = 1.0;    // magnitude, from side
  double shift = 0.0;  // radians
  double s_max = 0.0;  // 0 = unbounded
  double ang_min = -1.0471975511965976;
  double ang_max = 1.0471975511965976;
  bool in_service = true;
  int conv_owner = -1;  // expansion branches share the converter's binary
};

struct DcBranch {
  int id = 0;
  int from = -1;
  int to = -1;
  double r = 0.0;
  double p_max = 0.0;  // 0 = unbounded
  int poles = 2;
  bool in_service = true;
};

struct Converter {
  int id = 0;
  int grid_bus = -1;      // AC bus from the case
  int filter_bus = -1;    // internal, -1 when no transformer
  int terminal_bus = -1;  // where converter power and current are defined
  int dc_bus = -1;
  int tf_branch = -1;  // internal branch indices, -1 when absent
  int pr_branch = -1;
  double b_filter = 0.0;  // shunt at filter_bus, scaled by the on/off state
  double loss_a = 0.0;
  double loss_b = 0.0;
  double loss_c = 0.0;
  double i_max = 0.0;  // converter current magnitude bound
  double p_ac_max = 0.0;
  double p_ac_min = 0.0;
  double q_ac_max = 0.0;
  double q_ac_min = 0.0;
  double s_max = 0.0;
  double vmmax = 1.1;
  double vmmin = 0.9;
  bool in_service = true;
  // raw control data kept for round trips and power flow setpoints
  int type_dc = 1;
  int type_ac = 1;
  double p_set = 0.0;  // per-unit AC side setpoint injections
  double q_set = 0.0;
  double vtar = 1.0;
  double loss_c_inv = 0.0;
  double droop = 0.0, pdcset = 0.0, vdcset = 1.0, dvdcset = 0.0;
  double rtf = 0.0, xtf = 0.0, tm = 1.0, rc_pr = 0.0, xc_pr = 0.0;
  int has_tf = 0, has_filter = 0, has_pr = 0;
  int grid = 1;
  double base_kv_ac = 0.0;
};

struct Generator {
  int id = 0;
  int bus = -1;
  double p_max = 0.0;
  double p_min = 0.0;
  double q_max = 0.0;
  double q_min = 0.0;
  double c2 = 0.0;  // cost on per-unit power, $/h
  double c1 = 0.0;
  double c0 = 0.0;
  double vg = 1.0;
  bool in_service = true;
  double pg0 = 0.0;
  double qg0 = 0.0;
};

struct Load {
  int id = 0;
  char side = 'a';
  int bus = -1;  // index on its side
  double pd = 0.0;
  double qd = 0.0;
};

struct Switch {
  int id = 0;
  char side = 'a';
  int from_bus = -1;  // element stub, or first busbar half for a ZIL
  int to_bus = -1;    // busbar half it can connect to
  SwitchTarget target = SwitchTarget::Zil;
  int element = -1;  // index into the target's table
  int element_end = 0;
  double s_max = 0.0;
  bool closed = true;
  bool switchable = true;
};

struct Network {
  std::string name;
  double base_mva = 100.0;
  std::vector<AcBus> ac_buses;
  std::vector<DcBus> dc_buses;
  std::vector<AcBranch> ac_branches;
  std::vector<DcBranch> dc_branches;
  std::vector<Converter> converters;
  std::vector<Generator> gens;
  std::vector<Load> loads;
  std::vector<Switch> switches;
  std::vector<BusbarSplitRecord> bs_records;
  int dc_poles_default = 2;

  int ac_index(int id) const;  // -1 when unknown
  int dc_index(int id) const;
};

// Checks ids, endpoint references, bound ordering and reference buses, then
// converts to per-unit and expands converter transformer, filter and phase
// reactor into internal branches. Throws ValidationError.
Network validate(const RawCase& rc);

struct Islands {
  std::vector<int> ac_island_of;  // per AC bus index
  std::vector<int> dc_island_of;
  int n_ac = 0;
  int n_dc = 0;
};

// Connectivity over in-service branches plus closed switches and ZILs.
// Islands are numbered in increasing order of their smallest bus id.
Islands island_decomposition(const Network& net);

// Compact raw view: converter expansion is folded back, switches and
// busbar split records are kept. Used by the JSON writer.
RawCase to_raw(const Network& net);

bool same_case(const Network& a, const Network& b);

}  // namespace gridtopo
