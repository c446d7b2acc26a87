#include "gridtopo/augment.hpp"

#include <algorithm>
#include <cmath>

namespace gridtopo {

namespace {

struct ElementRef {
  SwitchTarget target;
  int index;  // table index
  int end;    // branch end attached here (0 from, 1 to)
};

double element_rating(const Network& net, const ElementRef& e) {
  switch (e.target) {
    case SwitchTarget::AcBranch: return net.ac_branches[e.index].s_max;
    case SwitchTarget::DcBranch: return net.dc_branches[e.index].p_max;
    case SwitchTarget::Converter: return net.converters[e.index].s_max;
    case SwitchTarget::Generator: {
      const Generator& g = net.gens[e.index];
      double p = std::max(std::abs(g.p_max), std::abs(g.p_min));
      double q = std::max(std::abs(g.q_max), std::abs(g.q_min));
      return std::hypot(p, q);
    }
    case SwitchTarget::Load: {
      const Load& l = net.loads[e.index];
      return std::hypot(l.pd, l.qd);
    }
    default: return 0.0;
  }
}

std::vector<ElementRef> connected_elements(const Network& net, char side, int bus) {
  std::vector<ElementRef> out;
  if (side == 'a') {
    for (size_t i = 0; i < net.ac_branches.size(); ++i) {
      const AcBranch& b = net.ac_branches[i];
      if (b.conv_owner >= 0) continue;
      if (b.from == bus) out.push_back({SwitchTarget::AcBranch, static_cast<int>(i), 0});
      if (b.to == bus) out.push_back({SwitchTarget::AcBranch, static_cast<int>(i), 1});
    }
    for (size_t i = 0; i < net.converters.size(); ++i)
      if (net.converters[i].grid_bus == bus)
        out.push_back({SwitchTarget::Converter, static_cast<int>(i), 0});
    for (size_t i = 0; i < net.gens.size(); ++i)
      if (net.gens[i].bus == bus) out.push_back({SwitchTarget::Generator, static_cast<int>(i), 0});
    for (size_t i = 0; i < net.loads.size(); ++i)
      if (net.loads[i].side == 'a' && net.loads[i].bus == bus)
        out.push_back({SwitchTarget::Load, static_cast<int>(i), 0});
  } else {
    for (size_t i = 0; i < net.dc_branches.size(); ++i) {
      const DcBranch& b = net.dc_branches[i];
      if (b.from == bus) out.push_back({SwitchTarget::DcBranch, static_cast<int>(i), 0});
      if (b.to == bus) out.push_back({SwitchTarget::DcBranch, static_cast<int>(i), 1});
    }
    for (size_t i = 0; i < net.converters.size(); ++i)
      if (net.converters[i].dc_bus == bus)
        out.push_back({SwitchTarget::Converter, static_cast<int>(i), 0});
    for (size_t i = 0; i < net.loads.size(); ++i)
      if (net.loads[i].side == 'd' && net.loads[i].bus == bus)
        out.push_back({SwitchTarget::Load, static_cast<int>(i), 0});
  }
  return out;
}

void reattach(Network& net, const ElementRef& e, char side, int new_bus) {
  switch (e.target) {
    case SwitchTarget::AcBranch: {
      AcBranch& b = net.ac_branches[e.index];
      (e.end == 0 ? b.from : b.to) = new_bus;
      break;
    }
    case SwitchTarget::DcBranch: {
      DcBranch& b = net.dc_branches[e.index];
      (e.end == 0 ? b.from : b.to) = new_bus;
      break;
    }
    case SwitchTarget::Converter: {
      Converter& c = net.converters[e.index];
      if (side == 'a') {
        // move the whole station: the expansion chain hangs off grid_bus
        if (c.tf_branch >= 0)
          net.ac_branches[c.tf_branch].from = new_bus;
        else if (c.pr_branch >= 0)
          net.ac_branches[c.pr_branch].from = new_bus;
        if (c.grid_bus == c.terminal_bus) c.terminal_bus = new_bus;
        if (c.filter_bus == c.grid_bus) c.filter_bus = new_bus;
        c.grid_bus = new_bus;
      } else {
        c.dc_bus = new_bus;
      }
      break;
    }
    case SwitchTarget::Generator: net.gens[e.index].bus = new_bus; break;
    case SwitchTarget::Load: net.loads[e.index].bus = new_bus; break;
    default: break;
  }
}

}  // namespace

int count_switches(const Network& net, const SplitPlan& plan) {
  int total = 0;
  for (const RawSplitRequest& req : plan.splits) {
    int bus = req.side == 'a' ? net.ac_index(req.bus) : net.dc_index(req.bus);
    if (bus < 0)
      throw ValidationError("split plan references unknown bus " + std::to_string(req.bus));
    total += 2 * static_cast<int>(connected_elements(net, req.side, bus).size()) + 1;
  }
  return total;
}

AugmentedNetwork split_busbars(const Network& net, const SplitPlan& plan) {
  AugmentedNetwork out;
  out.net = net;
  Network& n = out.net;

  int next_ac_id = 0, next_dc_id = 0, next_sw_id = 0;
  for (const AcBus& b : n.ac_buses) next_ac_id = std::max(next_ac_id, b.id);
  for (const DcBus& b : n.dc_buses) next_dc_id = std::max(next_dc_id, b.id);
  for (const Switch& s : n.switches) next_sw_id = std::max(next_sw_id, s.id);

  for (const RawSplitRequest& req : plan.splits) {
    int bus = req.side == 'a' ? n.ac_index(req.bus) : n.dc_index(req.bus);
    if (bus < 0)
      throw ValidationError("split plan references unknown bus " + std::to_string(req.bus));
    BusRole role = req.side == 'a' ? n.ac_buses[bus].role : n.dc_buses[bus].role;
    if (role != BusRole::Busbar)
      throw ValidationError("bus " + std::to_string(req.bus) +
                            " is not an original busbar and cannot be split");
    for (const BusbarSplitRecord& r : n.bs_records)
      if (r.side == req.side && r.original_bus == req.bus)
        throw ValidationError("bus " + std::to_string(req.bus) + " is already split");

    std::vector<ElementRef> elems = connected_elements(n, req.side, bus);

    BusbarSplitRecord rec;
    rec.side = req.side;
    rec.original_bus = req.bus;

    int aux;
    if (req.side == 'a') {
      AcBus half = n.ac_buses[bus];
      half.id = ++next_ac_id;
      half.role = BusRole::BusbarHalf;
      half.gs = half.bs = 0.0;
      half.reference = false;  // the reference flag stays on the original half
      half.mp_type = 1;
      aux = static_cast<int>(n.ac_buses.size());
      n.ac_buses.push_back(half);
    } else {
      DcBus half = n.dc_buses[bus];
      half.id = ++next_dc_id;
      half.role = BusRole::BusbarHalf;
      aux = static_cast<int>(n.dc_buses.size());
      n.dc_buses.push_back(half);
    }
    rec.aux_bus = req.side == 'a' ? n.ac_buses[aux].id : n.dc_buses[aux].id;

    double zil_rating = 0.0;
    bool unbounded = false;
    for (const ElementRef& e : elems) {
      int stub;
      if (req.side == 'a') {
        AcBus sb = n.ac_buses[bus];
        sb.id = ++next_ac_id;
        sb.role = BusRole::ElementStub;
        sb.gs = sb.bs = 0.0;
        sb.reference = false;
        sb.mp_type = 1;
        stub = static_cast<int>(n.ac_buses.size());
        n.ac_buses.push_back(sb);
      } else {
        DcBus sb = n.dc_buses[bus];
        sb.id = ++next_dc_id;
        sb.role = BusRole::ElementStub;
        stub = static_cast<int>(n.dc_buses.size());
        n.dc_buses.push_back(sb);
      }
      reattach(n, e, req.side, stub);

      double rating = element_rating(n, e);
      if (rating <= 0.0) unbounded = true;
      zil_rating += rating;

      for (int half_idx : {bus, aux}) {
        Switch s;
        s.id = ++next_sw_id;
        s.side = req.side;
        s.from_bus = stub;
        s.to_bus = half_idx;
        s.target = e.target;
        s.element = e.index;
        s.element_end = e.end;
        s.s_max = rating;
        s.closed = half_idx == bus;  // default state keeps the original topology
        s.switchable = true;
        rec.element_switches.push_back(s.id);
        n.switches.push_back(s);
      }
    }

    Switch zil;
    zil.id = ++next_sw_id;
    zil.side = req.side;
    zil.from_bus = bus;
    zil.to_bus = aux;
    zil.target = SwitchTarget::Zil;
    zil.element = -1;
    zil.s_max = unbounded ? 0.0 : zil_rating;
    zil.closed = true;
    zil.switchable = true;
    rec.zil_switch = zil.id;
    n.switches.push_back(zil);

    n.bs_records.push_back(rec);
    out.records.push_back(rec);
  }
  return out;
}

SwitchableSet tag_switchable(const Network& net, SwitchScope scope) {
  SwitchableSet set;
  bool ac = scope == SwitchScope::Ac || scope == SwitchScope::All;
  bool dc = scope == SwitchScope::Dc || scope == SwitchScope::All;
  if (ac)
    for (size_t i = 0; i < net.ac_branches.size(); ++i)
      if (net.ac_branches[i].in_service && net.ac_branches[i].conv_owner < 0)
        set.ac_branches.push_back(static_cast<int>(i));
  if (dc) {
    for (size_t i = 0; i < net.dc_branches.size(); ++i)
      if (net.dc_branches[i].in_service) set.dc_branches.push_back(static_cast<int>(i));
    for (size_t i = 0; i < net.converters.size(); ++i)
      if (net.converters[i].in_service) set.converters.push_back(static_cast<int>(i));
  }
  return set;
}

std::vector<std::pair<int, int>> switch_pairs(const Network& net) {
  std::vector<std::pair<int, int>> pairs;
  auto index_of = [&](int id) {
    for (size_t i = 0; i < net.switches.size(); ++i)
      if (net.switches[i].id == id) return static_cast<int>(i);
    return -1;
  };
  for (const BusbarSplitRecord& r : net.bs_records) {
    for (size_t k = 0; k + 1 < r.element_switches.size(); k += 2) {
      int a = index_of(r.element_switches[k]);
      int b = index_of(r.element_switches[k + 1]);
      if (a >= 0 && b >= 0) pairs.emplace_back(a, b);
    }
  }
  return pairs;
}

}  // namespace gridtopo
