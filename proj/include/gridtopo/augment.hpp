#pragma once

#include <utility>
#include <vector>

#include "gridtopo/network.hpp"

namespace gridtopo {

// Busbars to split, by external bus id.
struct SplitPlan {
  std::vector<RawSplitRequest> splits;
};

struct AugmentedNetwork {
  Network net;
  std::vector<BusbarSplitRecord> records;  // one per split in plan order
};

// Splits each listed busbar: adds the second busbar half, one stub node per
// connected element, two element switches per element (stub to each half)
// and one zero impedance link between the halves. New bus and switch ids
// start at max existing id + 1 and grow sequentially; elements are visited
// in table order (AC branches, converters, generators, loads; DC branches,
// converters, loads on the DC side). Element switches inherit the element
// rating, the ZIL rating is the sum over the elements. The reference flag
// stays on the original half. Throws ValidationError on unknown or already
// split buses.
AugmentedNetwork split_busbars(const Network& net, const SplitPlan& plan);

// Number of switches split_busbars would add: sum of 2 * n_b + 1 over the
// plan, where n_b counts elements connected to busbar b.
int count_switches(const Network& net, const SplitPlan& plan);

enum class SwitchScope { None = 0, Ac, Dc, All };

// Elements eligible for on/off binaries under a scope. AC covers AC
// branches; DC covers DC branches and converter stations. Converter
// expansion branches follow their converter and are never tagged alone.
struct SwitchableSet {
  std::vector<int> ac_branches;
  std::vector<int> dc_branches;
  std::vector<int> converters;
};

SwitchableSet tag_switchable(const Network& net, SwitchScope scope);

// Element switch pairs (to original half, to aux half) from the split
// records, as switch table indices.
std::vector<std::pair<int, int>> switch_pairs(const Network& net);

}  // namespace gridtopo
