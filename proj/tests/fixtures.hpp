#pragma once

// Shared fixture trees for the test suites.

#include <string>

#include "consensus/io.hpp"
#include "consensus/model.hpp"

namespace fixtures {

// A highly correlated relation: an OR root over three AND branches
// with probabilities .3/.3/.4, worlds
//   {(t3,6),(t2,5),(t1,1)} .3, {(t3,9),(t1,7),(t4,0)} .3, {(t3,8),(t4,4),(t5,3)} .4
inline const char* kThreeWorldsJson = R"JSON({
  "node": "or",
  "children": [
    {"prob": 0.3, "child": {"node": "and", "children": [
      {"node": "leaf", "key": "t3", "value": 6},
      {"node": "leaf", "key": "t2", "value": 5},
      {"node": "leaf", "key": "t1", "value": 1}
    ]}},
    {"prob": 0.3, "child": {"node": "and", "children": [
      {"node": "leaf", "key": "t3", "value": 9},
      {"node": "leaf", "key": "t1", "value": 7},
      {"node": "leaf", "key": "t4", "value": 0}
    ]}},
    {"prob": 0.4, "child": {"node": "and", "children": [
      {"node": "leaf", "key": "t3", "value": 8},
      {"node": "leaf", "key": "t4", "value": 4},
      {"node": "leaf", "key": "t5", "value": 3}
    ]}}
  ]
})JSON";

inline consensus::AndXorTree threeworlds_tree() { return consensus::parse_tree(kThreeWorldsJson); }

// Four independent tuples with two alternatives each, block-independent
// disjoint style.
inline consensus::AndXorTree bid4_tree() {
  using consensus::BidRow;
  return consensus::from_bid({
      BidRow{"t1", 10.0, 0.4}, BidRow{"t1", 7.0, 0.6},
      BidRow{"t2", 9.0, 0.5}, BidRow{"t2", 2.0, 0.3},
      BidRow{"t3", 8.0, 0.7}, BidRow{"t3", 1.0, 0.2},
      BidRow{"t4", 6.0, 0.5}, BidRow{"t4", 3.0, 0.5},
  });
}

}  // namespace fixtures
