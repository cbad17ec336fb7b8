#pragma once

#include <vector>

#include "model.hpp"

namespace fixtures {

// Seven agents, five queries of four draws each. x2 is drawn twice by the
// third query and x7 twice by the fifth.
inline pooled::PoolingGraph small_graph() {
  return pooled::PoolingGraph::from_queries(7, 4, {{0, 1, 2, 3}, {0, 2, 4, 5}, {1, 1, 2, 6}, {3, 4, 5, 6}, {3, 4, 6, 6}});
}

inline pooled::GroundTruth small_truth() { return pooled::GroundTruth({1, 0, 1, 0, 1, 0, 0}); }

}  // namespace fixtures
