// Shared test topologies.
#pragma once

#include "fognet/topology.hpp"

namespace fixtures {

using namespace fognet;

// Desk-scale replica of a lab fabric: five switches in a line-ish
// arrangement, eight end-devices in three groups at increasing distance
// from the controller, four fog-devices behind two aggregation
// switches. All links 1 Gbps.
inline Topology testbed() {
  Topology t;
  for (int i = 1; i <= 5; ++i)
    t.add_node(NodeDecl{"openflow:" + std::to_string(i), NodeKind::Switch});
  t.add_node(NodeDecl{"ctrl:1", NodeKind::Controller});
  for (int i = 1; i <= 8; ++i)
    t.add_node(NodeDecl{"end:" + std::to_string(i), NodeKind::EndDevice});
  for (int i = 1; i <= 4; ++i) {
    NodeDecl fog{"fog:" + std::to_string(i), NodeKind::FogDevice};
    fog.total_processing = cores(4);
    fog.total_memory = gib(8);
    t.add_node(fog);
  }

  PortNo p1 = 0, p2 = 0, p3 = 0, p4 = 0, p5 = 0;
  t.add_duplex_link(LinkDecl{"ctrl:1", "openflow:1", 1, ++p1, gbps(1)});
  t.add_duplex_link(LinkDecl{"openflow:1", "openflow:2", ++p1, ++p2, gbps(1)});
  t.add_duplex_link(LinkDecl{"openflow:2", "openflow:3", ++p2, ++p3, gbps(1)});
  t.add_duplex_link(LinkDecl{"openflow:1", "openflow:4", ++p1, ++p4, gbps(1)});
  t.add_duplex_link(LinkDecl{"openflow:2", "openflow:5", ++p2, ++p5, gbps(1)});
  for (int i = 1; i <= 3; ++i)
    t.add_duplex_link(LinkDecl{"end:" + std::to_string(i), "openflow:1", 1, ++p1, gbps(1)});
  for (int i = 4; i <= 5; ++i)
    t.add_duplex_link(LinkDecl{"end:" + std::to_string(i), "openflow:2", 1, ++p2, gbps(1)});
  for (int i = 6; i <= 8; ++i)
    t.add_duplex_link(LinkDecl{"end:" + std::to_string(i), "openflow:3", 1, ++p3, gbps(1)});
  for (int i = 1; i <= 2; ++i)
    t.add_duplex_link(LinkDecl{"fog:" + std::to_string(i), "openflow:4", 1, ++p4, gbps(1)});
  for (int i = 3; i <= 4; ++i)
    t.add_duplex_link(LinkDecl{"fog:" + std::to_string(i), "openflow:5", 1, ++p5, gbps(1)});
  return t;
}

}  // namespace fixtures
