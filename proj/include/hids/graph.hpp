// Copyright 2026 The hids Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Per-window traffic graphs.
//
// Nodes are the entity ids seen in a window, sorted lexicographically. One
// directed edge is kept per (src, dst, service) triple with the flows behind
// it aggregated; the adjacency matrix only records connectivity.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hids/autograd.hpp"
#include "hids/schema.hpp"

namespace hids {

inline constexpr std::size_t kNodeFeatureCount = 25;
inline constexpr std::size_t kEdgeAttributeCount = 10;
inline constexpr int kNodeFeatureCatalogVersion = 1;

/// Node feature catalog, in column order.
inline constexpr std::array<std::string_view, kNodeFeatureCount> kNodeFeatureNames = {
    "out_degree",        "in_degree",         "out_peers",          "in_peers",
    "out_flows",         "in_flows",          "bytes_sent",         "bytes_received",
    "packets_sent",      "packets_received",  "out_duration_mean",  "out_duration_std",
    "in_duration_mean",  "in_duration_std",   "out_interarrival",   "in_interarrival",
    "tcp_fraction",      "udp_fraction",      "other_proto_fraction",
    "well_known_port_fraction",               "failure_fraction",   "bytes_per_packet_sent",
    "bytes_per_packet_received",              "active_span",        "service_count",
};

inline constexpr std::array<std::string_view, kEdgeAttributeCount> kEdgeAttributeNames = {
    "duration_mean", "protocol_code", "service_code", "src_packets", "dst_packets",
    "src_bytes",     "dst_bytes",     "state_code",   "flow_count",  "success",
};

/// The fields of a flow record the graph builder looks at.
struct FlowEvent {
  double timestamp = 0.0;
  std::string src;
  std::string dst;
  double duration = 0.0;
  std::string protocol;
  std::string service;
  double dst_port = -1.0;  // negative when unknown
  double src_packets = 0.0;
  double dst_packets = 0.0;
  double src_bytes = 0.0;
  double dst_bytes = 0.0;
  std::string state;
};

int protocol_code(std::string_view protocol);  // tcp 1, udp 2, icmp 3, else 0
int service_code(std::string_view service);    // fixed table, unknown services 13
int state_code(std::string_view state);        // fixed table, unknown states 0

/// Connection states counted as failed: REJ, RST, INT, REQ.
const std::vector<std::string>& default_failure_states();

/// Names of the schema columns that feed the graph. Columns absent from a
/// schema read as zero or empty.
struct GraphColumns {
  std::string duration = "dur";
  std::string protocol = "proto";
  std::string service = "service";
  std::string dst_port = "dsport";
  std::string src_packets = "spkts";
  std::string dst_packets = "dpkts";
  std::string src_bytes = "sbytes";
  std::string dst_bytes = "dbytes";
  std::string state = "state";
  std::vector<std::string> failure_states = default_failure_states();
};

/// Maps records of one schema onto FlowEvents.
class EventExtractor {
 public:
  EventExtractor(const SchemaSpec& schema, GraphColumns columns = {});

  FlowEvent operator()(const FlowRecord& record) const;
  const GraphColumns& columns() const { return columns_; }

 private:
  GraphColumns columns_;
  std::array<std::ptrdiff_t, 9> index_{};
};

struct GraphEdge {
  std::size_t src = 0;  // node index
  std::size_t dst = 0;
  std::string service;
  std::array<double, kEdgeAttributeCount> attributes{};
};

struct TrafficGraph {
  std::vector<std::string> nodes;
  ag::Matrix features;   // |V| x 25
  std::vector<GraphEdge> edges;
  ag::Matrix adjacency;  // |V| x |V|, directed 0/1, zero diagonal

  std::size_t size() const { return nodes.size(); }
  /// Index of `id` in `nodes`; throws DataError when absent.
  std::size_t node_index(std::string_view id) const;
};

/// Builds the graph of one window. Record order does not matter: events are
/// put in a canonical order first. Self-flows contribute to node statistics
/// but produce no edge. Time statistics are divided by the window's time span
/// so that windows of different event density are comparable.
///
/// Throws DataError naming the record index when an endpoint id is empty, and
/// for an empty window.
TrafficGraph build_graph(std::span<const FlowEvent> window,
                         const std::vector<std::string>& failure_states = default_failure_states());

/// The 25 catalog statistics of `entity` over `window`.
std::array<double, kNodeFeatureCount> node_features(std::string_view entity,
                                                    std::span<const FlowEvent> window,
                                                    const std::vector<std::string>& failure_states = default_failure_states());

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I; when `symmetrize` is
/// set A is first replaced by max(A, A^T). Throws ShapeError unless square.
ag::Matrix normalize_adjacency(const ag::Matrix& adjacency, bool symmetrize = true);

/// Text export: NODES, EDGES and ADJ sections. Ids are percent-escaped so
/// they never contain whitespace.
void write_graph(std::ostream& out, const TrafficGraph& graph);
TrafficGraph read_graph(std::istream& in);
void save_graph(const std::filesystem::path& path, const TrafficGraph& graph);

}  // namespace hids
