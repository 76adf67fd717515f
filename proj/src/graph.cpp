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

#include "hids/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "hids/error.hpp"

namespace hids {
namespace {

constexpr std::string_view kServices[] = {"-",    "http", "ftp",  "ftp-data", "smtp",
                                          "ssh",  "dns",  "pop3", "snmp",     "ssl",
                                          "dhcp", "irc",  "radius"};
constexpr std::string_view kStates[] = {"", "FIN", "CON", "INT", "REQ", "RST", "REJ", "ACC", "CLO"};

bool is_failure(const FlowEvent& e, const std::vector<std::string>& failure_states) {
  return std::find(failure_states.begin(), failure_states.end(), e.state) !=
         failure_states.end();
}

auto event_key(const FlowEvent& e) {
  return std::tie(e.timestamp, e.src, e.dst, e.service, e.protocol, e.state, e.duration,
                  e.dst_port, e.src_packets, e.dst_packets, e.src_bytes, e.dst_bytes);
}

std::vector<FlowEvent> canonical(std::span<const FlowEvent> window) {
  if (window.empty()) throw DataError("build_graph: empty window");
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i].src.empty() || window[i].dst.empty()) {
      throw DataError("build_graph: record " + std::to_string(i) + " has an empty " +
                      (window[i].src.empty() ? "source" : "destination") + " entity");
    }
  }
  std::vector<FlowEvent> events(window.begin(), window.end());
  std::sort(events.begin(), events.end(),
            [](const FlowEvent& a, const FlowEvent& b) { return event_key(a) < event_key(b); });
  return events;
}

double time_span(std::span<const FlowEvent> events) {
  double lo = events.front().timestamp;
  double hi = lo;
  for (const auto& e : events) {
    lo = std::min(lo, e.timestamp);
    hi = std::max(hi, e.timestamp);
  }
  return hi - lo;
}

struct Moments {
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    n += 1.0;
    sum += x;
    sum_sq += x * x;
  }
  double mean() const { return n > 0.0 ? sum / n : 0.0; }
  double stddev() const {
    if (n == 0.0) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(sum_sq / n - m * m, 0.0));
  }
};

// Mean gap between consecutive timestamps, as a fraction of the window span.
double interarrival(std::vector<double> times, double span) {
  if (times.size() < 2 || span <= 0.0) return 0.0;
  std::sort(times.begin(), times.end());
  return (times.back() - times.front()) / static_cast<double>(times.size() - 1) / span;
}

std::array<double, kNodeFeatureCount> features_of(std::string_view entity,
                                                  std::span<const FlowEvent> events, double span,
                                                  const std::vector<std::string>& failure_states) {
  std::array<double, kNodeFeatureCount> f{};
  std::set<std::pair<std::string, std::string>> out_edges, in_edges;
  std::set<std::string> out_peers, in_peers, services;
  Moments out_dur, in_dur;
  std::vector<double> out_times, in_times;
  double involved = 0.0, tcp = 0.0, udp = 0.0, well_known = 0.0, failed = 0.0;
  double first = 0.0, last = 0.0;

  for (const auto& e : events) {
    const bool out = e.src == entity;
    const bool in = e.dst == entity;
    if (!out && !in) continue;
    if (out) {
      f[4] += 1.0;
      f[6] += e.src_bytes;
      f[7] += e.dst_bytes;
      f[8] += e.src_packets;
      f[9] += e.dst_packets;
      out_dur.add(e.duration);
      out_times.push_back(e.timestamp);
      if (!in) {
        out_edges.emplace(e.dst, e.service);
        out_peers.insert(e.dst);
      }
    }
    if (in) {
      f[5] += 1.0;
      f[6] += e.dst_bytes;
      f[7] += e.src_bytes;
      f[8] += e.dst_packets;
      f[9] += e.src_packets;
      in_dur.add(e.duration);
      in_times.push_back(e.timestamp);
      if (!out) {
        in_edges.emplace(e.src, e.service);
        in_peers.insert(e.src);
      }
    }
    if (involved == 0.0) first = last = e.timestamp;
    first = std::min(first, e.timestamp);
    last = std::max(last, e.timestamp);
    involved += 1.0;
    const int proto = protocol_code(e.protocol);
    tcp += proto == 1 ? 1.0 : 0.0;
    udp += proto == 2 ? 1.0 : 0.0;
    well_known += (e.dst_port >= 0.0 && e.dst_port <= 1023.0) ? 1.0 : 0.0;
    failed += is_failure(e, failure_states) ? 1.0 : 0.0;
    services.insert(e.service);
  }

  f[0] = static_cast<double>(out_edges.size());
  f[1] = static_cast<double>(in_edges.size());
  f[2] = static_cast<double>(out_peers.size());
  f[3] = static_cast<double>(in_peers.size());
  f[10] = out_dur.mean();
  f[11] = out_dur.stddev();
  f[12] = in_dur.mean();
  f[13] = in_dur.stddev();
  f[14] = interarrival(std::move(out_times), span);
  f[15] = interarrival(std::move(in_times), span);
  if (involved > 0.0) {
    f[16] = tcp / involved;
    f[17] = udp / involved;
    f[18] = (involved - tcp - udp) / involved;
    f[19] = well_known / involved;
    f[20] = failed / involved;
  }
  f[21] = f[8] > 0.0 ? f[6] / f[8] : 0.0;
  f[22] = f[9] > 0.0 ? f[7] / f[9] : 0.0;
  f[23] = span > 0.0 ? (last - first) / span : 0.0;
  f[24] = static_cast<double>(services.size());
  return f;
}

std::string escape_id(std::string_view id) {
  std::string out;
  for (char c : id) {
    if (c == '%' || std::isspace(static_cast<unsigned char>(c)) || c == '\0') {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", static_cast<unsigned char>(c));
      out += buf;
    } else {
      out.push_back(c);
    }
  }
  return out.empty() ? "%" : out;
}

std::string unescape_id(std::string_view text) {
  if (text == "%") return {};
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size()) {
      out.push_back(static_cast<char>(std::stoi(std::string(text.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else if (text[i] == '%') {
      throw FormatError("graph: bad escape in id '" + std::string(text) + "'");
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

void put_number(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

int protocol_code(std::string_view protocol) {
  if (protocol == "tcp") return 1;
  if (protocol == "udp") return 2;
  if (protocol == "icmp") return 3;
  return 0;
}

int service_code(std::string_view service) {
  for (std::size_t i = 0; i < std::size(kServices); ++i) {
    if (kServices[i] == service) return static_cast<int>(i);
  }
  if (service.empty()) return 0;
  return static_cast<int>(std::size(kServices));
}

int state_code(std::string_view state) {
  for (std::size_t i = 0; i < std::size(kStates); ++i) {
    if (kStates[i] == state) return static_cast<int>(i);
  }
  return 0;
}

const std::vector<std::string>& default_failure_states() {
  static const std::vector<std::string> states = {"REJ", "RST", "INT", "REQ"};
  return states;
}

EventExtractor::EventExtractor(const SchemaSpec& schema, GraphColumns columns)
    : columns_(std::move(columns)) {
  const std::string* names[] = {&columns_.duration,    &columns_.protocol,  &columns_.service,
                                &columns_.dst_port,    &columns_.src_packets,
                                &columns_.dst_packets, &columns_.src_bytes, &columns_.dst_bytes,
                                &columns_.state};
  for (std::size_t i = 0; i < index_.size(); ++i) {
    const auto idx = schema.find(*names[i]);
    index_[i] = idx ? static_cast<std::ptrdiff_t>(*idx) : -1;
  }
}

FlowEvent EventExtractor::operator()(const FlowRecord& record) const {
  auto cell = [&](std::size_t slot) -> std::string_view {
    const std::ptrdiff_t i = index_[slot];
    if (i < 0 || static_cast<std::size_t>(i) >= record.cells.size()) return {};
    return record.cells[static_cast<std::size_t>(i)];
  };
  auto number = [&](std::size_t slot, double fallback) {
    return parse_number(cell(slot)).value_or(fallback);
  };
  FlowEvent e;
  e.timestamp = record.timestamp;
  e.src = record.src;
  e.dst = record.dst;
  e.duration = number(0, 0.0);
  e.protocol = std::string(cell(1));
  e.service = std::string(cell(2));
  e.dst_port = number(3, -1.0);
  e.src_packets = number(4, 0.0);
  e.dst_packets = number(5, 0.0);
  e.src_bytes = number(6, 0.0);
  e.dst_bytes = number(7, 0.0);
  e.state = std::string(cell(8));
  return e;
}

std::size_t TrafficGraph::node_index(std::string_view id) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
  if (it == nodes.end() || *it != id) {
    throw DataError("graph: no node '" + std::string(id) + "'");
  }
  return static_cast<std::size_t>(it - nodes.begin());
}

TrafficGraph build_graph(std::span<const FlowEvent> window,
                         const std::vector<std::string>& failure_states) {
  const auto events = canonical(window);
  const double span = time_span(events);

  TrafficGraph g;
  std::set<std::string> ids;
  for (const auto& e : events) {
    ids.insert(e.src);
    ids.insert(e.dst);
  }
  g.nodes.assign(ids.begin(), ids.end());
  const auto n = static_cast<ag::Index>(g.nodes.size());
  g.features.resize(n, static_cast<ag::Index>(kNodeFeatureCount));
  for (ag::Index i = 0; i < n; ++i) {
    const auto f = features_of(g.nodes[static_cast<std::size_t>(i)], events, span, failure_states);
    for (std::size_t k = 0; k < kNodeFeatureCount; ++k) {
      g.features(i, static_cast<ag::Index>(k)) = f[k];
    }
  }

  struct Aggregate {
    Moments duration;
    double src_packets = 0, dst_packets = 0, src_bytes = 0, dst_bytes = 0;
    const FlowEvent* latest = nullptr;
  };
  std::map<std::tuple<std::size_t, std::size_t, std::string>, Aggregate> edges;
  for (const auto& e : events) {
    if (e.src == e.dst) continue;
    auto& a = edges[{g.node_index(e.src), g.node_index(e.dst), e.service}];
    a.duration.add(e.duration);
    a.src_packets += e.src_packets;
    a.dst_packets += e.dst_packets;
    a.src_bytes += e.src_bytes;
    a.dst_bytes += e.dst_bytes;
    a.latest = &e;  // events are in time order
  }
  g.adjacency = ag::Matrix::Zero(n, n);
  for (const auto& [key, a] : edges) {
    const auto& [s, d, service] = key;
    GraphEdge edge{s, d, service, {}};
    edge.attributes = {a.duration.mean(),
                       static_cast<double>(protocol_code(a.latest->protocol)),
                       static_cast<double>(service_code(service)),
                       a.src_packets,
                       a.dst_packets,
                       a.src_bytes,
                       a.dst_bytes,
                       static_cast<double>(state_code(a.latest->state)),
                       a.duration.n,
                       is_failure(*a.latest, failure_states) ? 0.0 : 1.0};
    g.edges.push_back(std::move(edge));
    g.adjacency(static_cast<ag::Index>(s), static_cast<ag::Index>(d)) = 1.0;
  }
  return g;
}

std::array<double, kNodeFeatureCount> node_features(std::string_view entity,
                                                    std::span<const FlowEvent> window,
                                                    const std::vector<std::string>& failure_states) {
  const auto events = canonical(window);
  const bool present = std::any_of(events.begin(), events.end(), [&](const FlowEvent& e) {
    return e.src == entity || e.dst == entity;
  });
  if (!present) throw DataError("node_features: entity '" + std::string(entity) + "' not in window");
  return features_of(entity, events, time_span(events), failure_states);
}

ag::Matrix normalize_adjacency(const ag::Matrix& adjacency, bool symmetrize) {
  if (adjacency.rows() != adjacency.cols()) {
    throw ShapeError("normalize_adjacency: matrix is " + std::to_string(adjacency.rows()) + "x" +
                     std::to_string(adjacency.cols()) + ", not square");
  }
  ag::Matrix a = adjacency;
  if (symmetrize) a = a.cwiseMax(a.transpose()).eval();
  a.diagonal().array() += 1.0;
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

void write_graph(std::ostream& out, const TrafficGraph& g) {
  out << "# hids traffic graph, node catalog v" << kNodeFeatureCatalogVersion << '\n';
  out << "NODES " << g.nodes.size() << '\n';
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    out << escape_id(g.nodes[i]);
    for (ag::Index k = 0; k < g.features.cols(); ++k) {
      out << ' ';
      put_number(out, g.features(static_cast<ag::Index>(i), k));
    }
    out << '\n';
  }
  out << "EDGES " << g.edges.size() << '\n';
  for (const auto& e : g.edges) {
    out << escape_id(g.nodes[e.src]) << ' ' << escape_id(g.nodes[e.dst]) << ' '
        << escape_id(e.service);
    for (double v : e.attributes) {
      out << ' ';
      put_number(out, v);
    }
    out << '\n';
  }
  out << "ADJ " << g.adjacency.rows() << '\n';
  for (ag::Index i = 0; i < g.adjacency.rows(); ++i) {
    for (ag::Index j = 0; j < g.adjacency.cols(); ++j) {
      out << (j ? " " : "") << (g.adjacency(i, j) != 0.0 ? 1 : 0);
    }
    out << '\n';
  }
}

TrafficGraph read_graph(std::istream& in) {
  auto next_line = [&](std::string& line) {
    while (std::getline(in, line)) {
      if (!line.empty() && line.front() != '#') return true;
    }
    return false;
  };
  auto header = [&](std::string_view tag) {
    std::string line;
    if (!next_line(line)) throw FormatError("graph: missing " + std::string(tag) + " section");
    std::istringstream s(line);
    std::string got;
    std::size_t count = 0;
    if (!(s >> got >> count) || got != tag) {
      throw FormatError("graph: expected " + std::string(tag) + " header, got '" + line + "'");
    }
    return count;
  };
  auto number = [](std::istringstream& s, const char* what) {
    std::string tok;
    if (!(s >> tok)) throw FormatError(std::string("graph: missing ") + what);
    const auto v = parse_number(tok);
    if (!v) throw FormatError("graph: bad number '" + tok + "'");
    return *v;
  };

  TrafficGraph g;
  const std::size_t n = header("NODES");
  g.features.resize(static_cast<ag::Index>(n), static_cast<ag::Index>(kNodeFeatureCount));
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    if (!next_line(line)) throw FormatError("graph: truncated NODES section");
    std::istringstream s(line);
    std::string id;
    s >> id;
    g.nodes.push_back(unescape_id(id));
    for (std::size_t k = 0; k < kNodeFeatureCount; ++k) {
      g.features(static_cast<ag::Index>(i), static_cast<ag::Index>(k)) = number(s, "feature");
    }
  }
  if (!std::is_sorted(g.nodes.begin(), g.nodes.end())) {
    throw FormatError("graph: node ids are not in sorted order");
  }
  const std::size_t m = header("EDGES");
  for (std::size_t i = 0; i < m; ++i) {
    if (!next_line(line)) throw FormatError("graph: truncated EDGES section");
    std::istringstream s(line);
    std::string src, dst, service;
    if (!(s >> src >> dst >> service)) throw FormatError("graph: malformed edge '" + line + "'");
    GraphEdge e{g.node_index(unescape_id(src)), g.node_index(unescape_id(dst)),
                unescape_id(service), {}};
    for (double& v : e.attributes) v = number(s, "edge attribute");
    g.edges.push_back(std::move(e));
  }
  const std::size_t an = header("ADJ");
  if (an != n) throw FormatError("graph: ADJ size differs from node count");
  g.adjacency.resize(static_cast<ag::Index>(n), static_cast<ag::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!next_line(line)) throw FormatError("graph: truncated ADJ section");
    std::istringstream s(line);
    for (std::size_t j = 0; j < n; ++j) {
      g.adjacency(static_cast<ag::Index>(i), static_cast<ag::Index>(j)) = number(s, "adjacency");
    }
  }
  return g;
}

void save_graph(const std::filesystem::path& path, const TrafficGraph& graph) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_graph(out, graph);
}

}  // namespace hids
