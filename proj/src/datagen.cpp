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

#include "hids/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hids/csv.hpp"
#include "hids/error.hpp"
#include "hids/random.hpp"

namespace hids {
namespace {

constexpr std::pair<AttackType, std::string_view> kAttackNames[] = {
    {AttackType::kDdos, "ddos"},
    {AttackType::kPortScan, "port_scan"},
    {AttackType::kExfiltration, "exfiltration"},
    {AttackType::kBackdoorBeacon, "backdoor_beacon"},
};

struct Service {
  std::string ip;
  int port;
  std::string name;
  std::string proto;
};

struct Flow {
  double time = 0.0;
  std::uint64_t seq = 0;
  std::string srcip;
  int sport = 0;
  std::string dstip;
  int dsport = 0;
  std::string proto;
  std::string state;
  double dur = 0.0;
  double sbytes = 0.0;
  double dbytes = 0.0;
  int sttl = 0;
  int dttl = 0;
  double spkts = 0.0;
  double dpkts = 0.0;
  std::string service;
  std::string label;
};

std::string host_ip(std::size_t i) {
  return "10.0." + std::to_string(i / 250) + "." + std::to_string(i % 250 + 1);
}

std::string service_for_port(int port) {
  switch (port) {
    case 21: return "ftp";
    case 22: return "ssh";
    case 25: return "smtp";
    case 53: return "dns";
    case 80: return "http";
    case 110: return "pop3";
    case 161: return "snmp";
    case 443: return "ssl";
    default: return "-";
  }
}

double packets(double bytes, Rng& rng) {
  return std::max(1.0, std::ceil(bytes / rng.uniform(300.0, 1400.0)));
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.index(v.size())];
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  const auto d = parse_number(v);
  if (!d) throw ConfigError("scenario: " + key + " expects a number, got '" + v + "'");
  return *d;
}

class Generator {
 public:
  explicit Generator(const ScenarioSpec& spec) : spec_(spec), master_(spec.seed) {
    for (std::size_t i = 0; i < spec.entity_count; ++i) hosts_.push_back(host_ip(i));
    const std::size_t n_servers = std::max<std::size_t>(2, spec.entity_count / 10);
    const std::pair<int, std::string_view> offered[] = {{80, "tcp"},  {443, "tcp"}, {22, "tcp"},
                                                        {25, "tcp"},  {21, "tcp"},  {110, "tcp"},
                                                        {161, "udp"}, {53, "udp"}};
    for (std::size_t i = 0; i < n_servers; ++i) {
      const auto& [port, proto] = offered[i % std::size(offered)];
      services_.push_back({hosts_[i], port, service_for_port(port), std::string(proto)});
    }
    services_.push_back({"93.184.216.34", 443, "ssl", "tcp"});
    services_.push_back({"151.101.1.69", 80, "http", "tcp"});
    services_.push_back({"140.82.112.3", 443, "ssl", "tcp"});
    services_.push_back({"8.8.8.8", 53, "dns", "udp"});
    services_.push_back({"1.1.1.1", 53, "dns", "udp"});
    clients_.assign(hosts_.begin() + static_cast<std::ptrdiff_t>(n_servers), hosts_.end());
  }

  GeneratedData run() {
    GeneratedData out;
    out.schema = generated_schema();
    Rng targets = master_.fork(1);
    std::vector<AttackSpec> attacks = spec_.attacks;
    for (auto& a : attacks) {
      if (!a.target) a.target = default_target(a.type, targets);
    }
    merge_overlaps(attacks, out.warnings);

    Rng bg = master_.fork(2);
    background(bg);
    for (std::size_t i = 0; i < attacks.size(); ++i) {
      Rng rng = master_.fork(100 + i);
      attack(attacks[i], rng);
    }
    std::sort(flows_.begin(), flows_.end(), [](const Flow& a, const Flow& b) {
      return a.time != b.time ? a.time < b.time : a.seq < b.seq;
    });

    for (const auto& c : kGeneratedClasses) out.label_counts[c] = 0;
    Rng missing = master_.fork(3);
    std::ostringstream csv;
    csv::write_row(csv, out.schema.names());
    for (const Flow& f : flows_) {
      ++out.label_counts[f.label];
      std::vector<std::string> cells = {
          fixed(f.time, 6), f.srcip, std::to_string(f.sport), f.dstip, std::to_string(f.dsport),
          f.proto, f.state, fixed(f.dur, 6), fixed(f.sbytes, 0), fixed(f.dbytes, 0),
          std::to_string(f.sttl), std::to_string(f.dttl), fixed(f.spkts, 0), fixed(f.dpkts, 0),
          f.service, fixed(std::round(f.sbytes / f.spkts), 0),
          fixed(f.dpkts > 0.0 ? std::round(f.dbytes / f.dpkts) : 0.0, 0),
          fixed(f.dur > 0.0 ? f.sbytes * 8.0 / f.dur : 0.0, 3), f.label};
      if (spec_.missing_rate > 0.0) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
          if (out.schema.columns[c].kind == ColumnKind::kContinuous &&
              missing.bernoulli(spec_.missing_rate)) {
            cells[c].clear();
          }
        }
      }
      csv::write_row(csv, cells);
    }
    out.csv = csv.str();
    out.flows = flows_.size();
    return out;
  }

 private:
  std::string default_target(AttackType type, Rng& rng) const {
    switch (type) {
      case AttackType::kDdos: {
        std::vector<const Service*> tcp;
        for (std::size_t i = 0; i + 5 < services_.size(); ++i) {
          if (services_[i].proto == "tcp") tcp.push_back(&services_[i]);
        }
        const Service* s = tcp[rng.index(tcp.size())];
        return s->ip + ":" + std::to_string(s->port);
      }
      case AttackType::kPortScan:
        return pick(hosts_, rng);
      default:
        return pick(clients_, rng);
    }
  }

  static void merge_overlaps(std::vector<AttackSpec>& attacks, std::vector<std::string>& warnings) {
    bool merged = true;
    while (merged) {
      merged = false;
      for (std::size_t i = 0; i < attacks.size() && !merged; ++i) {
        for (std::size_t j = i + 1; j < attacks.size() && !merged; ++j) {
          AttackSpec& a = attacks[i];
          const AttackSpec& b = attacks[j];
          if (a.type != b.type || a.target != b.target) continue;
          if (!(a.start < b.start + b.duration && b.start < a.start + a.duration)) continue;
          const double start = std::min(a.start, b.start);
          const double end = std::max(a.start + a.duration, b.start + b.duration);
          warnings.push_back("merged overlapping " + std::string(to_string(a.type)) +
                             " attacks on " + *a.target + " into [" + fixed(start, 3) + ", " +
                             fixed(end, 3) + "]");
          a.start = start;
          a.duration = end - start;
          a.intensity = std::max(a.intensity, b.intensity);
          attacks.erase(attacks.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
        }
      }
    }
  }

  Flow& add(double time, std::string label) {
    Flow& f = flows_.emplace_back();
    f.time = time;
    f.seq = flows_.size();
    f.label = std::move(label);
    return f;
  }

  void ttl(Flow& f, Rng& rng) {
    static const int src_ttl[] = {31, 62, 254};
    static const int dst_ttl[] = {29, 252};
    f.sttl = src_ttl[rng.index(3)];
    f.dttl = dst_ttl[rng.index(2)];
  }

  void background(Rng& rng) {
    double t = rng.exponential(spec_.background_rate);
    while (t < spec_.duration) {
      const Service& s = pick(services_, rng);
      std::string src = pick(hosts_, rng);
      if (src == s.ip) src = pick(clients_, rng);
      Flow& f = add(t, "Normal");
      f.srcip = src;
      f.sport = 1024 + static_cast<int>(rng.index(64511));
      f.dstip = s.ip;
      f.dsport = s.port;
      f.proto = s.proto;
      f.service = s.name;
      if (s.proto == "udp") {
        f.state = rng.bernoulli(0.97) ? "CON" : "INT";
        f.dur = rng.lognormal(-5.0, 0.5);
        f.sbytes = std::round(rng.lognormal(4.3, 0.3));
        f.dbytes = std::round(rng.lognormal(5.2, 0.4));
        f.spkts = 1;
        f.dpkts = 1;
      } else {
        const double u = rng.uniform();
        f.state = u < 0.95 ? "FIN" : (u < 0.98 ? "CON" : "RST");
        double mu_dur = -0.5, mu_s = 6.5, mu_d = 9.0;
        if (s.name == "ssh") {
          mu_dur = 2.0, mu_s = 8.0, mu_d = 8.5;
        } else if (s.name == "smtp" || s.name == "ftp" || s.name == "pop3") {
          mu_dur = 0.0, mu_s = 7.5, mu_d = 6.5;
        }
        f.dur = rng.lognormal(mu_dur, 1.0);
        f.sbytes = std::round(rng.lognormal(mu_s, 1.0));
        f.dbytes = std::round(rng.lognormal(mu_d, 1.4));
        f.spkts = packets(f.sbytes, rng);
        f.dpkts = packets(f.dbytes, rng);
      }
      ttl(f, rng);
      t += rng.exponential(spec_.background_rate);
    }
  }

  void attack(const AttackSpec& a, Rng& rng) {
    const double rate = a.intensity * spec_.background_rate;
    const double end = a.start + a.duration;
    const std::string label(to_string(a.type));
    if (a.type == AttackType::kBackdoorBeacon) {
      const double period = 1.0 / rate;
      for (double t = a.start; t < end; t += period) beacon(add(t, label), *a.target, rng);
      return;
    }
    int next_port = 1;
    for (double t = a.start + rng.exponential(rate); t < end; t += rng.exponential(rate)) {
      Flow& f = add(t, label);
      switch (a.type) {
        case AttackType::kDdos: ddos(f, *a.target, rng); break;
        case AttackType::kPortScan:
          scan(f, *a.target, next_port, rng);
          next_port = next_port % 65535 + 1;
          break;
        case AttackType::kExfiltration: exfiltrate(f, *a.target, rng); break;
        default: break;
      }
    }
  }

  void ddos(Flow& f, const std::string& target, Rng& rng) {
    const auto colon = target.rfind(':');
    f.srcip = "198.51.100." + std::to_string(10 + rng.index(40));
    f.sport = 1024 + static_cast<int>(rng.index(64511));
    f.dstip = target.substr(0, colon);
    f.dsport = colon == std::string::npos ? 80 : std::stoi(target.substr(colon + 1));
    f.proto = "tcp";
    f.service = service_for_port(f.dsport);
    const double u = rng.uniform();
    f.state = u < 0.6 ? "INT" : (u < 0.9 ? "REQ" : "RST");
    f.dur = rng.lognormal(-7.0, 0.5);
    f.sbytes = std::round(rng.lognormal(4.0, 0.2));
    f.dbytes = rng.bernoulli(0.7) ? 0.0 : std::round(rng.lognormal(3.8, 0.2));
    f.spkts = 1 + static_cast<double>(rng.index(2));
    f.dpkts = f.dbytes > 0.0 ? 1 : 0;
    ttl(f, rng);
  }

  void scan(Flow& f, const std::string& target, int port, Rng& rng) {
    f.srcip = "192.0.2.66";
    f.sport = 40000 + static_cast<int>(rng.index(20000));
    f.dstip = target;
    f.dsport = port;
    f.proto = "tcp";
    f.service = service_for_port(port);
    f.state = rng.bernoulli(0.7) ? "REJ" : "RST";
    f.dur = rng.lognormal(-8.0, 0.5);
    f.sbytes = rng.bernoulli(0.5) ? 44 : 60;
    f.dbytes = rng.bernoulli(0.6) ? 0 : 40;
    f.spkts = 1;
    f.dpkts = f.dbytes > 0.0 ? 1 : 0;
    ttl(f, rng);
  }

  void exfiltrate(Flow& f, const std::string& source, Rng& rng) {
    f.srcip = source;
    f.sport = 1024 + static_cast<int>(rng.index(64511));
    f.dstip = "203.0.113.50";
    f.dsport = 443;
    f.proto = "tcp";
    f.service = "ssl";
    f.state = "FIN";
    f.dur = rng.lognormal(2.5, 0.4);
    f.sbytes = std::round(rng.lognormal(14.0, 0.5));
    f.dbytes = std::round(rng.lognormal(7.0, 0.5));
    f.spkts = std::ceil(f.sbytes / 1400.0);
    f.dpkts = std::ceil(f.dbytes / 1400.0);
    ttl(f, rng);
  }

  void beacon(Flow& f, const std::string& source, Rng& rng) {
    f.srcip = source;
    f.sport = 1024 + static_cast<int>(rng.index(64511));
    f.dstip = "203.0.113.77";
    f.dsport = 4444;
    f.proto = "tcp";
    f.service = "-";
    f.state = rng.bernoulli(0.9) ? "FIN" : "CON";
    f.dur = rng.lognormal(-3.0, 0.1);
    f.sbytes = std::round(rng.lognormal(5.5, 0.05));
    f.dbytes = std::round(rng.lognormal(5.0, 0.05));
    f.spkts = 3;
    f.dpkts = 2;
    ttl(f, rng);
  }

  const ScenarioSpec& spec_;
  Rng master_;
  std::vector<std::string> hosts_;
  std::vector<std::string> clients_;
  std::vector<Service> services_;
  std::vector<Flow> flows_;
};

}  // namespace

std::string_view to_string(AttackType t) {
  for (const auto& [k, name] : kAttackNames) {
    if (k == t) return name;
  }
  return "?";
}

AttackType parse_attack_type(std::string_view name) {
  for (const auto& [k, n] : kAttackNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown attack type '" + std::string(name) +
                    "' (expected ddos, port_scan, exfiltration or backdoor_beacon)");
}

void ScenarioSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("scenario: " + msg); };
  if (!(duration > 0.0)) fail("duration must be positive");
  if (!(background_rate > 0.0)) fail("background_rate must be positive");
  if (entity_count < 4) fail("entity_count must be at least 4");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) fail("missing_rate must lie in [0,1)");
  for (const auto& a : attacks) {
    const std::string name(to_string(a.type));
    if (!(a.duration > 0.0)) fail(name + " attack duration must be positive");
    if (!(a.intensity > 0.0)) fail(name + " attack intensity must be positive");
    if (a.start < 0.0 || a.start + a.duration > duration) {
      fail(name + " attack interval [" + fixed(a.start, 3) + ", " +
           fixed(a.start + a.duration, 3) + "] lies outside [0, " + fixed(duration, 3) + "]");
    }
  }
}

ScenarioSpec ScenarioSpec::from_text(std::string_view text) {
  ScenarioSpec s;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("scenario: expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "duration") s.duration = to_double(key, value);
    else if (key == "background_rate") s.background_rate = to_double(key, value);
    else if (key == "entity_count") s.entity_count = static_cast<std::size_t>(to_double(key, value));
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "missing_rate") s.missing_rate = to_double(key, value);
    else if (key == "attack") {
      std::istringstream fields(value);
      std::string type;
      fields >> type;
      AttackSpec a;
      a.type = parse_attack_type(type);
      std::string kv;
      while (fields >> kv) {
        const auto e = kv.find('=');
        if (e == std::string::npos) throw ConfigError("scenario: bad attack field '" + kv + "'");
        const std::string k = kv.substr(0, e);
        const std::string v = kv.substr(e + 1);
        if (k == "start") a.start = to_double(k, v);
        else if (k == "duration") a.duration = to_double(k, v);
        else if (k == "intensity") a.intensity = to_double(k, v);
        else if (k == "target") a.target = v;
        else throw ConfigError("scenario: unknown attack field '" + k + "'");
      }
      s.attacks.push_back(std::move(a));
    } else {
      throw ConfigError("scenario: unknown key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

std::string ScenarioSpec::to_text() const {
  std::ostringstream out;
  out << "duration = " << fixed(duration, 6) << '\n'
      << "background_rate = " << fixed(background_rate, 6) << '\n'
      << "entity_count = " << entity_count << '\n'
      << "seed = " << seed << '\n'
      << "missing_rate = " << fixed(missing_rate, 6) << '\n';
  for (const auto& a : attacks) {
    out << "attack = " << to_string(a.type) << " start=" << fixed(a.start, 6)
        << " duration=" << fixed(a.duration, 6) << " intensity=" << fixed(a.intensity, 6);
    if (a.target) out << " target=" << *a.target;
    out << '\n';
  }
  return out.str();
}

ScenarioSpec default_scenario(std::uint64_t seed) {
  ScenarioSpec s;
  s.seed = seed;
  s.attacks = {
      {AttackType::kDdos, 100.0, 60.0, 3.0, std::nullopt},
      {AttackType::kPortScan, 350.0, 60.0, 3.0, std::nullopt},
      {AttackType::kExfiltration, 600.0, 100.0, 1.5, std::nullopt},
      {AttackType::kBackdoorBeacon, 850.0, 200.0, 1.0, std::nullopt},
  };
  return s;
}

SchemaSpec generated_schema() {
  SchemaSpec s;
  s.columns = {
      {"stime", ColumnKind::kTimestamp},    {"srcip", ColumnKind::kSrcEntity},
      {"sport", ColumnKind::kIgnore},       {"dstip", ColumnKind::kDstEntity},
      {"dsport", ColumnKind::kDstEntity},   {"proto", ColumnKind::kCategorical},
      {"state", ColumnKind::kCategorical},  {"dur", ColumnKind::kContinuous},
      {"sbytes", ColumnKind::kContinuous},  {"dbytes", ColumnKind::kContinuous},
      {"sttl", ColumnKind::kContinuous},    {"dttl", ColumnKind::kContinuous},
      {"spkts", ColumnKind::kContinuous},   {"dpkts", ColumnKind::kContinuous},
      {"service", ColumnKind::kCategorical}, {"smean", ColumnKind::kContinuous},
      {"dmean", ColumnKind::kContinuous},   {"sload", ColumnKind::kContinuous},
      {"attack_cat", ColumnKind::kLabel},
  };
  s.classes = kGeneratedClasses;
  return s;
}

GeneratedData generate(const ScenarioSpec& spec) {
  spec.validate();
  return Generator(spec).run();
}

void write_generated(const std::filesystem::path& dir, const GeneratedData& data) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "flows.csv", std::ios::binary);
  std::ofstream schema(dir / "schema.txt");
  if (!csv || !schema) throw DataError("cannot write into " + dir.string());
  csv << data.csv;
  schema << "# generated flow schema\n" << data.schema.to_text();
  if (!csv || !schema) throw DataError("write failed in " + dir.string());
}

}  // namespace hids
