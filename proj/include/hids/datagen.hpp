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

// Labeled synthetic flow corpora with planted attacks.
//
// Background traffic runs from internal hosts to a fixed set of service
// endpoints as a Poisson process; bytes and durations are log-normal. Each
// planted attack adds its own flows at `intensity` times the background rate
// for its interval:
//   ddos             many external sources -> one service endpoint, small
//                    payloads, mostly unfinished handshakes
//   port_scan        one source -> one host across ascending ports, short
//                    rejected connections
//   exfiltration     one internal host -> one external endpoint, large
//                    outbound transfers
//   backdoor_beacon  one internal host -> one external endpoint, small flows
//                    at a fixed interval
// The output uses UNSW-NB15 style column names.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hids/schema.hpp"

namespace hids {

enum class AttackType { kDdos, kPortScan, kExfiltration, kBackdoorBeacon };

std::string_view to_string(AttackType t);
AttackType parse_attack_type(std::string_view name);

struct AttackSpec {
  AttackType type = AttackType::kDdos;
  double start = 0.0;
  double duration = 0.0;
  double intensity = 1.0;
  // Victim (ddos: "ip:port" endpoint, port_scan: host ip) or compromised host
  // (exfiltration, backdoor_beacon: host ip). Chosen from the seed if unset.
  std::optional<std::string> target;
};

struct ScenarioSpec {
  double duration = 1200.0;        // seconds
  double background_rate = 10.0;   // flows per second
  std::size_t entity_count = 60;   // internal hosts
  std::vector<AttackSpec> attacks;
  std::uint64_t seed = 1;
  double missing_rate = 0.0;  // share of continuous cells left blank

  /// Throws ConfigError on non-positive rates or durations, an attack
  /// outside [0, duration], or fewer than 4 hosts.
  void validate() const;

  /// `key = value` lines; each `attack = <type> start=<s> duration=<s>
  /// intensity=<x> [target=<id>]` line adds one attack.
  static ScenarioSpec from_text(std::string_view text);
  std::string to_text() const;
};

/// The four archetypes at desk scale: about 20k flows over 20 minutes.
ScenarioSpec default_scenario(std::uint64_t seed = 1);

inline const std::vector<std::string> kGeneratedClasses = {"Normal", "ddos", "port_scan",
                                                           "exfiltration", "backdoor_beacon"};

struct GeneratedData {
  std::string csv;
  SchemaSpec schema;
  std::map<std::string, std::size_t> label_counts;
  std::vector<std::string> warnings;
  std::size_t flows = 0;
};

SchemaSpec generated_schema();

/// Deterministic for a given spec. Overlapping attacks of the same type on the
/// same target are merged into one interval (largest intensity) with a
/// warning.
GeneratedData generate(const ScenarioSpec& spec);

/// Writes `flows.csv` and `schema.txt` into `dir`.
void write_generated(const std::filesystem::path& dir, const GeneratedData& data);

}  // namespace hids
