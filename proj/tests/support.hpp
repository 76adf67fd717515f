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

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "hids/autograd.hpp"
#include "hids/graph.hpp"
#include "hids/model.hpp"
#include "hids/random.hpp"

namespace hids::testing {

/// A per-process path under the temp directory, so parallel test runs do not collide.
inline std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / (name + "." + std::to_string(::getpid()));
}

/// Central differences of the scalar `f` with respect to every entry of `t`.
inline ag::Matrix numeric_grad(ag::Tensor& t, const std::function<double()>& f,
                               double h = 1e-5) {
  ag::Matrix g(t.value.rows(), t.value.cols());
  for (ag::Index i = 0; i < t.value.size(); ++i) {
    double& x = t.value.data()[i];
    const double saved = x;
    x = saved + h;
    const double up = f();
    x = saved - h;
    const double down = f();
    x = saved;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

inline double max_relative_error(const ag::Matrix& a, const ag::Matrix& n) {
  double worst = 0.0;
  for (ag::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, relative_error(a.data()[i], n.data()[i]));
  }
  return worst;
}

inline ag::Matrix random_matrix(Rng& rng, ag::Index rows, ag::Index cols, double scale = 1.0) {
  ag::Matrix m(rows, cols);
  for (ag::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

/// Random directed 0/1 adjacency without self-loops.
inline ag::Matrix random_adjacency(Rng& rng, ag::Index n, double p = 0.4) {
  ag::Matrix a = ag::Matrix::Zero(n, n);
  for (ag::Index i = 0; i < n; ++i) {
    for (ag::Index j = 0; j < n; ++j) {
      if (i != j && rng.bernoulli(p)) a(i, j) = 1.0;
    }
  }
  return a;
}

/// |V|=4, T=5, gcn dims [8,4,2], hidden 3, one head of width 6.
inline ModelConfig tiny_config(Variant variant = Variant::kFull, std::size_t classes = 3) {
  ModelConfig c;
  c.node_features = 5;
  c.event_features = 4;
  c.gcn_dims = {8, 4, 2};
  c.lstm_layers = 2;
  c.lstm_hidden = 3;
  c.heads = 1;
  c.head_dim = 6;
  c.classes = classes;
  c.seq_len = 5;
  c.seed = 7;
  c.variant = variant;
  return c;
}

inline WindowInput random_window(Rng& rng, const ModelConfig& c, ag::Index nodes = 4) {
  WindowInput w;
  auto g = std::make_shared<GraphInput>();
  g->features = random_matrix(rng, nodes, static_cast<ag::Index>(c.node_features));
  g->adjacency = normalize_adjacency(random_adjacency(rng, nodes));
  w.graph = g;
  for (std::size_t t = 0; t < c.seq_len; ++t) {
    w.src.push_back(static_cast<ag::Index>(rng.index(static_cast<std::uint64_t>(nodes))));
    w.dst.push_back(static_cast<ag::Index>(rng.index(static_cast<std::uint64_t>(nodes))));
  }
  w.events = random_matrix(rng, static_cast<ag::Index>(c.seq_len),
                           static_cast<ag::Index>(c.event_features));
  return w;
}

inline std::vector<const WindowInput*> pointers(const std::vector<WindowInput>& windows) {
  std::vector<const WindowInput*> out;
  for (const auto& w : windows) out.push_back(&w);
  return out;
}

/// Two-class windows separated by a shift of every node and event feature.
struct Toy {
  std::vector<WindowInput> windows;
  std::vector<int> labels;
};

inline Toy separable_toy(std::uint64_t seed, const ModelConfig& c, std::size_t n) {
  Rng rng(seed);
  Toy toy;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    WindowInput w = random_window(rng, c, 3 + static_cast<ag::Index>(i % 3));
    const double shift = label ? 1.5 : -1.5;
    auto g = std::make_shared<GraphInput>(*w.graph);
    g->features = (0.3 * g->features).array() + shift;
    w.graph = g;
    w.events = (0.3 * w.events).array() + shift;
    toy.windows.push_back(std::move(w));
    toy.labels.push_back(label);
  }
  return toy;
}

}  // namespace hids::testing
