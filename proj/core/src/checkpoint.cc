// Copyright 2026 The Endgate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "endgate/checkpoint.h"

#include <sstream>

#include "endgate/errors.h"
#include "endgate/io.h"

namespace endgate {

namespace {

constexpr std::string_view kMagic = "endgate-checkpoint 1";

}  // namespace

const nn::Tensor& Checkpoint::Get(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw ParseError("checkpoint has no tensor '" + name + "'");
}

const std::string& Checkpoint::Arch(const std::string& key) const {
  auto it = arch.find(key);
  if (it == arch.end()) {
    throw ParseError("checkpoint has no arch entry '" + key + "'");
  }
  return it->second;
}

std::string SerializeCheckpoint(const Checkpoint& checkpoint) {
  std::ostringstream out;
  out << kMagic << '\n';
  out << "kind " << checkpoint.kind << '\n';
  out << "seed " << checkpoint.seed << '\n';
  for (const auto& [k, v] : checkpoint.arch) out << "arch " << k << ' ' << v << '\n';
  std::size_t total = 0;
  for (const auto& [name, t] : checkpoint.tensors) {
    out << "tensor " << name;
    for (std::size_t d : t.shape()) out << ' ' << d;
    out << '\n';
    total += t.size();
  }
  out << "payload " << total << '\n';
  for (const auto& [name, t] : checkpoint.tensors) {
    io::WriteDoublesLE(out, t.data());
  }
  return out.str();
}

Checkpoint ParseCheckpoint(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError("checkpoint line " + std::to_string(line_no) + ": " +
                      what);
  };
  if (!std::getline(in, line) || (++line_no, line != kMagic)) {
    throw ParseError("checkpoint line 1: bad magic");
  }
  Checkpoint ckpt;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> shapes;
  std::size_t payload = 0;
  bool have_payload = false;
  while (!have_payload && std::getline(in, line)) {
    ++line_no;
    auto fields = io::SplitWhitespace(line);
    if (fields.empty()) throw fail("empty header line");
    try {
      if (fields[0] == "kind" && fields.size() == 2) {
        ckpt.kind = std::string(fields[1]);
      } else if (fields[0] == "seed" && fields.size() == 2) {
        ckpt.seed = io::ParseUint(fields[1]);
      } else if (fields[0] == "arch" && fields.size() == 3) {
        ckpt.arch[std::string(fields[1])] = std::string(fields[2]);
      } else if (fields[0] == "tensor" && fields.size() >= 2) {
        std::vector<std::size_t> shape;
        for (std::size_t i = 2; i < fields.size(); ++i) {
          shape.push_back(io::ParseUint(fields[i]));
        }
        shapes.emplace_back(std::string(fields[1]), std::move(shape));
      } else if (fields[0] == "payload" && fields.size() == 2) {
        payload = io::ParseUint(fields[1]);
        have_payload = true;
      } else {
        throw fail("unrecognized header record '" + line + "'");
      }
    } catch (const ParseError& e) {
      if (std::string(e.what()).rfind("checkpoint line", 0) == 0) throw;
      throw fail(e.what());
    }
  }
  if (!have_payload) throw fail("missing payload record");
  std::size_t expected = 0;
  for (const auto& [name, shape] : shapes) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    expected += n;
  }
  if (expected != payload) throw fail("payload count disagrees with shapes");
  for (auto& [name, shape] : shapes) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    ckpt.tensors.emplace_back(name,
                              nn::Tensor(shape, io::ReadDoublesLE(in, n)));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("checkpoint has trailing bytes after payload");
  }
  return ckpt;
}

void WriteCheckpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
  io::WriteFileAtomic(path, SerializeCheckpoint(checkpoint));
}

Checkpoint ReadCheckpoint(const std::filesystem::path& path) {
  return ParseCheckpoint(io::ReadFile(path));
}

void AddMlp(Checkpoint* checkpoint, const std::string& prefix,
            const nn::Mlp& mlp) {
  checkpoint->arch[prefix + ".layers"] = std::to_string(mlp.num_layers());
  for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
    const nn::DenseLayer& layer = mlp.layers()[i];
    const std::string base = prefix + "." + std::to_string(i);
    checkpoint->arch[base + ".act"] =
        std::string(nn::ActivationName(layer.activation));
    checkpoint->tensors.emplace_back(base + ".w", layer.weights);
    checkpoint->tensors.emplace_back(base + ".b", layer.bias);
  }
}

nn::Mlp GetMlp(const Checkpoint& checkpoint, const std::string& prefix) {
  const std::size_t n = io::ParseUint(checkpoint.Arch(prefix + ".layers"));
  std::vector<nn::DenseLayer> layers;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string base = prefix + "." + std::to_string(i);
    layers.emplace_back(checkpoint.Get(base + ".w"), checkpoint.Get(base + ".b"),
                        nn::ParseActivation(checkpoint.Arch(base + ".act")));
    if (!layers.back().weights.AllFinite() || !layers.back().bias.AllFinite()) {
      throw ParseError("checkpoint tensor '" + base + "' is not finite");
    }
  }
  return nn::Mlp(std::move(layers));
}

}  // namespace endgate
