#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "evo/tensor.hpp"

namespace evo {

/// Named float32 tensors sharing a leading sample dimension, plus binary
/// labels stored under the tensor key "label".
struct Dataset {
  std::map<std::string, Tensor> tensors;
  std::size_t n_samples = 0;

  const Tensor& tensor(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end())
      throw EvalError("unknown dataset tensor '" + name + "'");
    return it->second;
  }

  bool has(const std::string& name) const { return tensors.count(name) > 0; }

  std::set<std::string> names() const {
    std::set<std::string> out;
    for (const auto& [k, _] : tensors) out.insert(k);
    return out;
  }

  /// Labels as doubles in {0,1}.
  std::vector<double> labels() const {
    const Tensor& t = tensor("label");
    std::vector<double> y(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) y[i] = t.at(i);
    return y;
  }

  void add(const std::string& name, Tensor t) {
    if (t.rank() == 0)
      throw EvalError("dataset tensor '" + name + "' must have rank >= 1");
    if (n_samples == 0)
      n_samples = t.dim(0);
    else if (t.dim(0) != n_samples)
      throw EvalError("dataset tensor '" + name +
                      "' leading dimension does not match n_samples");
    tensors[name] = std::move(t);
  }

  /// Structural checks: labels present and binary, masks 0/1-valued.
  void validate() const {
    if (!has("label")) throw EvalError("dataset has no 'label' tensor");
    const Tensor& y = tensor("label");
    if (y.rank() != 1)
      throw EvalError("'label' must be one value per sample");
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y.at(i) != 0.0f && y.at(i) != 1.0f)
        throw EvalError("labels must be 0 or 1");
      (y.at(i) == 1.0f ? pos : neg) = true;
    }
    if (!pos || !neg) throw EvalError("labels contain a single class");
    for (const auto& [name, t] : tensors) {
      if (name.size() > 5 && name.substr(name.size() - 5) == "_mask") {
        for (std::size_t i = 0; i < t.size(); ++i)
          if (t.at(i) != 0.0f && t.at(i) != 1.0f)
            throw EvalError("mask tensor '" + name +
                            "' contains values other than 0/1");
      }
    }
  }
};

/// On-disk layout: <dir>/manifest.json maps tensor name to {shape, dtype,
/// file}; each file holds little-endian float32 values in row-major order.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  for (const auto& [name, t] : ds.tensors) {
    const std::string file = name + ".bin";
    manifest["tensors"][name] = {
        {"shape", t.shape()}, {"dtype", "f32"}, {"file", file}};
    std::ofstream os(dir / file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / file).string());
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  std::ofstream os(dir / "manifest.json");
  if (!os)
    throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  os << manifest.dump(2) << "\n";
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is)
    throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
  nlohmann::json manifest = nlohmann::json::parse(is);
  if (!manifest.contains("tensors"))
    throw std::runtime_error("manifest has no 'tensors' mapping");
  Dataset ds;
  for (const auto& [name, spec] : manifest.at("tensors").items()) {
    if (spec.at("dtype").get<std::string>() != "f32")
      throw std::runtime_error("tensor '" + name + "': unsupported dtype");
    std::vector<std::size_t> shape =
        spec.at("shape").get<std::vector<std::size_t>>();
    const std::filesystem::path file =
        dir / spec.at("file").get<std::string>();
    std::ifstream bin(file, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open " + file.string());
    const std::size_t count = Tensor::count_of(shape);
    std::vector<float> data(count);
    bin.read(reinterpret_cast<char*>(data.data()),
             static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(bin.gcount()) != count * sizeof(float))
      throw std::runtime_error("tensor '" + name + "': file shorter than shape");
    ds.add(name, Tensor(std::move(shape), std::move(data)));
  }
  ds.validate();
  return ds;
}

}  // namespace evo
