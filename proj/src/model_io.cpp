// src/model_io.cpp
// Copyright 2026 The mcenhance Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mcenhance/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "mcenhance/error.hpp"
#include "mcenhance/fileutil.hpp"

namespace mcenhance::nn {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'C', 'E', 'N'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  std::memcpy(&v, p, 4);
  return v;
}

void put_doubles(std::vector<unsigned char>& out, const double* data, std::size_t n) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  out.insert(out.end(), bytes, bytes + n * sizeof(double));
}

nlohmann::json vector_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

[[noreturn]] void corrupt(const std::string& why) { fail(ErrorCode::CorruptFile, "model file: " + why); }

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
    case Activation::Softmax: return "softmax";
  }
  return "relu";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  if (s == "softmax") return Activation::Softmax;
  corrupt("unknown activation '" + s + "'");
}

std::vector<unsigned char> serialize_model(const MlpModel& model) {
  model.validate();
  nlohmann::json h;
  h["layer_dims"] = model.layer_dims;
  h["hidden_activation"] = to_string(model.hidden_activation);
  h["output_activation"] = to_string(model.output_activation);
  h["keep_prob"] = model.dropout.keep_prob;
  h["weight_decay"] = model.meta.weight_decay;
  h["n_train_frames"] = model.meta.n_train_frames;
  h["seed"] = model.meta.seed;
  h["noise_label"] = model.meta.noise_label;
  h["kind"] = model.meta.kind;
  h["class_labels"] = model.meta.class_labels;
  nlohmann::json in;
  in["compress"] = model.input.compress == InputCompress::Log1p ? "log1p" : "none";
  in["norm"] = model.input.norm == InputNorm::ZScore ? "zscore" : "none";
  if (model.input.norm == InputNorm::ZScore) {
    in["mean"] = vector_json(model.input.mean);
    in["inv_std"] = vector_json(model.input.inv_std);
  }
  h["input"] = in;
  const std::string header = h.dump();

  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    put_doubles(out, model.weights[l].data(), static_cast<std::size_t>(model.weights[l].size()));
    put_doubles(out, model.biases[l].data(), static_cast<std::size_t>(model.biases[l].size()));
  }
  return out;
}

MlpModel deserialize_model(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12) corrupt("truncated preamble");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt("bad magic");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kModelFormatVersion) {
    fail(ErrorCode::VersionMismatch, "model format version " + std::to_string(version) + ", expected " +
                                         std::to_string(kModelFormatVersion));
  }
  const std::uint32_t header_len = get_u32(bytes.data() + 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(header_len)) corrupt("truncated header");

  MlpModel m;
  try {
    const auto h = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
    m.layer_dims = h.at("layer_dims").get<std::vector<int>>();
    m.hidden_activation = activation_from_string(h.at("hidden_activation").get<std::string>());
    m.output_activation = activation_from_string(h.at("output_activation").get<std::string>());
    m.dropout.keep_prob = h.at("keep_prob").get<double>();
    m.meta.weight_decay = h.at("weight_decay").get<double>();
    m.meta.n_train_frames = h.at("n_train_frames").get<std::uint64_t>();
    m.meta.seed = h.at("seed").get<std::uint64_t>();
    m.meta.noise_label = h.at("noise_label").get<std::string>();
    m.meta.kind = h.at("kind").get<std::string>();
    m.meta.class_labels = h.at("class_labels").get<std::vector<std::string>>();
    const auto& in = h.at("input");
    m.input.compress = in.at("compress").get<std::string>() == "log1p" ? InputCompress::Log1p : InputCompress::None;
    m.input.norm = in.at("norm").get<std::string>() == "zscore" ? InputNorm::ZScore : InputNorm::None;
    if (m.input.norm == InputNorm::ZScore) {
      m.input.mean = vector_from_json(in.at("mean"));
      m.input.inv_std = vector_from_json(in.at("inv_std"));
    }
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("header: ") + e.what());
  }
  if (m.layer_dims.size() < 2) corrupt("layer_dims too short");

  std::size_t expected = 0;
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    if (m.layer_dims[l] <= 0 || m.layer_dims[l + 1] <= 0) corrupt("non-positive layer dim");
    expected += static_cast<std::size_t>(m.layer_dims[l + 1]) * (static_cast<std::size_t>(m.layer_dims[l]) + 1);
  }
  const std::size_t offset = 12 + header_len;
  if (bytes.size() - offset != expected * sizeof(double)) corrupt("payload size does not match header");

  const unsigned char* p = bytes.data() + offset;
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    Matrix w(m.layer_dims[l + 1], m.layer_dims[l]);
    Vector b(m.layer_dims[l + 1]);
    std::memcpy(w.data(), p, static_cast<std::size_t>(w.size()) * sizeof(double));
    p += static_cast<std::size_t>(w.size()) * sizeof(double);
    std::memcpy(b.data(), p, static_cast<std::size_t>(b.size()) * sizeof(double));
    p += static_cast<std::size_t>(b.size()) * sizeof(double);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  try {
    m.validate();
  } catch (const Error& e) {
    corrupt(e.what());
  }
  return m;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

MlpModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file_bytes(path));
}

}  // namespace mcenhance::nn
