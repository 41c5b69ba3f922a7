#include "neurobit/neural/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace neurobit::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[16] = {'N', 'E', 'U', 'R', 'O', 'B', 'I', 'T',
                             '-', 'C', 'K', 'P', 'T', '\0', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

json network_config_to_json(const NetworkConfig& cfg) {
  json j;
  j["conv_filters"] = cfg.conv_filters;
  j["td_dense_units"] = cfg.td_dense_units;
  j["kind"] = cfg.recurrent_kind == RecurrentKind::GRU ? "GRU" : "LSTM";
  j["recurrent_units"] = cfg.recurrent_units;
  j["dropout"] = cfg.dropout;
  j["n_classes"] = cfg.n_classes;
  j["windows"] = cfg.windows;
  j["mesh_rows"] = cfg.mesh_rows;
  j["mesh_cols"] = cfg.mesh_cols;
  j["window_len"] = cfg.window_len;
  return j;
}

NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig cfg;
  cfg.conv_filters = j.at("conv_filters").get<std::vector<std::size_t>>();
  cfg.td_dense_units = j.value("td_dense_units", std::size_t(128));
  const std::string kind = j.value("kind", "GRU");
  if (kind == "GRU") cfg.recurrent_kind = RecurrentKind::GRU;
  else if (kind == "LSTM") cfg.recurrent_kind = RecurrentKind::LSTM;
  else throw std::invalid_argument("unknown recurrent kind: " + kind);
  cfg.recurrent_units = j.at("recurrent_units").get<std::vector<std::size_t>>();
  cfg.dropout = j.value("dropout", 0.3);
  cfg.n_classes = j.at("n_classes").get<std::size_t>();
  cfg.windows = j.value("windows", std::size_t(10));
  cfg.mesh_rows = j.value("mesh_rows", std::size_t(9));
  cfg.mesh_cols = j.value("mesh_cols", std::size_t(9));
  cfg.window_len = j.value("window_len", std::size_t(128));
  cfg.validate();
  return cfg;
}

void save_checkpoint_blob(const std::string& path, const CheckpointBlob& blob) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  f.write(kMagic, 16);
  const std::uint32_t version = kVersion;
  f.write(reinterpret_cast<const char*>(&version), 4);
  json header = blob.header;
  header["kind"] = blob.kind;
  const std::string hs = header.dump();
  const std::uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  const std::uint64_t plen = blob.payload.size();
  f.write(reinterpret_cast<const char*>(&plen), 8);
  f.write(reinterpret_cast<const char*>(blob.payload.data()),
          static_cast<std::streamsize>(plen * sizeof(float)));
}

CheckpointBlob load_checkpoint_blob(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[16];
  f.read(magic, 16);
  if (!f || std::memcmp(magic, kMagic, 16) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), 4);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  CheckpointBlob blob;
  blob.header = json::parse(hs);
  blob.kind = blob.header.value("kind", "");
  std::uint64_t plen = 0;
  f.read(reinterpret_cast<char*>(&plen), 8);
  blob.payload.resize(plen);
  f.read(reinterpret_cast<char*>(blob.payload.data()),
         static_cast<std::streamsize>(plen * sizeof(float)));
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  return blob;
}

void save_network(const std::string& path, const Network<float>& net,
                  std::uint64_t seed, std::size_t epoch) {
  CheckpointBlob blob;
  blob.kind = "network";
  blob.header["config"] = network_config_to_json(net.config());
  blob.header["seed"] = seed;
  blob.header["epoch"] = epoch;
  for (const auto& p : net.params()) {
    blob.payload.insert(blob.payload.end(), p.value, p.value + p.size);
  }
  for (const auto* s : const_cast<Network<float>&>(net).batchnorm_state()) {
    blob.payload.insert(blob.payload.end(), s->begin(), s->end());
  }
  save_checkpoint_blob(path, blob);
}

Network<float> load_network(const std::string& path) {
  const CheckpointBlob blob = load_checkpoint_blob(path);
  if (blob.kind != "network") throw std::runtime_error("checkpoint kind is not 'network'");
  const NetworkConfig cfg = network_config_from_json(blob.header.at("config"));
  Network<float> net(cfg, 0);
  std::size_t off = 0;
  for (auto& p : net.params()) {
    if (off + p.size > blob.payload.size()) throw std::runtime_error("checkpoint payload too short");
    std::copy(blob.payload.begin() + static_cast<std::ptrdiff_t>(off),
              blob.payload.begin() + static_cast<std::ptrdiff_t>(off + p.size), p.value);
    off += p.size;
  }
  for (auto* s : net.batchnorm_state()) {
    if (off + s->size() > blob.payload.size()) throw std::runtime_error("checkpoint payload too short");
    std::copy(blob.payload.begin() + static_cast<std::ptrdiff_t>(off),
              blob.payload.begin() + static_cast<std::ptrdiff_t>(off + s->size()), s->begin());
    off += s->size();
  }
  if (off != blob.payload.size()) throw std::runtime_error("checkpoint payload size mismatch");
  return net;
}

}  // namespace neurobit::nn
