#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "prgc/data.hpp"
#include "prgc/train.hpp"

namespace prgc {

/// Checkpoint file layout: 8-byte magic, little-endian u64 header length, a
/// JSON header (config snapshot, epoch, RNG state, tensor table), then the
/// tensor payload as raw doubles in header order. Raw doubles make reloads
/// reproduce forward outputs bit for bit.
namespace ckpt {

constexpr char kMagic[8] = {'P', 'R', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr int kVersion = 1;

inline void write_u64(std::ostream& os, std::uint64_t x) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline std::uint64_t read_u64(std::istream& is) {
  char b[8];
  is.read(b, 8);
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i)
    x |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return x;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return nlohmann::json{{"encoder_lr", c.encoder_lr},
                        {"decoder_lr", c.decoder_lr},
                        {"weight_decay", c.weight_decay},
                        {"batch_size", c.batch_size},
                        {"epochs", c.epochs},
                        {"alpha", c.alpha},
                        {"beta", c.beta},
                        {"gamma", c.gamma},
                        {"seed", c.seed},
                        {"negative_relation_samples", c.negative_relation_samples},
                        {"clip_norm", c.clip_norm},
                        {"keep_best", c.keep_best},
                        {"lambda1", c.lambda1},
                        {"lambda2", c.lambda2},
                        {"eval_mode", to_string(c.eval_mode)}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.encoder_lr = j.at("encoder_lr").get<double>();
  c.decoder_lr = j.at("decoder_lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.negative_relation_samples = j.at("negative_relation_samples").get<int>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.keep_best = j.at("keep_best").get<bool>();
  c.lambda1 = j.at("lambda1").get<double>();
  c.lambda2 = j.at("lambda2").get<double>();
  c.eval_mode = span_mode_from(j.at("eval_mode").get<std::string>());
  return c;
}

} // namespace ckpt

inline void save_checkpoint(const std::string& path, Checkpoint& checkpoint) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open for writing: " + path);

  Model& m = checkpoint.model;
  std::vector<ParamRef> params = m.parameters();

  nlohmann::json header;
  header["format"] = "prgc-checkpoint";
  header["version"] = ckpt::kVersion;
  header["epoch"] = checkpoint.epoch;
  header["rng_state"] = checkpoint.rng_state;
  header["tagging"] = to_string(m.decoder.mode);
  header["encoder"] = {{"d", m.encoder.config().d},
                       {"layers", m.encoder.config().layers},
                       {"max_len", m.encoder.config().max_len},
                       {"arch", m.encoder.config().arch},
                       {"vocab", m.encoder.vocab().tokens()}};
  header["relations"] = m.relations.names();
  header["train_config"] = ckpt::train_config_to_json(checkpoint.config);
  nlohmann::json tensors = nlohmann::json::array();
  for (const ParamRef& p : params)
    tensors.push_back({{"name", p.name}, {"rows", p.tensor->rows()}, {"cols", p.tensor->cols()}});
  header["tensors"] = tensors;

  std::string header_str = header.dump();
  os.write(ckpt::kMagic, 8);
  ckpt::write_u64(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const ParamRef& p : params)
    os.write(reinterpret_cast<const char*>(p.tensor->data()),
             static_cast<std::streamsize>(p.tensor->size() * sizeof(double)));
  if (!os) throw CheckpointError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, ckpt::kMagic, 8) != 0)
    throw CheckpointError(path + " is not a checkpoint file (bad magic)");
  std::uint64_t header_len = ckpt::read_u64(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw CheckpointError(path + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": malformed header: " + e.what());
  }
  if (header.value("version", -1) != ckpt::kVersion)
    throw CheckpointError(path + ": unsupported checkpoint version " +
                          header.value("version", nlohmann::json()).dump() + ", expected " +
                          std::to_string(ckpt::kVersion));

  Checkpoint out;
  out.epoch = header.at("epoch").get<int>();
  out.rng_state = header.at("rng_state").get<std::string>();
  out.config = ckpt::train_config_from_json(header.at("train_config"));

  EncoderConfig enc_cfg;
  enc_cfg.d = header.at("encoder").at("d").get<int>();
  enc_cfg.layers = header.at("encoder").at("layers").get<int>();
  enc_cfg.max_len = header.at("encoder").at("max_len").get<int>();
  enc_cfg.arch = header.at("encoder").at("arch").get<std::string>();
  Vocab vocab(header.at("encoder").at("vocab").get<std::vector<std::string>>());
  RelationSet relations(header.at("relations").get<std::vector<std::string>>());
  TaggingMode tagging = tagging_mode_from(header.at("tagging").get<std::string>());

  Rng scratch(0); // shapes come from config; every value is overwritten below
  out.model = Model(enc_cfg, std::move(vocab), std::move(relations), tagging, scratch);

  std::vector<ParamRef> params = out.model.parameters();
  const nlohmann::json& tensors = header.at("tensors");
  if (tensors.size() != params.size())
    throw CheckpointError(path + ": tensor table has " + std::to_string(tensors.size()) +
                          " entries, model expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const nlohmann::json& t = tensors[i];
    if (t.at("name").get<std::string>() != params[i].name ||
        t.at("rows").get<int>() != params[i].tensor->rows() ||
        t.at("cols").get<int>() != params[i].tensor->cols())
      throw CheckpointError(path + ": tensor '" + t.at("name").get<std::string>() +
                            "' does not match model layout");
    is.read(reinterpret_cast<char*>(params[i].tensor->data()),
            static_cast<std::streamsize>(params[i].tensor->size() * sizeof(double)));
    if (!is) throw CheckpointError(path + ": truncated tensor payload");
  }
  return out;
}

} // namespace prgc
