#include "mamp/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mamp/error.hpp"

namespace mamp {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'M', 'P', 'C', 'K', 'P', '1'};

nlohmann::json arch_to_json(const ArchConfig& a) {
  return nlohmann::json{
      {"joints", a.joints},
      {"channels", a.channels},
      {"segment_len", a.segment_len},
      {"seq_len", a.seq_len},
      {"embed_dim", a.embed_dim},
      {"encoder_depth", a.encoder_depth},
      {"decoder_depth", a.decoder_depth},
      {"decoder_dim", a.decoder_dim},
      {"heads", a.heads},
      {"mlp_hidden", a.mlp_hidden},
      {"mask_ratio", a.mask_ratio},
      {"target_stride", a.target_stride},
      {"target_padding", to_string(a.target_padding)},
      {"input_stream", to_string(a.input_stream)},
      {"target_stream", to_string(a.target_stream)},
      {"dropout", a.dropout},
  };
}

ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig a;
  a.joints = j.at("joints").get<std::size_t>();
  a.channels = j.at("channels").get<std::size_t>();
  a.segment_len = j.at("segment_len").get<std::size_t>();
  a.seq_len = j.at("seq_len").get<std::size_t>();
  a.embed_dim = j.at("embed_dim").get<std::size_t>();
  a.encoder_depth = j.at("encoder_depth").get<std::size_t>();
  a.decoder_depth = j.at("decoder_depth").get<std::size_t>();
  a.decoder_dim = j.at("decoder_dim").get<std::size_t>();
  a.heads = j.at("heads").get<std::size_t>();
  a.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  a.mask_ratio = j.at("mask_ratio").get<double>();
  a.target_stride = j.at("target_stride").get<std::size_t>();
  a.target_padding = padding_from_string(j.at("target_padding").get<std::string>());
  a.input_stream = stream_from_string(j.at("input_stream").get<std::string>());
  a.target_stream = stream_from_string(j.at("target_stream").get<std::string>());
  a.dropout = j.at("dropout").get<double>();
  return a;
}

void write_doubles(std::ofstream& out, const DenseArray& a) {
  out.write(reinterpret_cast<const char*>(a.data()),
            static_cast<std::streamsize>(a.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, DenseArray& a, const std::string& path) {
  in.read(reinterpret_cast<char*>(a.data()),
          static_cast<std::streamsize>(a.size() * sizeof(double)));
  if (!in) throw DataError("checkpoint truncated while reading arrays: " + path);
}

}  // namespace

void save_checkpoint(const std::string& path, ModelParams& params, std::uint64_t seed,
                     std::uint64_t schedule_step, const AdamW* optimizer) {
  const auto all = params.all();

  nlohmann::json header;
  header["format"] = 1;
  header["arch"] = arch_to_json(params.cfg);
  header["seed"] = seed;
  header["schedule_step"] = schedule_step;
  nlohmann::json manifest = nlohmann::json::array();
  for (const Parameter* p : all) {
    manifest.push_back({{"name", p->name()}, {"shape", p->value().shape()}});
  }
  header["params"] = manifest;
  if (optimizer) {
    if (optimizer->slots().size() != all.size()) {
      throw ContractViolation("save_checkpoint: optimizer covers " +
                              std::to_string(optimizer->slots().size()) + " of " +
                              std::to_string(all.size()) + " parameters");
    }
    const auto& oc = optimizer->config();
    header["optimizer"] = {{"beta1", oc.beta1},
                           {"beta2", oc.beta2},
                           {"eps", oc.eps},
                           {"weight_decay", oc.weight_decay},
                           {"step_count", optimizer->step_count()}};
  }
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const Parameter* p : all) write_doubles(out, p->value());
  if (optimizer) {
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto& slot = optimizer->slots()[i];
      if (slot.param != all[i]) {
        throw ContractViolation("save_checkpoint: optimizer slot order differs from "
                                "parameter order at " + all[i]->name());
      }
      write_doubles(out, slot.m);
      write_doubles(out, slot.v);
    }
  }
  if (!out) throw DataError("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw DataError("not a MAMP checkpoint (bad magic): " + path);
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  if (!in || header_len == 0 || header_len > (1ull << 30)) {
    throw DataError("checkpoint header length invalid: " + path);
  }
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("checkpoint truncated in header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint header is not valid JSON: " + path + " (" + e.what() + ")");
  }

  LoadedCheckpoint ckpt{ModelParams(arch_from_json(header.at("arch")), 0),
                        header.at("seed").get<std::uint64_t>(),
                        header.at("schedule_step").get<std::uint64_t>(),
                        false,
                        AdamWConfig{},
                        0,
                        {}};

  const auto all = ckpt.params.all();
  const auto& manifest = header.at("params");
  if (manifest.size() != all.size()) {
    throw DataError("checkpoint lists " + std::to_string(manifest.size()) +
                    " parameters, architecture defines " + std::to_string(all.size()));
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& entry = manifest[i];
    if (entry.at("name").get<std::string>() != all[i]->name()) {
      throw DataError("checkpoint parameter order mismatch at index " + std::to_string(i) +
                      ": " + entry.at("name").get<std::string>() + " vs " + all[i]->name());
    }
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape != all[i]->value().shape()) {
      throw DataError("checkpoint shape mismatch for " + all[i]->name());
    }
  }
  for (Parameter* p : all) read_doubles(in, p->value(), path);

  if (header.contains("optimizer")) {
    ckpt.has_optimizer = true;
    const auto& oj = header.at("optimizer");
    ckpt.optimizer_config.beta1 = oj.at("beta1").get<double>();
    ckpt.optimizer_config.beta2 = oj.at("beta2").get<double>();
    ckpt.optimizer_config.eps = oj.at("eps").get<double>();
    ckpt.optimizer_config.weight_decay = oj.at("weight_decay").get<double>();
    ckpt.optimizer_step_count = oj.at("step_count").get<std::size_t>();
    ckpt.moments.reserve(all.size());
    for (Parameter* p : all) {
      DenseArray m(p->value().shape());
      DenseArray v(p->value().shape());
      read_doubles(in, m, path);
      read_doubles(in, v, path);
      ckpt.moments.emplace_back(std::move(m), std::move(v));
    }
  }
  return ckpt;
}

void restore_optimizer(LoadedCheckpoint& ckpt, AdamW& opt) {
  if (!ckpt.has_optimizer) {
    throw ContractViolation("restore_optimizer: checkpoint has no optimizer state");
  }
  const auto all = ckpt.params.all();
  for (Parameter* p : all) opt.attach(*p);
  for (std::size_t i = 0; i < all.size(); ++i) {
    opt.slots()[i].m = ckpt.moments[i].first;
    opt.slots()[i].v = ckpt.moments[i].second;
  }
  opt.set_step_count(ckpt.optimizer_step_count);
}

}  // namespace mamp
