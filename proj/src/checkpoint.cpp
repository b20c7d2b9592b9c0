#include "vitk/checkpoint.hpp"

#include <json.hpp>

#include "binary_io.hpp"
#include "vitk/errors.hpp"
#include "vitk/run_config.hpp"

namespace vitk {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "vitk-checkpoint";

json history_to_json(const std::vector<EpochLog>& history) {
  json rows = json::array();
  for (const auto& e : history) {
    rows.push_back({e.epoch, e.lr, e.total, e.loss_u1, e.loss_u2, e.loss_p, e.loss_phi, e.loss_lin});
  }
  return rows;
}

std::vector<EpochLog> history_from_json(const json& rows) {
  std::vector<EpochLog> out;
  for (const auto& r : rows) {
    if (!r.is_array() || r.size() != 8) throw CorruptionError("checkpoint history row is malformed");
    out.push_back({r[0].get<int>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>(),
                   r[4].get<double>(), r[5].get<double>(), r[6].get<double>(), r[7].get<double>()});
  }
  return out;
}

}  // namespace

void round_to_storage_precision(KoopmanModel& model) {
  for (auto& p : model.parameters()) {
    p.value = p.value.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json index;
  index["format"] = kFormat;
  index["version"] = kCheckpointVersion;
  index["dtype"] = "f32";
  index["endianness"] = "little";
  index["layout"] = "column-major";
  index["model"] = to_json(ckpt.model.config());
  index["generator_mode"] = to_string(ckpt.model.config().generator_mode);
  index["train"] = to_json(ckpt.train);
  index["weights"] = to_json(ckpt.weights);
  index["loss"] = to_json(ckpt.loss);
  index["example_id"] = to_string(ckpt.example_id);
  index["t0"] = ckpt.t0;
  index["dt"] = ckpt.dt;
  index["train_horizon"] = ckpt.train_horizon;
  index["norm_scale"] = ckpt.norm_stats.scale;
  index["norm_zero_channel"] = ckpt.norm_stats.zero_channel;
  std::string mask;
  for (auto m : ckpt.model.mask()) mask.push_back(m ? '1' : '0');
  index["mask"] = mask;
  index["history"] = history_to_json(ckpt.history);

  std::vector<char> blob;
  json tensors = json::array();
  for (const auto& p : ckpt.model.parameters()) {
    tensors.push_back({{"name", p.name},
                       {"shape", {p.value.rows(), p.value.cols()}},
                       {"dtype", "f32"},
                       {"offset", blob.size()}});
    for (Eigen::Index i = 0; i < p.value.size(); ++i) detail::append_f32_le(blob, p.value.data()[i]);
  }
  index["tensors"] = tensors;
  index["blob_bytes"] = blob.size();

  detail::atomic_write(dir / "ckpt.f32", blob);
  detail::atomic_write(dir / "ckpt.json", index.dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto index_path = dir / "ckpt.json";
  const auto blob_path = dir / "ckpt.f32";
  if (!std::filesystem::exists(index_path)) throw CorruptionError("no checkpoint index at " + index_path.string());
  const std::vector<char> text = detail::read_all(index_path);
  const std::vector<char> blob = detail::read_all(blob_path);

  json index;
  try {
    index = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw CorruptionError("checkpoint index " + index_path.string() + " is not valid JSON: " + e.what());
  }
  try {
    if (index.value("format", "") != kFormat) throw CorruptionError("not a checkpoint index: " + index_path.string());
    const int version = index.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CorruptionError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    if (index.at("dtype").get<std::string>() != "f32") throw CorruptionError("unsupported checkpoint dtype");
    const auto blob_bytes = index.at("blob_bytes").get<std::size_t>();
    if (blob.size() != blob_bytes) {
      throw CorruptionError("checkpoint blob has " + std::to_string(blob.size()) + " bytes, index expects " +
                            std::to_string(blob_bytes));
    }

    ModelConfig config = model_config_from_json(index.at("model"));
    const auto mask_text = index.at("mask").get<std::string>();
    std::vector<std::uint8_t> mask;
    for (char ch : mask_text) {
      if (ch != '0' && ch != '1') throw CorruptionError("checkpoint mask is malformed");
      mask.push_back(ch == '1' ? 1 : 0);
    }

    std::vector<ad::Parameter> tensors;
    for (const auto& t : index.at("tensors")) {
      ad::Parameter p;
      p.name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<long>>();
      const auto offset = t.at("offset").get<std::size_t>();
      if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw CorruptionError("bad shape for " + p.name);
      const auto count = static_cast<std::size_t>(shape[0] * shape[1]);
      if (offset % 4 != 0 || offset + 4 * count > blob.size()) {
        throw CorruptionError("tensor '" + p.name + "' lies outside the checkpoint blob");
      }
      p.value.resize(shape[0], shape[1]);
      for (std::size_t i = 0; i < count; ++i) p.value.data()[i] = detail::read_f32_le(blob.data() + offset + 4 * i);
      tensors.push_back(std::move(p));
    }

    Checkpoint ckpt;
    ckpt.model = KoopmanModel::from_tensors(config, std::move(mask), std::move(tensors));
    ckpt.train = train_config_from_json(index.at("train"));
    ckpt.weights = loss_weights_from_json(index.at("weights"));
    ckpt.loss = loss_options_from_json(index.at("loss"));
    ckpt.example_id = parse_example_id(index.at("example_id").get<std::string>());
    ckpt.t0 = index.at("t0").get<double>();
    ckpt.dt = index.at("dt").get<double>();
    ckpt.train_horizon = index.at("train_horizon").get<double>();
    ckpt.norm_stats.scale = index.at("norm_scale").get<std::array<double, kPhysicalChannels>>();
    ckpt.norm_stats.zero_channel = index.at("norm_zero_channel").get<std::array<bool, kPhysicalChannels>>();
    ckpt.history = history_from_json(index.at("history"));
    return ckpt;
  } catch (const json::exception& e) {
    throw CorruptionError("checkpoint index " + index_path.string() + " is incomplete: " + e.what());
  } catch (const ConfigError& e) {
    throw CorruptionError("checkpoint index " + index_path.string() + " has an invalid config: " + e.what());
  }
}

}  // namespace vitk
