#include "gld/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "gld/config.hpp"
#include "gld/error.hpp"

namespace gld {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'G', 'L', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr const char* kManifestName = "manifest.json";

std::uint32_t crc32_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_entry(std::string& out, const std::string& name, std::string_view payload) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put<std::uint64_t>(out, payload.size());
  put<std::uint32_t>(out, crc32_of(payload));
  out.append(payload);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)).data(), sizeof(T));
    return value;
  }

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw CheckpointError("checkpoint is truncated (checksum cannot be verified)");
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string encode_tensor(const Eigen::MatrixXd& m, bool f32) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * (f32 ? 4 : 8));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (f32) put<float>(out, static_cast<float>(m(r, c)));
      else put<double>(out, m(r, c));
    }
  }
  return out;
}

Eigen::MatrixXd decode_tensor(std::string_view payload, Eigen::Index rows, Eigen::Index cols, bool f32) {
  const std::size_t width = f32 ? 4 : 8;
  if (payload.size() != static_cast<std::size_t>(rows * cols) * width) {
    throw CheckpointError("tensor payload size does not match its manifest shape");
  }
  Eigen::MatrixXd m(rows, cols);
  Reader r(payload);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f32 ? static_cast<double>(r.get<float>()) : r.get<double>();
  }
  return m;
}

json history_to_json(const std::vector<EpochStats>& history) {
  json out = json::array();
  for (const auto& e : history) {
    out.push_back({{"epoch", e.epoch},
                   {"batches", e.batches},
                   {"total", e.total},
                   {"loss_y", e.loss_y},
                   {"loss_h", e.loss_h},
                   {"loss_g", e.loss_g}});
  }
  return out;
}

struct TensorRef {
  std::string name;
  const Eigen::MatrixXd* value;
};

std::vector<TensorRef> tensors_of(const Model& model) {
  std::vector<TensorRef> out;
  for (const auto& p : const_cast<Model&>(model).parameters()) out.push_back({p.name, &p.param->value});
  for (std::size_t i = 0; i < model.tmn.author.banks.size(); ++i) {
    out.push_back({"tmn.author.bank." + std::to_string(i), &model.tmn.author.banks[i].units});
  }
  for (std::size_t i = 0; i < model.tmn.domain.banks.size(); ++i) {
    out.push_back({"tmn.domain.bank." + std::to_string(i), &model.tmn.domain.banks[i].units});
  }
  return out;
}

std::pair<int, int> parse_version(const std::string& v) {
  const auto dot = v.find('.');
  try {
    if (dot == std::string::npos) return {std::stoi(v), 0};
    return {std::stoi(v.substr(0, dot)), std::stoi(v.substr(dot + 1))};
  } catch (const std::exception&) {
    throw CheckpointError("malformed format_version '" + v + "'");
  }
}

}  // namespace

std::string serialize_checkpoint(const Model& model) {
  const bool f32 = model.config.precision == Precision::f32;
  const auto tensors = tensors_of(model);

  json manifest;
  manifest["format"] = "gld-checkpoint";
  manifest["format_version"] = std::to_string(kCheckpointMajor) + "." + std::to_string(kCheckpointMinor);
  manifest["config"] = json::parse(train_config_to_json(model.config));
  manifest["authors"] = model.authors;
  manifest["domains"] = model.domains;
  manifest["tmn"] = {{"input_dim", model.tmn.input_dim},
                     {"use_author", model.tmn.use_author},
                     {"use_domain", model.tmn.use_domain},
                     {"beta", model.tmn.beta},
                     {"tau_author", model.tmn.author.attention.tau},
                     {"tau_domain", model.tmn.domain.attention.tau},
                     {"frozen", model.tmn.frozen},
                     {"author_banks", model.tmn.author.banks.size()},
                     {"domain_banks", model.tmn.domain.banks.size()}};
  manifest["history"] = history_to_json(model.history);
  json list = json::array();
  for (const auto& t : tensors) {
    list.push_back({{"name", t.name}, {"rows", t.value->rows()}, {"cols", t.value->cols()}, {"dtype", f32 ? "f32" : "f64"}});
  }
  manifest["tensors"] = list;

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(1 + tensors.size()));
  put_entry(out, kManifestName, manifest.dump(2));
  for (const auto& t : tensors) put_entry(out, t.name + (f32 ? ".f32" : ".f64"), encode_tensor(*t.value, f32));
  return out;
}

Model deserialize_checkpoint(std::string_view bytes) {
  Reader reader(bytes);
  if (reader.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw CheckpointError("not a checkpoint archive (bad magic)");
  }
  const auto count = reader.get<std::uint32_t>();
  std::vector<std::pair<std::string, std::string_view>> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = reader.get<std::uint32_t>();
    std::string name(reader.take(name_len));
    const auto size = reader.get<std::uint64_t>();
    const auto crc = reader.get<std::uint32_t>();
    const auto payload = reader.take(static_cast<std::size_t>(size));
    if (crc32_of(payload) != crc) throw CheckpointError("checksum mismatch in entry '" + name + "'");
    entries.emplace_back(std::move(name), payload);
  }
  if (!reader.done()) throw CheckpointError("trailing bytes after the last checkpoint entry");
  if (entries.empty() || entries.front().first != kManifestName) throw CheckpointError("checkpoint lacks a manifest");

  json manifest;
  try {
    manifest = json::parse(entries.front().second);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    const auto [major, minor] = parse_version(manifest.at("format_version").get<std::string>());
    if (major != kCheckpointMajor) {
      throw VersionError("checkpoint format " + std::to_string(major) + "." + std::to_string(minor) +
                         " is not supported (this build reads major version " + std::to_string(kCheckpointMajor) + ")");
    }

    Model model;
    model.config = parse_train_config(manifest.at("config").dump());
    model.authors = manifest.at("authors").get<std::vector<std::string>>();
    model.domains = manifest.at("domains").get<std::vector<std::string>>();
    const auto& t = manifest.at("tmn");
    model.tmn.input_dim = t.at("input_dim").get<int>();
    model.tmn.use_author = t.at("use_author").get<bool>();
    model.tmn.use_domain = t.at("use_domain").get<bool>();
    model.tmn.beta = t.at("beta").get<double>();
    model.tmn.author.attention.tau = t.at("tau_author").get<double>();
    model.tmn.domain.attention.tau = t.at("tau_domain").get<double>();
    model.tmn.frozen = t.at("frozen").get<bool>();
    model.tmn.precision = model.config.precision;
    model.tmn.author.banks.resize(t.at("author_banks").get<std::size_t>());
    model.tmn.domain.banks.resize(t.at("domain_banks").get<std::size_t>());
    for (std::size_t i = 0; i < model.tmn.author.banks.size(); ++i) {
      model.tmn.author.banks[i].kind = BankKind::author;
      model.tmn.author.banks[i].entity = i;
    }
    for (std::size_t i = 0; i < model.tmn.domain.banks.size(); ++i) {
      model.tmn.domain.banks[i].kind = BankKind::domain;
      model.tmn.domain.banks[i].entity = i;
    }
    for (const auto& h : manifest.at("history")) {
      model.history.push_back({h.at("epoch").get<int>(), h.at("batches").get<std::size_t>(), h.at("total").get<double>(),
                               h.at("loss_y").get<double>(), h.at("loss_h").get<double>(), h.at("loss_g").get<double>()});
    }

    std::map<std::string, std::string_view> payloads(entries.begin() + 1, entries.end());
    std::map<std::string, Eigen::MatrixXd> tensors;
    for (const auto& desc : manifest.at("tensors")) {
      const auto name = desc.at("name").get<std::string>();
      const auto dtype = desc.at("dtype").get<std::string>();
      if (dtype != "f32" && dtype != "f64") throw CheckpointError("unknown tensor dtype '" + dtype + "'");
      const auto it = payloads.find(name + "." + dtype);
      if (it == payloads.end()) throw CheckpointError("missing tensor payload '" + name + "'");
      tensors[name] = decode_tensor(it->second, desc.at("rows").get<Eigen::Index>(), desc.at("cols").get<Eigen::Index>(),
                                    dtype == "f32");
    }
    auto take = [&](const std::string& name) {
      const auto it = tensors.find(name);
      if (it == tensors.end()) throw CheckpointError("checkpoint lacks tensor '" + name + "'");
      return it->second;
    };
    for (auto& p : model.parameters()) *p.param = ad::Parameter(take(p.name));
    for (std::size_t i = 0; i < model.tmn.author.banks.size(); ++i) {
      model.tmn.author.banks[i].units = take("tmn.author.bank." + std::to_string(i));
    }
    for (std::size_t i = 0; i < model.tmn.domain.banks.size(); ++i) {
      model.tmn.domain.banks[i].units = take("tmn.domain.bank." + std::to_string(i));
    }
    return model;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("malformed manifest config: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

std::string checkpoint_fingerprint(const Model& model) {
  std::ostringstream out;
  out << std::hex << std::setw(8) << std::setfill('0') << crc32_of(serialize_checkpoint(model));
  return out.str();
}

}  // namespace gld
