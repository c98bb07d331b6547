#include "aptdetect/model_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "aptdetect/error.hpp"

namespace aptd {

namespace {

constexpr std::array<char, 8> kMagic{'A', 'P', 'T', 'D', 'M', 'O', 'D', 'L'};

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> b{};
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), b.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size()))
    throw ModelIoError("model file truncated in header");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

FeatureKind parse_kind(const std::string& s) {
  if (s == "numeric") return FeatureKind::numeric;
  if (s == "categorical_binary") return FeatureKind::categorical_binary;
  if (s == "nominal") return FeatureKind::nominal;
  throw ModelIoError("unknown feature kind '" + s + "'");
}

nlohmann::json history_to_json(const TrainHistory& h) {
  nlohmann::json arr = nlohmann::json::array();
  for (const EpochStats& e : h)
    arr.push_back({e.train_loss, e.validation_loss, e.validation_accuracy});
  return arr;
}

TrainHistory history_from_json(const nlohmann::json& j) {
  TrainHistory h;
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  for (const auto& e : j) h.push_back({num(e.at(0)), num(e.at(1)), num(e.at(2))});
  return h;
}

}  // namespace

nlohmann::json encoder_to_json(const Encoder& encoder) {
  nlohmann::json features = nlohmann::json::array();
  for (const Feature& f : encoder.schema().features())
    features.push_back({{"name", f.name}, {"kind", std::string(to_string(f.kind))}});
  return {{"features", std::move(features)}, {"categories", encoder.categories()}};
}

Encoder encoder_from_json(const nlohmann::json& j) {
  std::vector<Feature> features;
  for (const auto& f : j.at("features"))
    features.push_back({f.at("name").get<std::string>(), parse_kind(f.at("kind").get<std::string>())});
  return Encoder(FeatureSchema(std::move(features)),
                 j.at("categories").get<std::vector<std::vector<std::string>>>());
}

void save_model(std::ostream& out, const TrainedModel& model) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(model.kind));
  j["encoder"] = encoder_to_json(model.encoder);
  if (model.standardizer) {
    const Standardizer& s = *model.standardizer;
    j["standardizer"] = {{"mean", s.mean}, {"stddev", s.stddev}, {"active", s.active}};
  }
  switch (model.kind) {
    case ModelKind::tree: j["model"] = tree_to_json(std::get<TreeModel>(model.model)); break;
    case ModelKind::nb: j["model"] = nb_to_json(std::get<NbModel>(model.model)); break;
    case ModelKind::mlp: j["model"] = mlp_to_json(std::get<MlpModel>(model.model)); break;
  }
  j["history"] = history_to_json(model.history);

  const std::vector<std::uint8_t> payload = nlohmann::json::to_cbor(j);
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kModelFormatVersion);
  put_le<std::uint64_t>(out, payload.size());
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw ModelIoError("failed to write model");
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelIoError("cannot open " + path.string() + " for writing");
  save_model(out, model);
}

TrainedModel load_model(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw ModelIoError("not a model file (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kModelFormatVersion)
    throw ModelIoError("unsupported model format version " + std::to_string(version) +
                       " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
  const auto length = get_le<std::uint64_t>(in);
  std::vector<std::uint8_t> payload;
  payload.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(length, 1u << 30)));
  std::istreambuf_iterator<char> it(in), end;
  for (; it != end && payload.size() < length; ++it)
    payload.push_back(static_cast<std::uint8_t>(*it));
  if (payload.size() != length)
    throw ModelIoError("model file truncated: expected " + std::to_string(length) +
                       " payload bytes, found " + std::to_string(payload.size()));

  try {
    const nlohmann::json j = nlohmann::json::from_cbor(payload);
    TrainedModel m;
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw ModelIoError("unknown model kind");
    m.kind = *kind;
    m.encoder = encoder_from_json(j.at("encoder"));
    if (j.contains("standardizer")) {
      const auto& s = j.at("standardizer");
      m.standardizer = Standardizer{s.at("mean").get<std::vector<double>>(),
                                    s.at("stddev").get<std::vector<double>>(),
                                    s.at("active").get<std::vector<bool>>()};
    }
    switch (m.kind) {
      case ModelKind::tree: m.model = tree_from_json(j.at("model")); break;
      case ModelKind::nb: m.model = nb_from_json(j.at("model")); break;
      case ModelKind::mlp: m.model = mlp_from_json(j.at("model")); break;
    }
    m.history = history_from_json(j.at("history"));
    return m;
  } catch (const ModelIoError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelIoError(std::string("malformed model payload: ") + e.what());
  }
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError("cannot open " + path.string());
  return load_model(in);
}

}  // namespace aptd
