#include "aptdetect/schema.hpp"

namespace aptd {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::numeric: return "numeric";
    case FeatureKind::categorical_binary: return "categorical_binary";
    case FeatureKind::nominal: return "nominal";
  }
  return "?";
}

std::string_view to_string(Label label) {
  return label == Label::anomaly ? "anomaly" : "normal";
}

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
  slots_.resize(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].kind == FeatureKind::nominal) {
      slots_[i] = nominal_features_.size();
      nominal_features_.push_back(i);
    } else {
      slots_[i] = numeric_features_.size();
      numeric_features_.push_back(i);
    }
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

const FeatureSchema& FeatureSchema::nsl_kdd() {
  using K = FeatureKind;
  static const FeatureSchema schema({
      {"duration", K::numeric},
      {"protocol_type", K::nominal},
      {"service", K::nominal},
      {"flag", K::nominal},
      {"src_bytes", K::numeric},
      {"dst_bytes", K::numeric},
      {"land", K::categorical_binary},
      {"wrong_fragment", K::numeric},
      {"urgent", K::numeric},
      {"hot", K::numeric},
      {"num_failed_logins", K::numeric},
      {"logged_in", K::categorical_binary},
      {"num_compromised", K::numeric},
      {"root_shell", K::categorical_binary},
      {"su_attempted", K::categorical_binary},
      {"num_root", K::numeric},
      {"num_file_creations", K::numeric},
      {"num_shells", K::numeric},
      {"num_access_files", K::numeric},
      {"num_outbound_cmds", K::numeric},
      {"is_host_login", K::categorical_binary},
      {"is_guest_login", K::categorical_binary},
      {"count", K::numeric},
      {"srv_count", K::numeric},
      {"serror_rate", K::numeric},
      {"srv_serror_rate", K::numeric},
      {"rerror_rate", K::numeric},
      {"srv_rerror_rate", K::numeric},
      {"same_srv_rate", K::numeric},
      {"diff_srv_rate", K::numeric},
      {"srv_diff_host_rate", K::numeric},
      {"dst_host_count", K::numeric},
      {"dst_host_srv_count", K::numeric},
      {"dst_host_same_srv_rate", K::numeric},
      {"dst_host_diff_srv_rate", K::numeric},
      {"dst_host_same_src_port_rate", K::numeric},
      {"dst_host_srv_diff_host_rate", K::numeric},
      {"dst_host_serror_rate", K::numeric},
      {"dst_host_srv_serror_rate", K::numeric},
      {"dst_host_rerror_rate", K::numeric},
      {"dst_host_srv_rerror_rate", K::numeric},
  });
  return schema;
}

}  // namespace aptd
