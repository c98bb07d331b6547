#include "aptdetect/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "aptdetect/error.hpp"

namespace aptd {

namespace {

// Gains at or below this are rounding residue of a zero gain. The same slack
// keeps a candidate whose gain equals the mean from losing to rounding.
constexpr double kGainTolerance = 1e-12;

double plogp_sum(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total == 0) throw Error("entropy: empty distribution");
  const auto n = static_cast<double>(total);
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

std::size_t total_of(const ClassDist& d) { return d[0] + d[1]; }

Label majority(const ClassDist& d) {
  return d[class_index(Label::anomaly)] > d[class_index(Label::normal)] ? Label::anomaly
                                                                         : Label::normal;
}

// A scored candidate without its record partitions.
struct Scored {
  SplitKind kind = SplitKind::threshold;
  double threshold = 0.0;
  std::vector<int> branch_codes;
  double gain = 0.0;
  double split_info = 0.0;
  double gain_ratio = 0.0;
};

struct Evaluated {
  double gain;
  double split_info;
};

Evaluated evaluate(const ClassDist& parent, std::span<const ClassDist> parts) {
  std::vector<std::size_t> sizes;
  sizes.reserve(parts.size());
  for (const ClassDist& p : parts) sizes.push_back(total_of(p));
  return {info_gain(parent, parts), split_info(sizes)};
}

// Picks the highest gain ratio among candidates whose gain is positive and at
// least the mean positive gain. Earlier candidates win ties.
template <typename T, typename GainOf, typename RatioOf>
std::optional<std::size_t> select_admissible(const std::vector<T>& cands, GainOf gain_of,
                                             RatioOf ratio_of) {
  double sum = 0.0;
  std::size_t positive = 0;
  for (const T& c : cands) {
    if (gain_of(c) > kGainTolerance) {
      sum += gain_of(c);
      ++positive;
    }
  }
  if (positive == 0) return std::nullopt;
  const double mean = sum / static_cast<double>(positive);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double g = gain_of(cands[i]);
    if (g <= kGainTolerance || g + kGainTolerance < mean) continue;
    if (!best || ratio_of(cands[i]) > ratio_of(cands[*best])) best = i;
  }
  return best;
}

std::optional<Scored> score_threshold(const MixedTable& table,
                                      std::span<const std::size_t> records, std::size_t feature,
                                      std::size_t min_leaf, const ClassDist& parent) {
  const auto col = static_cast<Eigen::Index>(feature);
  std::vector<std::pair<double, std::uint8_t>> values;
  values.reserve(records.size());
  for (std::size_t r : records)
    values.emplace_back(table.values(static_cast<Eigen::Index>(r), col),
                        static_cast<std::uint8_t>(class_index(table.labels[r])));
  std::sort(values.begin(), values.end());

  std::vector<Scored> cands;
  ClassDist left{};
  const std::size_t n = values.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    left[values[i].second]++;
    const double lo = values[i].first;
    const double hi = values[i + 1].first;
    if (lo == hi) continue;
    const std::size_t n_left = i + 1;
    if (n_left < min_leaf || n - n_left < min_leaf) continue;
    const ClassDist right{parent[0] - left[0], parent[1] - left[1]};
    const std::array<ClassDist, 2> parts{left, right};
    const Evaluated e = evaluate(parent, parts);
    double t = lo + (hi - lo) * 0.5;
    if (!(t < hi)) t = lo;
    Scored s;
    s.threshold = t;
    s.gain = e.gain;
    s.split_info = e.split_info;
    s.gain_ratio = e.split_info > 0.0 ? e.gain / e.split_info : 0.0;
    cands.push_back(std::move(s));
  }
  const auto pick = select_admissible(
      cands, [](const Scored& s) { return s.gain; }, [](const Scored& s) { return s.gain_ratio; });
  if (!pick) return std::nullopt;
  return cands[*pick];
}

std::optional<Scored> score_multiway(const MixedTable& table,
                                     std::span<const std::size_t> records, std::size_t feature,
                                     std::size_t min_leaf, const ClassDist& parent) {
  const auto col = static_cast<Eigen::Index>(feature);
  // Slot 0 holds unseen (-1) codes.
  std::vector<ClassDist> by_code(table.categories[feature].size() + 1, ClassDist{});
  for (std::size_t r : records) {
    const int code = static_cast<int>(table.values(static_cast<Eigen::Index>(r), col));
    by_code[static_cast<std::size_t>(code + 1)][class_index(table.labels[r])]++;
  }
  Scored s;
  s.kind = SplitKind::multiway;
  std::vector<ClassDist> parts;
  std::size_t big_branches = 0;
  for (std::size_t k = 0; k < by_code.size(); ++k) {
    const std::size_t size = total_of(by_code[k]);
    if (size == 0) continue;
    s.branch_codes.push_back(static_cast<int>(k) - 1);
    parts.push_back(by_code[k]);
    if (size >= min_leaf) ++big_branches;
  }
  if (parts.size() < 2 || big_branches < 2) return std::nullopt;
  const Evaluated e = evaluate(parent, parts);
  if (e.gain <= kGainTolerance || e.split_info <= 0.0) return std::nullopt;
  s.gain = e.gain;
  s.split_info = e.split_info;
  s.gain_ratio = e.gain / e.split_info;
  return s;
}

std::optional<Scored> score_feature(const MixedTable& table, std::span<const std::size_t> records,
                                    std::size_t feature, std::size_t min_leaf,
                                    const ClassDist& parent) {
  if (table.columns[feature].kind == FeatureKind::nominal)
    return score_multiway(table, records, feature, min_leaf, parent);
  return score_threshold(table, records, feature, min_leaf, parent);
}

ClassDist distribution(const MixedTable& table, std::span<const std::size_t> records) {
  ClassDist d{};
  for (std::size_t r : records) d[class_index(table.labels[r])]++;
  return d;
}

// Branch position of a value under an internal node, or nullopt when the
// node has no branch for it.
std::optional<std::size_t> branch_of(const TreeNode& node, double value) {
  if (node.kind == SplitKind::threshold) return value <= node.threshold ? 0 : 1;
  const int code = static_cast<int>(value);
  const auto it = std::find(node.branch_codes.begin(), node.branch_codes.end(), code);
  if (it == node.branch_codes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - node.branch_codes.begin());
}

std::vector<std::vector<std::size_t>> partition(const MixedTable& table,
                                                std::span<const std::size_t> records,
                                                std::size_t feature, const TreeNode& node) {
  std::vector<std::vector<std::size_t>> parts(node.kind == SplitKind::threshold
                                                   ? 2
                                                   : node.branch_codes.size());
  const auto col = static_cast<Eigen::Index>(feature);
  for (std::size_t r : records) {
    const double v = table.values(static_cast<Eigen::Index>(r), col);
    std::size_t b;
    if (node.kind == SplitKind::threshold) {
      b = v <= node.threshold ? 0 : 1;
    } else {
      const int code = static_cast<int>(v);
      b = static_cast<std::size_t>(
          std::find(node.branch_codes.begin(), node.branch_codes.end(), code) -
          node.branch_codes.begin());
    }
    parts[b].push_back(r);
  }
  return parts;
}

}  // namespace

double entropy(std::span<const std::size_t> counts) { return plogp_sum(counts); }

double split_info(std::span<const std::size_t> partition_sizes) {
  return plogp_sum(partition_sizes);
}

double info_gain(const ClassDist& parent, std::span<const ClassDist> partitions) {
  const auto n = static_cast<double>(total_of(parent));
  double remainder = 0.0;
  for (const ClassDist& p : partitions) {
    const std::size_t size = total_of(p);
    if (size == 0) continue;
    remainder += static_cast<double>(size) / n * entropy(p);
  }
  return std::max(0.0, entropy(parent) - remainder);
}

std::optional<double> gain_ratio(const ClassDist& parent, std::span<const ClassDist> partitions) {
  std::vector<std::size_t> sizes;
  for (const ClassDist& p : partitions) sizes.push_back(total_of(p));
  const double si = split_info(sizes);
  if (si <= 0.0) return std::nullopt;
  return info_gain(parent, partitions) / si;
}

std::optional<SplitCandidate> best_split(const MixedTable& table,
                                         std::span<const std::size_t> records,
                                         std::size_t feature, std::size_t min_leaf) {
  if (records.empty()) throw Error("best_split: no records");
  const ClassDist parent = distribution(table, records);
  const std::optional<Scored> s = score_feature(table, records, feature, min_leaf, parent);
  if (!s) return std::nullopt;
  SplitCandidate c;
  c.feature = feature;
  c.kind = s->kind;
  c.threshold = s->threshold;
  c.branch_codes = s->branch_codes;
  c.gain = s->gain;
  c.split_info = s->split_info;
  c.gain_ratio = s->gain_ratio;
  TreeNode probe;
  probe.kind = s->kind;
  probe.threshold = s->threshold;
  probe.branch_codes = s->branch_codes;
  c.partitions = partition(table, records, feature, probe);
  return c;
}

std::size_t TreeModel::depth() const {
  std::function<std::size_t(std::size_t)> walk = [&](std::size_t i) -> std::size_t {
    std::size_t d = 0;
    for (std::size_t c : nodes[i].children) d = std::max(d, 1 + walk(c));
    return d;
  };
  return nodes.empty() ? 0 : walk(0);
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf; }));
}

std::size_t TreeModel::route(std::span<const double> row) const {
  if (nodes.empty()) throw Error("tree: empty model");
  std::size_t i = 0;
  while (!nodes[i].leaf) {
    const TreeNode& node = nodes[i];
    const std::optional<std::size_t> b = branch_of(node, row[node.feature]);
    i = node.children[b.value_or(node.default_child)];
  }
  return i;
}

TreeModel train_tree(const MixedTable& table, const TreeParams& params) {
  if (table.size() == 0) throw Error("train_tree: empty training set");
  if (params.max_depth < 1 || params.min_leaf < 1)
    throw Error("train_tree: max_depth and min_leaf must be >= 1");

  TreeModel model;
  model.columns = table.columns;
  model.categories = table.categories;

  std::function<std::size_t(std::vector<std::size_t>, std::size_t)> grow =
      [&](std::vector<std::size_t> records, std::size_t depth) -> std::size_t {
    const std::size_t id = model.nodes.size();
    model.nodes.emplace_back();
    {
      TreeNode& node = model.nodes[id];
      node.dist = distribution(table, records);
      node.label = majority(node.dist);
    }
    const ClassDist dist = model.nodes[id].dist;
    const bool pure = dist[0] == 0 || dist[1] == 0;
    if (pure || depth >= params.max_depth || records.size() < params.min_leaf) return id;

    std::vector<std::pair<std::size_t, Scored>> cands;
    for (std::size_t f = 0; f < table.width(); ++f) {
      if (auto s = score_feature(table, records, f, params.min_leaf, dist))
        cands.emplace_back(f, std::move(*s));
    }
    const auto pick = select_admissible(
        cands, [](const auto& c) { return c.second.gain; },
        [](const auto& c) { return c.second.gain_ratio; });
    if (!pick || cands[*pick].second.gain_ratio < params.min_gain_ratio) return id;

    const auto& [feature, chosen] = cands[*pick];
    TreeNode split;
    split.leaf = false;
    split.dist = dist;
    split.label = majority(dist);
    split.feature = feature;
    split.kind = chosen.kind;
    split.threshold = chosen.threshold;
    split.branch_codes = chosen.branch_codes;
    auto parts = partition(table, records, feature, split);
    records.clear();
    records.shrink_to_fit();

    std::size_t largest = 0;
    for (std::size_t b = 1; b < parts.size(); ++b)
      if (parts[b].size() > parts[largest].size()) largest = b;
    split.default_child = largest;
    model.nodes[id] = std::move(split);

    for (auto& part : parts) {
      const std::size_t child = grow(std::move(part), depth + 1);
      model.nodes[id].children.push_back(child);
    }
    return id;
  };

  std::vector<std::size_t> all(table.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  grow(std::move(all), 0);
  return model;
}

Prediction predict_tree(const TreeModel& model, std::span<const double> row) {
  const TreeNode& leaf = model.nodes[model.route(row)];
  const auto n = static_cast<double>(total_of(leaf.dist));
  const double anomaly =
      (static_cast<double>(leaf.dist[class_index(Label::anomaly)]) + 1.0) / (n + 2.0);
  Prediction p;
  p.label = leaf.label;
  p.anomaly_probability = anomaly;
  p.confidence = leaf.label == Label::anomaly ? anomaly : 1.0 - anomaly;
  return p;
}

namespace {

nlohmann::json node_to_json(const TreeModel& m, std::size_t i) {
  const TreeNode& n = m.nodes[i];
  nlohmann::json j;
  j["class"] = std::string(to_string(n.label));
  j["dist"] = {n.dist[0], n.dist[1]};
  if (n.leaf) return j;
  j["feature"] = m.columns[n.feature].name;
  j["default"] = n.default_child;
  if (n.kind == SplitKind::threshold) {
    j["test"] = "<=";
    j["threshold"] = n.threshold;
    j["children"] = {node_to_json(m, n.children[0]), node_to_json(m, n.children[1])};
  } else {
    j["test"] = "in";
    nlohmann::json branches = nlohmann::json::array();
    for (std::size_t b = 0; b < n.children.size(); ++b) {
      const int code = n.branch_codes[b];
      branches.push_back({{"value", code < 0 ? nlohmann::json(nullptr)
                                              : nlohmann::json(m.categories[n.feature]
                                                                   [static_cast<std::size_t>(code)])},
                          {"node", node_to_json(m, n.children[b])}});
    }
    j["branches"] = std::move(branches);
  }
  return j;
}

Label parse_label(const std::string& s) {
  if (s == "normal") return Label::normal;
  if (s == "anomaly") return Label::anomaly;
  throw Error("tree: unknown class '" + s + "'");
}

FeatureKind parse_kind(const std::string& s) {
  if (s == "numeric") return FeatureKind::numeric;
  if (s == "categorical_binary") return FeatureKind::categorical_binary;
  if (s == "nominal") return FeatureKind::nominal;
  throw Error("unknown feature kind '" + s + "'");
}

std::size_t node_from_json(TreeModel& m, const nlohmann::json& j,
                           const std::vector<std::string>& names) {
  const std::size_t id = m.nodes.size();
  m.nodes.emplace_back();
  TreeNode node;
  node.label = parse_label(j.at("class").get<std::string>());
  node.dist = {j.at("dist").at(0).get<std::size_t>(), j.at("dist").at(1).get<std::size_t>()};
  if (!j.contains("feature")) {
    m.nodes[id] = std::move(node);
    return id;
  }
  node.leaf = false;
  const std::string feature = j.at("feature").get<std::string>();
  const auto it = std::find(names.begin(), names.end(), feature);
  if (it == names.end()) throw Error("tree: unknown feature '" + feature + "'");
  node.feature = static_cast<std::size_t>(it - names.begin());
  node.default_child = j.at("default").get<std::size_t>();
  std::vector<const nlohmann::json*> kids;
  if (j.at("test").get<std::string>() == "<=") {
    node.kind = SplitKind::threshold;
    node.threshold = j.at("threshold").get<double>();
    for (const auto& c : j.at("children")) kids.push_back(&c);
  } else {
    node.kind = SplitKind::multiway;
    const auto& cats = m.categories[node.feature];
    for (const auto& b : j.at("branches")) {
      int code = -1;
      if (!b.at("value").is_null()) {
        const std::string v = b.at("value").get<std::string>();
        const auto c = std::find(cats.begin(), cats.end(), v);
        if (c == cats.end()) throw Error("tree: unknown category '" + v + "'");
        code = static_cast<int>(c - cats.begin());
      }
      node.branch_codes.push_back(code);
      kids.push_back(&b.at("node"));
    }
  }
  if (kids.size() < 2 || node.default_child >= kids.size())
    throw Error("tree: malformed internal node");
  m.nodes[id] = std::move(node);
  for (const nlohmann::json* k : kids) {
    const std::size_t child = node_from_json(m, *k, names);
    m.nodes[id].children.push_back(child);
  }
  return id;
}

}  // namespace

nlohmann::json tree_to_json(const TreeModel& model) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t c = 0; c < model.columns.size(); ++c) {
    nlohmann::json col = {{"name", model.columns[c].name},
                          {"kind", std::string(to_string(model.columns[c].kind))}};
    if (model.columns[c].kind == FeatureKind::nominal) col["categories"] = model.categories[c];
    cols.push_back(std::move(col));
  }
  return {{"columns", std::move(cols)},
          {"root", model.nodes.empty() ? nlohmann::json(nullptr) : node_to_json(model, 0)}};
}

TreeModel tree_from_json(const nlohmann::json& j) {
  TreeModel m;
  std::vector<std::string> names;
  for (const auto& col : j.at("columns")) {
    m.columns.push_back({col.at("name").get<std::string>(),
                         parse_kind(col.at("kind").get<std::string>())});
    names.push_back(m.columns.back().name);
    m.categories.push_back(col.contains("categories")
                               ? col.at("categories").get<std::vector<std::string>>()
                               : std::vector<std::string>{});
  }
  if (!j.at("root").is_null()) node_from_json(m, j.at("root"), names);
  return m;
}

}  // namespace aptd
