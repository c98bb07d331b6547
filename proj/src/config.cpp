#include "aptdetect/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

#include "aptdetect/dataset.hpp"
#include "aptdetect/error.hpp"

namespace aptd {

namespace {

namespace pt = boost::property_tree;

std::string key_name(const std::string& section, const std::string& key) {
  return section + "." + key;
}

template <typename T>
T parse_number(const std::string& where, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ConfigError(where + ": '" + text + "' is not a valid " +
                      (std::is_integral_v<T> ? "non-negative integer" : "number"));
  return v;
}

std::vector<std::size_t> parse_list(const std::string& where, const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(start, comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    out.push_back(parse_number<std::size_t>(where, item));
    start = comma + 1;
  }
  return out;
}

ModelSelector parse_selector(const std::string& where, const std::string& s) {
  if (s == "tree") return ModelSelector::tree;
  if (s == "nb") return ModelSelector::nb;
  if (s == "mlp") return ModelSelector::mlp;
  if (s == "all") return ModelSelector::all;
  throw ConfigError(where + ": unknown model '" + s + "' (expected tree, nb, mlp or all)");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& where, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"data",
       {{"train", [](auto& c, auto&, auto& v) { c.train_path = v; }},
        {"test", [](auto& c, auto&, auto& v) { c.test_path = v; }}}},
      {"experiment",
       {{"model", [](auto& c, auto& w, auto& v) { c.model = parse_selector(w, v); }},
        {"folds", [](auto& c, auto& w, auto& v) { c.k_folds = parse_number<std::size_t>(w, v); }},
        {"seed", [](auto& c, auto& w, auto& v) { c.seed = parse_number<std::uint64_t>(w, v); }},
        {"threads", [](auto& c, auto& w, auto& v) { c.threads = parse_number<std::size_t>(w, v); }},
        {"out", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
        {"lift_bins",
         [](auto& c, auto& w, auto& v) { c.lift_bins = parse_number<std::size_t>(w, v); }}}},
      {"tree",
       {{"max_depth",
         [](auto& c, auto& w, auto& v) { c.tree.max_depth = parse_number<std::size_t>(w, v); }},
        {"min_leaf",
         [](auto& c, auto& w, auto& v) { c.tree.min_leaf = parse_number<std::size_t>(w, v); }},
        {"min_gain_ratio",
         [](auto& c, auto& w, auto& v) { c.tree.min_gain_ratio = parse_number<double>(w, v); }}}},
      {"nb",
       {{"alpha", [](auto& c, auto& w, auto& v) { c.nb_alpha = parse_number<double>(w, v); }},
        {"var_floor",
         [](auto& c, auto& w, auto& v) { c.nb_var_floor = parse_number<double>(w, v); }}}},
      {"mlp",
       {{"hidden",
         [](auto& c, auto& w, auto& v) {
           const std::size_t pieces = c.mlp_hidden.empty() ? 2 : c.mlp_hidden.front().pieces;
           c.mlp_hidden.clear();
           for (std::size_t units : parse_list(w, v)) c.mlp_hidden.push_back({units, pieces});
         }},
        {"pieces",
         [](auto& c, auto& w, auto& v) {
           const auto pieces = parse_number<std::size_t>(w, v);
           for (auto& s : c.mlp_hidden) s.pieces = pieces;
         }},
        {"epochs", [](auto& c, auto& w, auto& v) { c.mlp.epochs = parse_number<std::size_t>(w, v); }},
        {"batch_size",
         [](auto& c, auto& w, auto& v) { c.mlp.batch_size = parse_number<std::size_t>(w, v); }},
        {"learning_rate",
         [](auto& c, auto& w, auto& v) { c.mlp.learning_rate = parse_number<double>(w, v); }},
        {"momentum", [](auto& c, auto& w, auto& v) { c.mlp.momentum = parse_number<double>(w, v); }},
        {"input_dropout",
         [](auto& c, auto& w, auto& v) { c.mlp.input_dropout = parse_number<double>(w, v); }},
        {"hidden_dropout",
         [](auto& c, auto& w, auto& v) { c.mlp.hidden_dropout = parse_number<double>(w, v); }},
        {"max_grad_norm",
         [](auto& c, auto& w, auto& v) { c.mlp.max_grad_norm = parse_number<double>(w, v); }},
        {"train_fraction",
         [](auto& c, auto& w, auto& v) { c.mlp_train_fraction = parse_number<double>(w, v); }}}},
  };
  return table;
}

}  // namespace

std::string_view to_string(ModelSelector s) {
  switch (s) {
    case ModelSelector::tree: return "tree";
    case ModelSelector::nb: return "nb";
    case ModelSelector::mlp: return "mlp";
    case ModelSelector::all: return "all";
  }
  return "?";
}

std::vector<ModelKind> ExperimentConfig::models() const {
  switch (model) {
    case ModelSelector::tree: return {ModelKind::tree};
    case ModelSelector::nb: return {ModelKind::nb};
    case ModelSelector::mlp: return {ModelKind::mlp};
    case ModelSelector::all: return {ModelKind::nb, ModelKind::tree, ModelKind::mlp};
  }
  return {};
}

ModelSpec ExperimentConfig::spec(ModelKind kind) const {
  ModelSpec s;
  s.kind = kind;
  s.tree = tree;
  s.nb_alpha = nb_alpha;
  s.nb_var_floor = nb_var_floor;
  s.mlp_hidden = mlp_hidden;
  s.mlp = mlp;
  s.mlp_train_fraction = mlp_train_fraction;
  return s;
}

void ExperimentConfig::validate() const {
  if (train_path.empty() || test_path.empty())
    throw ConfigError("data.train and data.test must both be set");
  if (out_dir.empty()) throw ConfigError("experiment.out must be set");
  if (k_folds < 2) throw ConfigError("experiment.folds must be >= 2");
  if (lift_bins < 1) throw ConfigError("experiment.lift_bins must be >= 1");
  if (tree.max_depth < 1) throw ConfigError("tree.max_depth must be >= 1");
  if (tree.min_leaf < 1) throw ConfigError("tree.min_leaf must be >= 1");
  if (!(tree.min_gain_ratio >= 0.0)) throw ConfigError("tree.min_gain_ratio must be >= 0");
  if (!(nb_alpha > 0.0)) throw ConfigError("nb.alpha must be > 0");
  if (!(nb_var_floor > 0.0)) throw ConfigError("nb.var_floor must be > 0");
  if (mlp_hidden.empty()) throw ConfigError("mlp.hidden must list at least one layer");
  for (const MaxoutShape& s : mlp_hidden) {
    if (s.units == 0) throw ConfigError("mlp.hidden widths must be >= 1");
    if (s.pieces < 2) throw ConfigError("mlp.pieces must be >= 2");
  }
  if (mlp.epochs < 1) throw ConfigError("mlp.epochs must be >= 1");
  if (mlp.batch_size < 1) throw ConfigError("mlp.batch_size must be >= 1");
  if (!(mlp.learning_rate > 0.0)) throw ConfigError("mlp.learning_rate must be > 0");
  if (!(mlp.momentum >= 0.0 && mlp.momentum < 1.0)) throw ConfigError("mlp.momentum must be in [0, 1)");
  if (!(mlp.input_dropout >= 0.0 && mlp.input_dropout < 1.0) ||
      !(mlp.hidden_dropout >= 0.0 && mlp.hidden_dropout < 1.0))
    throw ConfigError("mlp dropout rates must be in [0, 1)");
  if (!(mlp.max_grad_norm >= 0.0)) throw ConfigError("mlp.max_grad_norm must be >= 0");
  if (!(mlp_train_fraction > 0.0 && mlp_train_fraction < 1.0))
    throw ConfigError("mlp.train_fraction must be in (0, 1)");
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  const char* env = std::getenv(kOutDirEnv);
  c.out_dir = env != nullptr && *env != '\0' ? env : "aptdetect_out";
  return c;
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw ConfigError("config: key '" + section + "' must be inside a [section]");
    const auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError("config: unknown section [" + section + "]");
    // `hidden` resets the pieces of every layer, so it must run first.
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& [key, value] : body) {
      if (!value.empty()) throw ConfigError("config: nested key under " + key_name(section, key));
      entries.emplace_back(key, value.data());
    }
    std::stable_partition(entries.begin(), entries.end(),
                          [](const auto& e) { return e.first == "hidden"; });
    for (const auto& [key, value] : entries) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end())
        throw ConfigError("config: unknown key " + key_name(section, key));
      setter->second(base, key_name(section, key), value);
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  std::string hidden;
  for (std::size_t i = 0; i < c.mlp_hidden.size(); ++i)
    hidden += (i ? "," : "") + std::to_string(c.mlp_hidden[i].units);
  out << "[data]\n"
      << "train = " << c.train_path.string() << '\n'
      << "test = " << c.test_path.string() << '\n'
      << "\n[experiment]\n"
      << "model = " << to_string(c.model) << '\n'
      << "folds = " << c.k_folds << '\n'
      << "seed = " << c.seed << '\n'
      << "threads = " << c.threads << '\n'
      << "out = " << c.out_dir.string() << '\n'
      << "lift_bins = " << c.lift_bins << '\n'
      << "\n[tree]\n"
      << "max_depth = " << c.tree.max_depth << '\n'
      << "min_leaf = " << c.tree.min_leaf << '\n'
      << "min_gain_ratio = " << format_number(c.tree.min_gain_ratio) << '\n'
      << "\n[nb]\n"
      << "alpha = " << format_number(c.nb_alpha) << '\n'
      << "var_floor = " << format_number(c.nb_var_floor) << '\n'
      << "\n[mlp]\n"
      << "hidden = " << hidden << '\n'
      << "pieces = " << (c.mlp_hidden.empty() ? 2 : c.mlp_hidden.front().pieces) << '\n'
      << "epochs = " << c.mlp.epochs << '\n'
      << "batch_size = " << c.mlp.batch_size << '\n'
      << "learning_rate = " << format_number(c.mlp.learning_rate) << '\n'
      << "momentum = " << format_number(c.mlp.momentum) << '\n'
      << "input_dropout = " << format_number(c.mlp.input_dropout) << '\n'
      << "hidden_dropout = " << format_number(c.mlp.hidden_dropout) << '\n'
      << "max_grad_norm = " << format_number(c.mlp.max_grad_norm) << '\n'
      << "train_fraction = " << format_number(c.mlp_train_fraction) << '\n';
}

}  // namespace aptd
