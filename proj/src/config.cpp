// Copyright 2026 The semer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "semer/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "semer/balance.hpp"
#include "semer/hashing.hpp"

extern char **environ;

namespace semer {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void Bad(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("bad value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                    std::string(want));
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view text, std::string_view want) {
  text = Trim(text);
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) Bad(key, text, want);
  return v;
}

double ParseDouble(std::string_view key, std::string_view text) {
  return ParseNumber<double>(key, text, "a number");
}
int ParseInt(std::string_view key, std::string_view text) {
  return ParseNumber<int>(key, text, "an integer");
}

bool ParseBool(std::string_view key, std::string_view text) {
  text = Trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  Bad(key, text, "true or false");
}

std::vector<std::string_view> SplitList(std::string_view text) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(Trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

template <std::size_t N>
std::array<double, N> ParseDoubles(std::string_view key, std::string_view text) {
  const auto items = SplitList(text);
  if (items.size() != N) Bad(key, text, std::to_string(N) + " comma-separated numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = ParseDouble(key, items[i]);
  return out;
}

std::string Num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string Bool(bool v) { return v ? "true" : "false"; }

template <typename Container>
std::string Join(const Container &values) {
  std::string out;
  for (const auto &v : values) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
      out += Num(v);
    else
      out += std::to_string(v);
  }
  return out;
}

struct Key {
  std::string name;
  std::function<std::string(const ExperimentConfig &)> get;
  std::function<void(ExperimentConfig &, std::string_view key, std::string_view value)> set;
};

// Helpers binding a member path to a typed key.
template <typename Ref>
Key DoubleKey(std::string name, Ref ref) {
  return {std::move(name), [ref](const ExperimentConfig &c) { return Num(ref(c)); },
          [ref](ExperimentConfig &c, std::string_view k, std::string_view v) { ref(c) = ParseDouble(k, v); }};
}
template <typename Ref>
Key IntKey(std::string name, Ref ref) {
  return {std::move(name),
          [ref](const ExperimentConfig &c) { return std::to_string(ref(c)); },
          [ref](ExperimentConfig &c, std::string_view k, std::string_view v) { ref(c) = ParseInt(k, v); }};
}
template <typename Ref>
Key BoolKey(std::string name, Ref ref) {
  return {std::move(name), [ref](const ExperimentConfig &c) { return Bool(ref(c)); },
          [ref](ExperimentConfig &c, std::string_view k, std::string_view v) { ref(c) = ParseBool(k, v); }};
}

#define SEMER_REF(expr) [](auto &c) -> auto & { return expr; }

const std::vector<Key> &Keys() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back({"seed", [](const ExperimentConfig &c) { return std::to_string(c.seed); },
                 [](ExperimentConfig &c, std::string_view key, std::string_view v) {
                   c.seed = ParseNumber<std::uint64_t>(key, v, "a non-negative integer");
                 }});
    k.push_back({"data.source", [](const ExperimentConfig &c) { return c.data.source; },
                 [](ExperimentConfig &c, std::string_view, std::string_view v) { c.data.source = Trim(v); }});
    k.push_back({"data.dir", [](const ExperimentConfig &c) { return c.data.dir.string(); },
                 [](ExperimentConfig &c, std::string_view, std::string_view v) { c.data.dir = Trim(v); }});
    k.push_back({"data.synthetic.priors", [](const ExperimentConfig &c) { return Join(c.data.synthetic.class_priors); },
                 [](ExperimentConfig &c, std::string_view key, std::string_view v) {
                   const auto items = SplitList(v);
                   if (items.size() != kNumClasses) Bad(key, v, "6 comma-separated counts");
                   for (std::size_t i = 0; i < items.size(); ++i)
                     c.data.synthetic.class_priors[i] = ParseInt(key, items[i]);
                 }});
    k.push_back({"data.synthetic.dims",
                 [](const ExperimentConfig &c) {
                   const Dims &d = c.data.synthetic.dims;
                   return Join(std::array<int, 3>{d.v, d.a, d.t});
                 },
                 [](ExperimentConfig &c, std::string_view key, std::string_view v) {
                   const auto items = SplitList(v);
                   if (items.size() != 3) Bad(key, v, "3 comma-separated widths (v,a,t)");
                   c.data.synthetic.dims = {ParseInt(key, items[0]), ParseInt(key, items[1]),
                                            ParseInt(key, items[2])};
                 }});
    k.push_back(DoubleKey("data.synthetic.means_scale", SEMER_REF(c.data.synthetic.means_scale)));
    k.push_back(DoubleKey("data.synthetic.noise_scale", SEMER_REF(c.data.synthetic.noise_scale)));
    k.push_back(DoubleKey("data.synthetic.coupling", SEMER_REF(c.data.synthetic.cross_modal_coupling)));
    k.push_back(DoubleKey("data.synthetic.sample_latent_scale", SEMER_REF(c.data.synthetic.sample_latent_scale)));
    k.push_back(IntKey("data.synthetic.latent_dim", SEMER_REF(c.data.synthetic.latent_dim)));
    k.push_back(IntKey("data.synthetic.unlabeled_count", SEMER_REF(c.data.synthetic.unlabeled_count)));
    k.push_back(DoubleKey("data.synthetic.validation_fraction", SEMER_REF(c.data.synthetic.validation_fraction)));

    k.push_back(BoolKey("nee.enabled", SEMER_REF(c.nee.enabled)));
    k.push_back(IntKey("nee.T", SEMER_REF(c.nee.steps)));
    k.push_back(DoubleKey("nee.beta1", SEMER_REF(c.nee.beta1)));
    k.push_back(DoubleKey("nee.betaT", SEMER_REF(c.nee.betaT)));
    k.push_back(BoolKey("nee.random_step", SEMER_REF(c.nee.random_step)));

    k.push_back(IntKey("network.d_spec", SEMER_REF(c.network.d_spec)));
    k.push_back(IntKey("network.n_spec_layers", SEMER_REF(c.network.n_spec_layers)));
    k.push_back(IntKey("network.d_inv", SEMER_REF(c.network.d_inv)));
    k.push_back(DoubleKey("network.dropout", SEMER_REF(c.network.dropout)));
    k.push_back(BoolKey("network.fusion_uses_inv", SEMER_REF(c.network.fusion_uses_inv)));
    k.push_back(IntKey("network.baseline_hidden", SEMER_REF(c.network.baseline_hidden)));

    k.push_back({"loss.tau_intra", [](const ExperimentConfig &c) { return Join(c.loss.tau_intra); },
                 [](ExperimentConfig &c, std::string_view key, std::string_view v) {
                   // One value for all three modalities, or v,a,t.
                   if (SplitList(v).size() == 1) {
                     c.loss.tau_intra.fill(ParseDouble(key, v));
                   } else {
                     c.loss.tau_intra = ParseDoubles<3>(key, v);
                   }
                 }});
    k.push_back(DoubleKey("loss.tau_pair", SEMER_REF(c.loss.tau_pair)));
    k.push_back(DoubleKey("loss.tau_combo", SEMER_REF(c.loss.tau_combo)));
    k.push_back(BoolKey("loss.normalize", SEMER_REF(c.loss.normalize)));
    k.push_back(DoubleKey("loss.lambda_intra", SEMER_REF(c.loss.lambda_intra)));
    k.push_back(DoubleKey("loss.lambda_imc", SEMER_REF(c.loss.lambda_imc)));

    k.push_back(DoubleKey("train.lr_pretrain", SEMER_REF(c.train.lr_pretrain)));
    k.push_back(DoubleKey("train.lr_step1", SEMER_REF(c.train.lr_step1)));
    k.push_back(DoubleKey("train.lr_step2", SEMER_REF(c.train.lr_step2)));
    k.push_back(IntKey("train.batch_size", SEMER_REF(c.train.batch_size)));
    k.push_back(IntKey("train.max_pretrain_epochs", SEMER_REF(c.train.max_pretrain_epochs)));
    k.push_back(IntKey("train.patience", SEMER_REF(c.train.patience)));
    k.push_back(IntKey("train.step_epochs", SEMER_REF(c.train.step_epochs)));
    k.push_back(DoubleKey("train.holdout_fraction", SEMER_REF(c.train.holdout_fraction)));
    for (int step : {1, 2}) {
      k.push_back({"train.oversample_step" + std::to_string(step),
                   [step](const ExperimentConfig &c) {
                     return RenderOversampleTargets(step == 1 ? c.train.oversample_step1 : c.train.oversample_step2);
                   },
                   [step](ExperimentConfig &c, std::string_view, std::string_view v) {
                     (step == 1 ? c.train.oversample_step1 : c.train.oversample_step2) =
                         ParseOversampleTargets(Trim(v));
                   }});
    }
    k.push_back(DoubleKey("train.supervised_lambda_intra", SEMER_REF(c.train.supervised_lambda_intra)));
    k.push_back(DoubleKey("train.supervised_lambda_imc", SEMER_REF(c.train.supervised_lambda_imc)));
    k.push_back(DoubleKey("train.adam_beta1", SEMER_REF(c.train.adam.beta1)));
    k.push_back(DoubleKey("train.adam_beta2", SEMER_REF(c.train.adam.beta2)));
    k.push_back(DoubleKey("train.adam_eps", SEMER_REF(c.train.adam.eps)));

    k.push_back({"selftrain.thresholds", [](const ExperimentConfig &c) { return RenderThresholdPolicy(c.selftrain); },
                 [](ExperimentConfig &c, std::string_view, std::string_view v) {
                   c.selftrain = ParseThresholdPolicy(Trim(v));
                 }});
    k.push_back({"voting.weights", [](const ExperimentConfig &c) { return Join(c.voting.weights); },
                 [](ExperimentConfig &c, std::string_view key, std::string_view v) {
                   c.voting.weights = ParseDoubles<kNumHeads>(key, v);
                 }});
    k.push_back({"paths.run_dir", [](const ExperimentConfig &c) { return c.paths.run_dir.string(); },
                 [](ExperimentConfig &c, std::string_view, std::string_view v) { c.paths.run_dir = Trim(v); }});
    return k;
  }();
  return keys;
}

#undef SEMER_REF

const Key &FindKey(std::string_view name) {
  for (const auto &k : Keys())
    if (k.name == name) return k;
  throw ConfigError("unknown config key '" + std::string(name) + "'");
}

std::string EnvName(std::string_view key) {
  std::string out(kEnvPrefix);
  for (char ch : key) {
    if (ch == '.')
      out += "__";
    else
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return out;
}

}  // namespace

NetworkConfig ExperimentConfig::DeskNetwork() {
  NetworkConfig n;
  n.d_spec = 64;
  n.n_spec_layers = 1;
  n.d_inv = 32;
  n.baseline_hidden = 64;
  return n;
}

void ExperimentConfig::Validate() const {
  if (data.source != "synthetic" && data.source != "store")
    throw ConfigError("data.source must be 'synthetic' or 'store'");
  if (data.source == "store" && data.dir.empty()) throw ConfigError("data.source = store needs data.dir");
  const SyntheticSpec &s = data.synthetic;
  for (int n : s.class_priors)
    if (n < 0) throw ConfigError("data.synthetic.priors must be non-negative");
  if (s.dims.v < 1 || s.dims.a < 1 || s.dims.t < 1) throw ConfigError("data.synthetic.dims must be positive");
  if (!(s.means_scale > 0.0)) throw ConfigError("data.synthetic.means_scale must be positive");
  if (!(s.noise_scale > 0.0)) throw ConfigError("data.synthetic.noise_scale must be positive");
  if (!(s.cross_modal_coupling >= 0.0 && s.cross_modal_coupling <= 1.0))
    throw ConfigError("data.synthetic.coupling must lie in [0, 1]");
  if (!(s.sample_latent_scale >= 0.0)) throw ConfigError("data.synthetic.sample_latent_scale must be non-negative");
  if (s.latent_dim < 1) throw ConfigError("data.synthetic.latent_dim must be positive");
  if (s.unlabeled_count < 0) throw ConfigError("data.synthetic.unlabeled_count must be non-negative");
  if (!(s.validation_fraction > 0.0 && s.validation_fraction < 1.0))
    throw ConfigError("data.synthetic.validation_fraction must lie in (0, 1)");
  (void)NoiseSchedule::Linear(nee.steps, nee.beta1, nee.betaT);
  ResolvedNetwork(s.dims).Validate();
  loss.Validate();
  train.Validate();
  selftrain.Validate();
  voting.Validate();
  if (paths.run_dir.empty()) throw ConfigError("paths.run_dir must not be empty");
}

SyntheticSpec ExperimentConfig::ResolvedSynthetic() const {
  SyntheticSpec s = data.synthetic;
  s.seed = SubSeed(seed, "data");
  return s;
}

NetworkConfig ExperimentConfig::ResolvedNetwork(const Dims &dims) const {
  NetworkConfig n = network;
  n.d_in = dims;
  n.init_seed = SubSeed(seed, "network");
  return n;
}

TrainConfig ExperimentConfig::ResolvedTrain() const {
  TrainConfig t = train;
  t.seed = SubSeed(seed, "train");
  return t;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> out;
  for (const auto &k : Keys()) out.push_back(k.name);
  return out;
}

void SetConfigValue(ExperimentConfig &cfg, std::string_view key, std::string_view value) {
  FindKey(key).set(cfg, key, value);
}

std::string GetConfigValue(const ExperimentConfig &cfg, std::string_view key) {
  return FindKey(key).get(cfg);
}

ExperimentConfig ParseConfig(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second)
      throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    try {
      SetConfigValue(cfg, key, value);
    } catch (const ConfigError &e) {
      throw ConfigError(where + e.what());
    } catch (const DataError &e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

std::string RenderConfig(const ExperimentConfig &cfg) {
  std::string out;
  std::string section;
  for (const auto &k : Keys()) {
    const auto dot = k.name.find('.');
    const std::string sec = dot == std::string::npos ? "" : k.name.substr(0, dot);
    if (sec != section && !out.empty()) out += '\n';
    section = sec;
    out += k.name + " = " + k.get(cfg) + '\n';
  }
  return out;
}

void ApplyEnvOverrides(ExperimentConfig &cfg, char **env) {
  if (env == nullptr) return;
  for (char **e = env; *e != nullptr; ++e) {
    const std::string_view entry(*e);
    if (!entry.starts_with(kEnvPrefix)) continue;
    const auto eq = entry.find('=');
    const std::string_view name = entry.substr(0, eq);
    const std::string_view value = eq == std::string_view::npos ? std::string_view{} : entry.substr(eq + 1);
    bool matched = false;
    for (const auto &k : Keys()) {
      if (EnvName(k.name) == name) {
        k.set(cfg, k.name, value);
        matched = true;
        break;
      }
    }
    if (!matched) throw ConfigError("environment override " + std::string(name) + " names no config key");
  }
}

ExperimentConfig LoadConfig(const std::filesystem::path &file) {
  ExperimentConfig cfg;
  if (!file.empty()) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::ostringstream text;
    text << in.rdbuf();
    cfg = ParseConfig(text.str());
  }
  ApplyEnvOverrides(cfg, environ);
  cfg.Validate();
  return cfg;
}

void SaveConfig(const ExperimentConfig &cfg, const std::filesystem::path &file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write config file " + file.string());
  out << RenderConfig(cfg);
  if (!out) throw ConfigError("write failed for " + file.string());
}

std::string ConfigHash(const ExperimentConfig &cfg) { return Sha256Hex(RenderConfig(cfg)); }

}  // namespace semer
