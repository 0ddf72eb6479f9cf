#include "rinst/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rinst/errors.hpp"

namespace rinst {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, double>) {
      out += format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) +
                            ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw InvalidArgument(source + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key)) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                            "'");
    }
    cfg.values_[key] = trim(std::string_view(body).substr(eq + 1));
    cfg.lines_[key] = lineno;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

void Config::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

void Config::erase(const std::string& key) {
  values_.erase(key);
  lines_.erase(key);
}

const std::string* Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

namespace {

[[noreturn]] void bad_value(const std::string& source, std::size_t line, const std::string& key,
                            const std::string& value, const char* expected) {
  std::string where = source;
  if (line) where += ":" + std::to_string(line);
  throw InvalidArgument(where + ": key '" + key + "' has value '" + value + "', expected " +
                        expected);
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  double out = 0.0;
  if (!parse_number(*v, out)) {
    bad_value(source_, lines_.count(key) ? lines_.at(key) : 0, key, *v, "a number");
  }
  return out;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  if (!parse_number(*v, out)) {
    bad_value(source_, lines_.count(key) ? lines_.at(key) : 0, key, *v,
              "a non-negative integer");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "off" || *v == "no") return false;
  bad_value(source_, lines_.count(key) ? lines_.at(key) : 0, key, *v, "true|false");
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          const std::vector<std::string>& fallback) const {
  const auto* v = find(key);
  return v ? split_list(*v) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) {
    double d = 0.0;
    if (!parse_number(item, d)) {
      bad_value(source_, lines_.count(key) ? lines_.at(key) : 0, key, *v, "a list of numbers");
    }
    out.push_back(d);
  }
  return out;
}

std::vector<std::size_t> Config::get_sizes(const std::string& key,
                                           const std::vector<std::size_t>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<std::size_t> out;
  for (const auto& item : split_list(*v)) {
    std::size_t d = 0;
    if (!parse_number(item, d)) {
      bad_value(source_, lines_.count(key) ? lines_.at(key) : 0, key, *v,
                "a list of non-negative integers");
    }
    out.push_back(d);
  }
  return out;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

NetConfig net_config_from(const Config& cfg, NetConfig base) {
  NetConfig n = std::move(base);
  n.enc_layers = cfg.get_size("net.enc_layers", n.enc_layers);
  n.dec_layers = cfg.get_size("net.dec_layers", n.dec_layers);
  n.skip_layers = cfg.get_size("net.skip_layers", n.skip_layers);
  n.enc_channels = cfg.get_sizes("net.enc_channels", n.enc_channels);
  n.dec_channels = cfg.get_sizes("net.dec_channels", n.dec_channels);
  n.skip_channels = cfg.get_sizes("net.skip_channels", n.skip_channels);
  n.enc_kernel = cfg.get_size("net.enc_kernel", n.enc_kernel);
  n.dec_kernel = cfg.get_size("net.dec_kernel", n.dec_kernel);
  n.skip_kernel = cfg.get_size("net.skip_kernel", n.skip_kernel);
  n.activation_slope = cfg.get_double("net.activation_slope", n.activation_slope);
  n.upsample_mode = cfg.get_string("net.upsample_mode", n.upsample_mode);
  n.downsample_mode = cfg.get_string("net.downsample_mode", n.downsample_mode);
  const std::string pad =
      cfg.get_string("net.pad_mode", n.pad_mode == PadMode::Reflect ? "reflect" : "zero");
  if (pad == "reflect") {
    n.pad_mode = PadMode::Reflect;
  } else if (pad == "zero") {
    n.pad_mode = PadMode::Zero;
  } else {
    throw InvalidArgument("net.pad_mode must be reflect|zero, got '" + pad + "'");
  }
  n.norm_enabled = cfg.get_bool("net.norm", n.norm_enabled);
  n.sigmoid_output = cfg.get_bool("net.sigmoid_output", n.sigmoid_output);
  n.seed = cfg.get_u64("net.seed", n.seed);
  n.validate();
  return n;
}

SolverConfig solver_config_from(const Config& cfg, SolverConfig base) {
  SolverConfig s = std::move(base);
  s.iterations = cfg.get_size("solver.iterations", s.iterations);
  s.lr = cfg.get_double("solver.lr", s.lr);
  s.huber_lambda = cfg.get_double("solver.huber_lambda", s.huber_lambda);
  s.alpha = cfg.get_double("solver.alpha", s.alpha);
  s.perturb_sigma = cfg.get_double("solver.perturb_sigma", s.perturb_sigma);
  s.guide_sigma = cfg.get_double("solver.guide_sigma", s.guide_sigma);
  s.loss = parse_loss(cfg.get_string("solver.loss", loss_name(s.loss)));
  s.guided_input = cfg.get_bool("solver.guided_input", s.guided_input);
  s.perturbation = cfg.get_bool("solver.perturbation", s.perturbation);
  s.convex_combo = cfg.get_bool("solver.convex_combo", s.convex_combo);
  s.seed = cfg.get_u64("solver.seed", s.seed);
  s.net = net_config_from(cfg, s.net);
  s.validate();
  return s;
}

void write_config(const NetConfig& n, Config& out) {
  out.set("net.enc_layers", std::to_string(n.enc_layers));
  out.set("net.dec_layers", std::to_string(n.dec_layers));
  out.set("net.skip_layers", std::to_string(n.skip_layers));
  out.set("net.enc_channels", join(n.enc_channels));
  out.set("net.dec_channels", join(n.dec_channels));
  out.set("net.skip_channels", join(n.skip_channels));
  out.set("net.enc_kernel", std::to_string(n.enc_kernel));
  out.set("net.dec_kernel", std::to_string(n.dec_kernel));
  out.set("net.skip_kernel", std::to_string(n.skip_kernel));
  out.set("net.activation_slope", format_double(n.activation_slope));
  out.set("net.upsample_mode", n.upsample_mode);
  out.set("net.downsample_mode", n.downsample_mode);
  out.set("net.pad_mode", n.pad_mode == PadMode::Reflect ? "reflect" : "zero");
  out.set("net.norm", n.norm_enabled ? "true" : "false");
  out.set("net.sigmoid_output", n.sigmoid_output ? "true" : "false");
  out.set("net.seed", std::to_string(n.seed));
}

void write_config(const SolverConfig& s, Config& out) {
  out.set("solver.iterations", std::to_string(s.iterations));
  out.set("solver.lr", format_double(s.lr));
  out.set("solver.huber_lambda", format_double(s.huber_lambda));
  out.set("solver.alpha", format_double(s.alpha));
  out.set("solver.perturb_sigma", format_double(s.perturb_sigma));
  out.set("solver.guide_sigma", format_double(s.guide_sigma));
  out.set("solver.loss", loss_name(s.loss));
  out.set("solver.guided_input", s.guided_input ? "true" : "false");
  out.set("solver.perturbation", s.perturbation ? "true" : "false");
  out.set("solver.convex_combo", s.convex_combo ? "true" : "false");
  out.set("solver.seed", std::to_string(s.seed));
  write_config(s.net, out);
}

}  // namespace rinst
