#include "lockbif/app/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace lockbif::app {

namespace {

using boost::property_tree::ptree;

double to_double(const std::string& text, const std::string& key) {
  const std::string t = boost::algorithm::trim_copy(text);
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used > 0 && used == t.size(), Errc::invalid_config, key + ": not a number: '" + text + "'");
  return value;
}

int to_int(const std::string& text, const std::string& key) {
  const std::string t = boost::algorithm::trim_copy(text);
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used > 0 && used == t.size(), Errc::invalid_config, key + ": not an integer: '" + text + "'");
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

DomainKind parse_domain_kind(const std::string& s) {
  if (s == "interval") return DomainKind::interval;
  if (s == "ball") return DomainKind::ball;
  if (s == "annulus") return DomainKind::annulus;
  if (s == "truncated-space") return DomainKind::truncated_space;
  throw Error(Errc::invalid_config, "domain.kind: unknown '" + s + "'");
}

PotentialKind parse_potential_kind(const std::string& s) {
  if (s == "constant") return PotentialKind::constant;
  if (s == "harmonic") return PotentialKind::harmonic;
  if (s == "tabulated") return PotentialKind::tabulated;
  throw Error(Errc::invalid_config, "potential.kind: unknown '" + s + "'");
}

/// Walks one section, handing each key to `set` and rejecting unknown keys.
template <typename Setter>
void read_section(const ptree& root, const std::string& name, const std::set<std::string>& keys,
                  Setter set) {
  const auto section = root.get_child_optional(name);
  if (!section) return;
  for (const auto& [key, node] : *section) {
    require(keys.count(key) == 1, Errc::invalid_config, "unknown key " + name + "." + key);
    set(key, node.data(), name + "." + key);
  }
}

bool parse_bool_format(const std::vector<std::string>& formats, const std::string& name) {
  for (const auto& f : formats) {
    if (f == name) return true;
  }
  return false;
}

nlohmann::ordered_json optional_json(const std::optional<double>& x) {
  return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

const char* to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::interval: return "interval";
    case DomainKind::ball: return "ball";
    case DomainKind::annulus: return "annulus";
    case DomainKind::truncated_space: return "truncated-space";
  }
  return "unknown";
}

const char* to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::constant: return "constant";
    case PotentialKind::harmonic: return "harmonic";
    case PotentialKind::tabulated: return "tabulated";
  }
  return "unknown";
}

RunConfig parse_config(std::istream& in) {
  ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  static const std::set<std::string> sections{"domain",       "potential", "grid",
                                              "coupling",     "solver",    "continuation",
                                              "scan",         "output"};
  for (const auto& [name, node] : root) {
    require(sections.count(name) == 1 && !node.empty(), Errc::invalid_config,
            "unknown section or top-level key '" + name + "'");
  }

  RunConfig cfg;
  bool outer_given = false;
  read_section(root, "domain", {"kind", "dimension", "inner_radius", "outer_radius"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "kind") cfg.domain.kind = parse_domain_kind(v);
                 if (k == "dimension") cfg.domain.dimension = to_int(v, where);
                 if (k == "inner_radius") cfg.domain.inner_radius = to_double(v, where);
                 if (k == "outer_radius") {
                   cfg.domain.outer_radius = to_double(v, where);
                   outer_given = true;
                 }
               });
  read_section(root, "potential", {"kind", "value", "scale", "table"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "kind") cfg.potential.kind = parse_potential_kind(v);
                 if (k == "value") cfg.potential.value = to_double(v, where);
                 if (k == "scale") cfg.potential.scale = to_double(v, where);
                 if (k == "table") {
                   cfg.potential.table.clear();
                   for (const auto& item : split_list(v)) {
                     const auto colon = item.find(':');
                     require(colon != std::string::npos, Errc::invalid_config,
                             where + ": entries are radius:value");
                     cfg.potential.table.emplace_back(to_double(item.substr(0, colon), where),
                                                      to_double(item.substr(colon + 1), where));
                   }
                 }
               });
  read_section(root, "grid", {"points"},
               [&](const std::string&, const std::string& v, const std::string& where) {
                 cfg.points = to_int(v, where);
               });
  std::optional<int> n_given;
  read_section(root, "coupling", {"n", "mu"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "n") n_given = to_int(v, where);
                 if (k == "mu") {
                   cfg.mu.clear();
                   for (const auto& item : split_list(v)) cfg.mu.push_back(to_double(item, where));
                 }
               });
  read_section(root, "solver", {"tolerance", "max_iterations", "kmax", "zero_tol"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "tolerance") cfg.solver.tolerance = to_double(v, where);
                 if (k == "max_iterations") cfg.solver.max_iterations = to_int(v, where);
                 if (k == "kmax") cfg.solver.kmax = to_int(v, where);
                 if (k == "zero_tol") cfg.solver.zero_tol = to_double(v, where);
               });
  auto& co = cfg.continuation;
  read_section(root, "continuation",
               {"ds0", "ds_min", "ds_max", "newton_tol", "max_newton", "max_steps", "beta_min",
                "beta_max", "margin", "eps", "morse_every"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "ds0") co.ds0 = to_double(v, where);
                 if (k == "ds_min") co.ds_min = to_double(v, where);
                 if (k == "ds_max") co.ds_max = to_double(v, where);
                 if (k == "newton_tol") co.newton_tol = to_double(v, where);
                 if (k == "max_newton") co.max_newton = to_int(v, where);
                 if (k == "max_steps") co.max_steps = to_int(v, where);
                 if (k == "beta_min") co.beta_min = to_double(v, where);
                 if (k == "beta_max") co.beta_max = to_double(v, where);
                 if (k == "margin") co.margin = to_double(v, where);
                 if (k == "eps") co.eps = to_double(v, where);
                 if (k == "morse_every") co.morse_every = to_int(v, where);
               });
  read_section(root, "scan", {"samples", "beta_min", "beta_max"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "samples") cfg.scan.samples = to_int(v, where);
                 if (k == "beta_min") cfg.scan.beta_min = to_double(v, where);
                 if (k == "beta_max") cfg.scan.beta_max = to_double(v, where);
               });
  read_section(root, "output", {"directory", "formats"},
               [&](const std::string& k, const std::string& v, const std::string& where) {
                 if (k == "directory") cfg.output.directory = boost::algorithm::trim_copy(v);
                 if (k == "formats") {
                   const auto formats = split_list(v);
                   for (const auto& f : formats) {
                     require(f == "csv" || f == "json" || f == "dat", Errc::invalid_config,
                             where + ": unknown format '" + f + "'");
                   }
                   cfg.output.csv = parse_bool_format(formats, "csv");
                   cfg.output.json = parse_bool_format(formats, "json");
                   cfg.output.dat = parse_bool_format(formats, "dat");
                 }
               });

  if (cfg.domain.kind == DomainKind::truncated_space && !outer_given) {
    cfg.domain.outer_radius = default_truncation_radius(cfg.potential.scale);
  }
  if (n_given) {
    require(*n_given == cfg.n(), Errc::invalid_config, "coupling.n differs from the length of mu");
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::invalid_config, "cannot open config file " + path);
  return parse_config(in);
}

void validate(const RunConfig& cfg) {
  validate(cfg.domain);
  validate(cfg.potential, cfg.domain);
  require(cfg.points >= 16, Errc::too_few_points, "grid.points must be at least 16");
  require(cfg.n() >= 2, Errc::invalid_config, "coupling needs at least two components");
  for (double m : cfg.mu) require(m > 0, Errc::invalid_config, "every mu must be positive");
  require(cfg.solver.tolerance > 0 && cfg.solver.zero_tol > 0, Errc::invalid_config,
          "solver tolerances must be positive");
  require(cfg.solver.max_iterations > 0 && cfg.solver.kmax >= 2, Errc::invalid_config,
          "solver.max_iterations > 0 and solver.kmax >= 2");
  require(cfg.scan.samples >= 2, Errc::invalid_config, "scan.samples must be at least 2");
  require(!cfg.scan.beta_min || !cfg.scan.beta_max || *cfg.scan.beta_min < *cfg.scan.beta_max,
          Errc::invalid_config, "scan.beta_min must be below scan.beta_max");
  validate(cfg.continuation);
  require(!cfg.output.directory.empty(), Errc::invalid_config, "output.directory is empty");
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["domain"] = {{"kind", to_string(cfg.domain.kind)},
                 {"dimension", cfg.domain.dimension},
                 {"inner_radius", cfg.domain.inner_radius},
                 {"outer_radius", cfg.domain.outer_radius}};
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& [r, v] : cfg.potential.table) table.push_back({r, v});
  j["potential"] = {{"kind", to_string(cfg.potential.kind)},
                    {"value", cfg.potential.value},
                    {"scale", cfg.potential.scale},
                    {"table", table}};
  j["grid"] = {{"points", cfg.points}};
  j["coupling"] = {{"n", cfg.n()}, {"mu", cfg.mu}};
  j["solver"] = {{"tolerance", cfg.solver.tolerance},
                 {"max_iterations", cfg.solver.max_iterations},
                 {"kmax", cfg.solver.kmax},
                 {"zero_tol", cfg.solver.zero_tol}};
  const auto& co = cfg.continuation;
  j["continuation"] = {{"ds0", co.ds0},
                       {"ds_min", co.ds_min},
                       {"ds_max", co.ds_max},
                       {"newton_tol", co.newton_tol},
                       {"max_newton", co.max_newton},
                       {"max_steps", co.max_steps},
                       {"beta_min", optional_json(co.beta_min)},
                       {"beta_max", optional_json(co.beta_max)},
                       {"margin", co.margin},
                       {"eps", co.eps},
                       {"morse_every", co.morse_every}};
  j["scan"] = {{"samples", cfg.scan.samples},
               {"beta_min", optional_json(cfg.scan.beta_min)},
               {"beta_max", optional_json(cfg.scan.beta_max)}};
  j["output"] = {{"directory", cfg.output.directory},
                 {"csv", cfg.output.csv},
                 {"json", cfg.output.json},
                 {"dat", cfg.output.dat}};
  return j;
}

std::vector<std::string> to_ini_lines(const RunConfig& cfg) {
  std::vector<std::string> out;
  const auto j = to_json(cfg);
  for (const auto& [section, body] : j.items()) {
    out.push_back("[" + section + "]");
    for (const auto& [key, value] : body.items()) {
      if (value.is_null() || (value.is_array() && value.empty())) continue;
      std::string text;
      if (value.is_number_float()) {
        text = format_double(value.get<double>());
      } else if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          if (i) text += ", ";
          const auto& e = value[i];
          text += e.is_array() ? format_double(e[0].get<double>()) + ":" + format_double(e[1].get<double>())
                               : format_double(e.get<double>());
        }
      } else if (value.is_string()) {
        text = value.get<std::string>();
      } else {
        text = value.dump();
      }
      out.push_back(key + " = " + text);
    }
  }
  return out;
}

}  // namespace lockbif::app
