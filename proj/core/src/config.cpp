#include "decrom/config.hpp"

#include "decrom/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace decrom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const std::string t = trim(v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
  return x;
}

Index to_index(const std::string& key, const std::string& v) {
  long long x = 0;
  const std::string t = trim(v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  }
  return static_cast<Index>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Index> to_index_list(const std::string& key, const std::string& v) {
  std::vector<Index> out;
  for (const auto& s : split_list(v)) out.push_back(to_index(key, s));
  if (out.empty()) throw ConfigError("key '" + key + "' needs at least one value");
  return out;
}

Parameter to_parameter(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  Parameter p(static_cast<Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) p[static_cast<Index>(i)] = to_double(key, items[i]);
  return p;
}

BlackboxMethod method_from_string(const std::string& s) {
  if (s == "dopri5") return BlackboxMethod::dopri5;
  if (s == "rosenbrock23") return BlackboxMethod::rosenbrock23;
  if (s == "switching") return BlackboxMethod::switching;
  throw ConfigError("unknown solver method '" + s + "' (expected dopri5, rosenbrock23 or switching)");
}

std::string to_string(BlackboxMethod m) {
  switch (m) {
    case BlackboxMethod::dopri5: return "dopri5";
    case BlackboxMethod::rosenbrock23: return "rosenbrock23";
    case BlackboxMethod::switching: return "switching";
  }
  return "dopri5";
}

ConvectionStencil convection_from_string(const std::string& s) {
  if (s == "central") return ConvectionStencil::central;
  if (s == "upwind") return ConvectionStencil::upwind;
  throw ConfigError("unknown convection stencil '" + s + "'");
}

std::string to_string(ConvectionStencil c) { return c == ConvectionStencil::central ? "central" : "upwind"; }

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join(const Parameter& p) {
  std::string s;
  for (Index i = 0; i < p.size(); ++i) {
    if (i) s += ",";
    s += format_double(p[i]);
  }
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"model",
       {{"id", [](ExperimentConfig& c, const std::string& v) { c.model.id = trim(v); }},
        {"mesh", [](ExperimentConfig& c, const std::string& v) { c.model.n_cells = to_index("model.mesh", v); }},
        {"convection",
         [](ExperimentConfig& c, const std::string& v) { c.model.convection = convection_from_string(trim(v)); }}}},
      {"time",
       {{"t0", [](ExperimentConfig& c, const std::string& v) { c.t0 = to_double("time.t0", v); }},
        {"t_end", [](ExperimentConfig& c, const std::string& v) { c.t_end = to_double("time.t_end", v); }},
        {"dt", [](ExperimentConfig& c, const std::string& v) { c.dt = to_double("time.dt", v); }}}},
      {"solver",
       {{"method", [](ExperimentConfig& c, const std::string& v) { c.greedy.solver.method = method_from_string(trim(v)); }},
        {"rtol", [](ExperimentConfig& c, const std::string& v) { c.greedy.solver.rtol = to_double("solver.rtol", v); }},
        {"atol", [](ExperimentConfig& c, const std::string& v) { c.greedy.solver.atol = to_double("solver.atol", v); }},
        {"max_steps",
         [](ExperimentConfig& c, const std::string& v) { c.greedy.solver.max_steps = to_index("solver.max_steps", v); }},
        {"initial_step",
         [](ExperimentConfig& c, const std::string& v) {
           if (trim(v) == "auto") {
             c.greedy.solver.initial_step.reset();
           } else {
             c.greedy.solver.initial_step = to_double("solver.initial_step", v);
           }
         }}}},
      {"sampling",
       {{"count", [](ExperimentConfig& c, const std::string& v) { c.samples = to_index("sampling.count", v); }},
        {"grid",
         [](ExperimentConfig& c, const std::string& v) { c.sample_grid = to_index_list("sampling.grid", v); }},
        {"train_fraction",
         [](ExperimentConfig& c, const std::string& v) {
           c.train_fraction = to_double("sampling.train_fraction", v);
         }},
        {"seed",
         [](ExperimentConfig& c, const std::string& v) {
           const Index s = to_index("sampling.seed", v);
           if (s < 0) throw ConfigError("sampling.seed must be non-negative");
           c.seed = static_cast<std::uint64_t>(s);
         }},
        {"d_s", [](ExperimentConfig& c, const std::string& v) { c.d_s = to_index("sampling.d_s", v); }}}},
      {"greedy",
       {{"algorithm",
         [](ExperimentConfig& c, const std::string& v) {
           c.algorithm = static_cast<int>(to_index("greedy.algorithm", v));
         }},
        {"tol", [](ExperimentConfig& c, const std::string& v) { c.greedy.tol = to_double("greedy.tol", v); }},
        {"r_c", [](ExperimentConfig& c, const std::string& v) { c.greedy.r_c = to_index("greedy.r_c", v); }},
        {"max_iterations",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.max_iterations = to_index("greedy.max_iterations", v);
         }},
        {"scheme", [](ExperimentConfig& c, const std::string& v) { c.greedy.scheme = ImexScheme::from_id(trim(v)); }},
        {"snapshots",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.snapshots = snapshot_source_from_string(trim(v));
         }},
        {"standard_estimator",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.standard_estimator = standard_estimator_from_string(trim(v));
         }},
        {"estimator",
         [](ExperimentConfig& c, const std::string& v) { c.greedy.variant = variant_from_string(trim(v)); }},
        {"use_deim",
         [](ExperimentConfig& c, const std::string& v) { c.greedy.use_deim = to_bool("greedy.use_deim", v); }},
        {"deim_per_iteration",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.deim_per_iteration = to_index("greedy.deim_per_iteration", v);
         }},
        {"drop_hyperreduction_error",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.drop_hyperreduction_error = to_bool("greedy.drop_hyperreduction_error", v);
         }},
        {"reduced_dual",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.reduced_dual = to_bool("greedy.reduced_dual", v);
         }},
        {"update_defect",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.update_defect = to_bool("greedy.update_defect", v);
         }}}},
      {"closure",
       {{"surrogate",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.closure.surrogate = surrogate_from_string(trim(v));
         }},
        {"tol_t", [](ExperimentConfig& c, const std::string& v) { c.greedy.closure.tol_t = to_double("closure.tol_t", v); }},
        {"tol_p",
         [](ExperimentConfig& c, const std::string& v) { c.greedy.closure.tol_p = to_double("closure.tol_p", v); }},
        {"truncation", [](ExperimentConfig& c, const std::string& v) {
           c.greedy.closure.truncation = truncation_rule_from_string(v);
         }}}},
      {"fnn",
       {{"hidden",
         [](ExperimentConfig& c, const std::string& v) { c.greedy.closure.fnn.hidden = to_index_list("fnn.hidden", v); }},
        {"epochs",
         [](ExperimentConfig& c, const std::string& v) { c.greedy.closure.fnn.epochs = to_index("fnn.epochs", v); }},
        {"learning_rate",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.closure.fnn.learning_rate = to_double("fnn.learning_rate", v);
         }},
        {"beta1",
         [](ExperimentConfig& c, const std::string& v) { c.greedy.closure.fnn.beta1 = to_double("fnn.beta1", v); }},
        {"beta2",
         [](ExperimentConfig& c, const std::string& v) { c.greedy.closure.fnn.beta2 = to_double("fnn.beta2", v); }},
        {"epsilon",
         [](ExperimentConfig& c, const std::string& v) {
           c.greedy.closure.fnn.epsilon = to_double("fnn.epsilon", v);
         }}}},
      {"demo",
       {{"parameter",
         [](ExperimentConfig& c, const std::string& v) { c.demo_parameter = to_parameter("demo.parameter", v); }},
        {"basis", [](ExperimentConfig& c, const std::string& v) { c.demo_basis = to_index("demo.basis", v); }}}},
      {"output", {{"dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = trim(v); }}}},
  };
  return table;
}

}  // namespace

ExperimentConfig default_config(const std::string& model_id) {
  ExperimentConfig c;
  c.model.id = model_id;
  if (model_id == "heat") {
    c.model.n_cells = 256;
    c.t_end = 1.0;
    c.samples = 50;
    c.train_fraction = 0.8;
    c.d_s = 8;
    c.greedy.tol = 1e-4;
    c.greedy.r_c = 1;
    c.demo_parameter = Parameter::Constant(1, 0.06);
  } else if (model_id == "burgers") {
    c.model.n_cells = 1000;
    c.t_end = 2.0;
    c.greedy.solver.method = BlackboxMethod::switching;
    c.greedy.closure.truncation = TruncationRule::relative;
    c.samples = 100;
    c.train_fraction = 0.8;
    c.d_s = 16;
    c.greedy.tol = 1e-4;
    c.greedy.r_c = 1;
    c.demo_parameter = Parameter::Constant(1, 0.1);
  } else if (model_id == "fhn") {
    c.model.n_cells = 512;
    c.t_end = 5.0;
    c.sample_grid = {10, 10};
    c.train_fraction = 0.7;
    c.d_s = 21;
    c.greedy.tol = 1e-3;
    c.greedy.r_c = 3;
    c.greedy.scheme = ImexScheme::imex2();
    c.greedy.update_defect = true;
    c.greedy.closure.tol_t = 1e-6;
    c.greedy.closure.tol_p = 1e-6;
    c.demo_parameter = Parameter(2);
    c.demo_parameter << 0.0267, 0.0367;
  } else {
    throw ConfigError("unknown model id '" + model_id + "' (expected heat, burgers or fhn)");
  }
  c.dt = 0.01;
  c.output_dir = "out/" + model_id;
  return c;
}

std::vector<Parameter> ExperimentConfig::samples_for(const ParameterDomain& domain) const {
  if (domain.dim() == 1 && sample_grid.empty()) return line_samples(domain, samples);
  if (static_cast<Index>(sample_grid.size()) != domain.dim()) {
    throw ConfigError("sampling.grid needs one count per parameter axis");
  }
  return grid_samples(domain, sample_grid);
}

void ExperimentConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("time.dt must be positive");
  if (!(t_end > t0)) throw ConfigError("time.t_end must exceed time.t0");
  if (samples < 1) throw ConfigError("sampling.count must be positive");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("sampling.train_fraction must lie in (0, 1]");
  if (d_s < 1) throw ConfigError("sampling.d_s must be positive");
  if (algorithm != 1 && algorithm != 2) throw ConfigError("greedy.algorithm must be 1 or 2");
  if (demo_basis < 1) throw ConfigError("demo.basis must be positive");
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
  greedy.validate();
  (void)grid();
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream o;
  const auto& g = greedy;
  o << "[model]\nid=" << model.id << "\nmesh=" << model.n_cells << "\nconvection=" << to_string(model.convection)
    << "\n[time]\nt0=" << format_double(t0) << "\nt_end=" << format_double(t_end) << "\ndt=" << format_double(dt)
    << "\n[solver]\nmethod=" << to_string(greedy.solver.method) << "\nrtol=" << format_double(greedy.solver.rtol)
    << "\natol=" << format_double(greedy.solver.atol) << "\nmax_steps=" << greedy.solver.max_steps
    << "\ninitial_step=" << (greedy.solver.initial_step ? format_double(*greedy.solver.initial_step) : std::string("auto"))
    << "\n[sampling]\ncount=" << samples << "\ngrid=" << join(sample_grid)
    << "\ntrain_fraction=" << format_double(train_fraction) << "\nseed=" << seed << "\nd_s=" << d_s
    << "\n[greedy]\nalgorithm=" << algorithm << "\ntol=" << format_double(g.tol) << "\nr_c=" << g.r_c
    << "\nmax_iterations=" << g.max_iterations << "\nscheme=" << g.scheme.id()
    << "\nsnapshots=" << to_string(g.snapshots) << "\nstandard_estimator=" << to_string(g.standard_estimator)
    << "\nestimator=" << to_string(g.variant) << "\nuse_deim=" << g.use_deim
    << "\ndeim_per_iteration=" << g.deim_per_iteration
    << "\ndrop_hyperreduction_error=" << g.drop_hyperreduction_error << "\nreduced_dual=" << g.reduced_dual
    << "\nupdate_defect=" << g.update_defect << "\n[closure]\nsurrogate=" << to_string(g.closure.surrogate)
    << "\ntol_t=" << format_double(g.closure.tol_t) << "\ntol_p=" << format_double(g.closure.tol_p)
    << "\ntruncation=" << to_string(g.closure.truncation)
    << "\n[fnn]\nhidden=" << join(g.closure.fnn.hidden) << "\nepochs=" << g.closure.fnn.epochs
    << "\nlearning_rate=" << format_double(g.closure.fnn.learning_rate)
    << "\nbeta1=" << format_double(g.closure.fnn.beta1) << "\nbeta2=" << format_double(g.closure.fnn.beta2)
    << "\nepsilon=" << format_double(g.closure.fnn.epsilon) << "\n[demo]\nparameter=" << join(demo_parameter)
    << "\nbasis=" << demo_basis << "\n[output]\ndir=" << output_dir << "\n";
  return o.str();
}

std::string ExperimentConfig::hash() const {
  const std::string text = canonical();
  return fnv1a_hex(text.substr(0, text.rfind("[output]")));
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' appears outside any section");
    }
    const auto s = table.find(section);
    if (s == table.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!s->second.count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
      if (!value.empty()) throw ConfigError("nested value under '" + section + "." + key + "'");
    }
  }
  const auto id = tree.get_optional<std::string>("model.id");
  if (!id) throw ConfigError("config must set [model] id");
  ExperimentConfig c = default_config(trim(*id));
  for (const auto& [section, body] : tree) {
    const auto& keys = table.at(section);
    for (const auto& [key, value] : body) {
      if (section == "model" && key == "id") continue;
      keys.at(key)(c, value.data());
    }
  }
  c.greedy.closure.fnn.seed = c.seed;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace decrom
