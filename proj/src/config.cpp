#include "fdr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fdr/error.hpp"

namespace fdr {

namespace {

[[noreturn]] void fail(const std::string& msg, std::size_t line = 0) { throw Error(Errc::Config, msg, line); }

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Index of a '#' that starts a comment, honouring quotes.
std::size_t comment_start(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) ++i;
    else if (s[i] == '"') quoted = !quoted;
    else if (s[i] == '#' && !quoted) return i;
  }
  return s.size();
}

ConfigValue::Scalar parse_scalar(std::string_view s, std::size_t line) {
  if (s.empty()) fail("missing value", line);
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') fail("unterminated string", line);
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\') {
        if (i + 2 >= s.size()) fail("dangling escape", line);
        const char c = s[++i];
        out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
      } else if (s[i] == '"') {
        fail("unexpected quote in string", line);
      } else {
        out += s[i];
      }
    }
    return out;
  }
  std::string text(s);
  std::erase(text, '_');
  if (text.find_first_of(".eEn") == std::string::npos) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data() + (text[0] == '+'), text.data() + text.size(), v);
    if (ec == std::errc() && p == text.data() + text.size()) return v;
    fail("bad integer '" + std::string(s) + "'", line);
  }
  // std::from_chars for double is not available in GCC 11.
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double d = 0.0;
  in >> d;
  if (!in || in.peek() != std::char_traits<char>::eof()) fail("bad value '" + std::string(s) + "'", line);
  return d;
}

ConfigValue parse_value(std::string_view s, std::size_t line) {
  ConfigValue v;
  v.line = line;
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') fail("arrays must close on the same line", line);
    std::vector<ConfigValue::Scalar> items;
    std::string_view body = trim(s.substr(1, s.size() - 2));
    while (!body.empty()) {
      std::size_t end = 0;
      bool quoted = false;
      for (; end < body.size(); ++end) {
        if (body[end] == '\\' && quoted) ++end;
        else if (body[end] == '"') quoted = !quoted;
        else if (body[end] == ',' && !quoted) break;
      }
      const auto item = trim(body.substr(0, end));
      if (item.empty()) {
        if (end >= body.size()) break;  // trailing comma
        fail("empty array element", line);
      }
      items.push_back(parse_scalar(item, line));
      body = end < body.size() ? trim(body.substr(end + 1)) : std::string_view{};
    }
    v.value = std::move(items);
  } else {
    v.value = parse_scalar(s, line);
  }
  return v;
}

bool valid_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::string_view text) {
  ConfigDocument doc;
  std::string section;
  doc.sections_[section];
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line.substr(0, comment_start(line)));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("bad section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!valid_name(section)) fail("bad section name '" + section + "'", line_no);
      if (doc.sections_.count(section) && section != "") fail("duplicate section [" + section + "]", line_no);
      doc.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'", line_no);
    const std::string key(trim(line.substr(0, eq)));
    if (!valid_name(key)) fail("bad key '" + key + "'", line_no);
    auto& sec = doc.sections_[section];
    if (sec.count(key)) fail("duplicate key '" + key + "'", line_no);
    sec.emplace(key, parse_value(trim(line.substr(eq + 1)), line_no));
  }
  return doc;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& model_ids() {
  static const std::vector<std::string> ids{"ols",        "knn",        "tree",        "krr-linear",
                                            "krr-poly",   "krr-rbf",    "krr-sigmoid", "svr-linear",
                                            "svr-poly",   "svr-rbf",    "svr-sigmoid"};
  return ids;
}

ml::Hyperparams model_base(const std::string& id) {
  ml::Hyperparams hp;
  auto kernel_of = [&](std::string_view suffix) {
    if (suffix == "linear") return ml::KernelKind::Linear;
    if (suffix == "poly") return ml::KernelKind::Polynomial;
    if (suffix == "rbf") return ml::KernelKind::Rbf;
    if (suffix == "sigmoid") return ml::KernelKind::Sigmoid;
    fail("unknown model id '" + id + "'");
  };
  if (id == "ols") {
    hp.kind = ml::ModelKind::Ols;
  } else if (id == "knn") {
    hp.kind = ml::ModelKind::Knn;
  } else if (id == "tree") {
    hp.kind = ml::ModelKind::Tree;
  } else if (id.rfind("krr-", 0) == 0) {
    hp.kind = ml::ModelKind::KernelRidge;
    hp.kernel.kind = kernel_of(std::string_view(id).substr(4));
  } else if (id.rfind("svr-", 0) == 0) {
    hp.kind = ml::ModelKind::Svr;
    hp.kernel.kind = kernel_of(std::string_view(id).substr(4));
  } else {
    fail("unknown model id '" + id + "'");
  }
  if (hp.kernel.kind == ml::KernelKind::Polynomial) hp.kernel.degree = 2;
  return hp;
}

ml::Distribution parse_distribution(std::string_view text) {
  std::istringstream in{std::string(text)};
  in.imbue(std::locale::classic());
  std::string kind;
  double lo = 0.0, hi = 0.0;
  in >> kind >> lo >> hi;
  if (!in || !(in >> std::ws).eof()) fail("bad distribution '" + std::string(text) + "'");
  if (kind == "loguniform") return ml::Distribution::log_uniform(lo, hi);
  if (kind == "uniform") return ml::Distribution::uniform(lo, hi);
  if (kind == "int" || kind == "int0") {
    if (lo != static_cast<int>(lo) || hi != static_cast<int>(hi)) fail("int range bounds must be integers");
    return ml::Distribution::int_range(static_cast<int>(lo), static_cast<int>(hi), kind == "int0");
  }
  fail("unknown distribution '" + kind + "'");
}

std::string describe_distribution(const ml::Distribution& d) {
  using T = ml::Distribution::Type;
  switch (d.type) {
    case T::LogUniform: return fmt::format("loguniform {} {}", d.lo, d.hi);
    case T::Uniform: return fmt::format("uniform {} {}", d.lo, d.hi);
    case T::IntRange: return fmt::format("{} {} {}", d.include_zero ? "int0" : "int", d.lo, d.hi);
    case T::Choice: break;
  }
  return "choice";
}

// ---------------------------------------------------------------------------

namespace {

class SectionReader {
 public:
  SectionReader(std::string name, const ConfigDocument::Section* section) : name_(std::move(name)), section_(section) {}

  const ConfigValue* find(const std::string& key) {
    if (!section_) return nullptr;
    auto it = section_->find(key);
    if (it == section_->end()) return nullptr;
    used_.push_back(key);
    return &it->second;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const ConfigValue* v = find(key)) out = convert<T>(key, *v);
  }

  template <typename T>
  T convert(const std::string& key, const ConfigValue& v) {
    if constexpr (std::is_same_v<T, std::vector<std::string>> || std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) bad(key, v, "an array");
      T out;
      for (const auto& s : std::get<1>(v.value)) out.push_back(scalar<typename T::value_type>(key, s, v.line));
      return out;
    } else {
      if (v.is_array()) bad(key, v, "a scalar");
      return scalar<T>(key, std::get<0>(v.value), v.line);
    }
  }

  void check_unused() const {
    if (!section_) return;
    for (const auto& [key, v] : *section_) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        fail("unknown key '" + key + "' in [" + name_ + "]", v.line);
      }
    }
  }

  const std::string& name() const { return name_; }

 private:
  [[noreturn]] void bad(const std::string& key, const ConfigValue& v, const char* want) const {
    fail("[" + name_ + "] " + key + " must be " + want, v.line);
  }

  template <typename T>
  T scalar(const std::string& key, const ConfigValue::Scalar& s, std::size_t line) const {
    if constexpr (std::is_same_v<T, std::string>) {
      if (const auto* p = std::get_if<std::string>(&s)) return *p;
      fail("[" + name_ + "] " + key + " must be a string", line);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (const auto* p = std::get_if<bool>(&s)) return *p;
      fail("[" + name_ + "] " + key + " must be a boolean", line);
    } else if constexpr (std::is_same_v<T, double>) {
      if (const auto* p = std::get_if<double>(&s)) return *p;
      if (const auto* p = std::get_if<std::int64_t>(&s)) return static_cast<double>(*p);
      fail("[" + name_ + "] " + key + " must be a number", line);
    } else {
      const auto* p = std::get_if<std::int64_t>(&s);
      if (!p || *p < 0) fail("[" + name_ + "] " + key + " must be a non-negative integer", line);
      return static_cast<T>(*p);
    }
  }

  std::string name_;
  const ConfigDocument::Section* section_;
  std::vector<std::string> used_;
};

void apply_model_section(ModelConfig& m, SectionReader& r) {
  auto& space = m.space;
  r.read("random_budget", space.random_budget);
  r.read("grid_points", space.grid_points);
  r.read("grid_span", space.grid_span);
  static const std::vector<std::string> names{"k",     "metric", "max_depth", "max_leaf_nodes", "min_samples_leaf",
                                              "alpha", "C",      "epsilon",   "gamma",          "degree",
                                              "coef0"};
  for (const auto& name : names) {
    const ConfigValue* v = r.find(name);
    if (!v) continue;
    auto it = std::find_if(space.params.begin(), space.params.end(), [&](const auto& p) { return p.name == name; });
    try {
      if (v->is_array()) {
        ml::SearchParam p{name, ml::Distribution::choice(r.convert<std::vector<std::string>>(name, *v))};
        if (it != space.params.end()) *it = p;
        else space.params.push_back(p);
        continue;
      }
      const auto& s = std::get<0>(v->value);
      if (const auto* text = std::get_if<std::string>(&s); text && (name == "metric")) {
        ml::set_hyperparam(space.base, name, *text);
      } else if (text) {
        ml::SearchParam p{name, parse_distribution(*text)};
        if (it != space.params.end()) *it = p;
        else space.params.push_back(p);
        continue;
      } else {
        ml::set_hyperparam(space.base, name, r.convert<double>(name, *v));
      }
      if (it != space.params.end()) space.params.erase(it);  // fixed value
    } catch (const Error& e) {
      if (e.code() == Errc::Config) throw;
      fail("[" + r.name() + "] " + name + ": " + e.detail(), v->line);
    }
  }
  try {
    space.validate();
    space.base.validate();
  } catch (const Error& e) {
    fail("[" + r.name() + "] " + e.detail());
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir, const Overrides& overrides) {
  const ConfigDocument doc = ConfigDocument::parse(text);
  auto section = [&](const std::string& name) {
    auto it = doc.sections().find(name);
    return SectionReader(name, it == doc.sections().end() ? nullptr : &it->second);
  };
  RunConfig c;
  c.base_dir = base_dir;

  SectionReader global = section("");
  global.read("seed", c.seed);
  if (overrides.seed) c.seed = *overrides.seed;
  c.campaign_seed = c.seed;
  c.cv.seed = c.seed;
  global.check_unused();

  SectionReader paths = section("paths");
  paths.read("netlist", c.netlist);
  paths.read("stimulus", c.stimulus);
  paths.read("out", c.out);
  if (overrides.out) c.out = *overrides.out;
  paths.check_unused();

  SectionReader checker = section("checker");
  checker.read("payload", c.payload);
  checker.read("valid", c.valid);
  checker.check_unused();

  SectionReader campaign = section("campaign");
  campaign.read("injections_per_ff", c.injections_per_ff);
  campaign.read("seed", c.campaign_seed);
  campaign.read("flip_flops", c.flip_flops);
  campaign.read("threads", c.threads);
  campaign.check_unused();
  if (c.injections_per_ff == 0) fail("[campaign] injections_per_ff must be >= 1");

  SectionReader cv = section("cv");
  std::size_t folds = static_cast<std::size_t>(c.cv.folds);
  cv.read("folds", folds);
  c.cv.folds = static_cast<int>(folds);
  cv.read("train_fraction", c.cv.train_fraction);
  cv.read("seed", c.cv.seed);
  cv.check_unused();
  try {
    c.cv.validate();
  } catch (const Error& e) {
    fail("[cv] " + e.detail());
  }

  SectionReader train = section("train");
  std::string target = "output";
  train.read("target", target);
  if (overrides.target) target = *overrides.target;
  if (target == "output") c.target = Target::Output;
  else if (target == "application") c.target = Target::Application;
  else fail("[train] target must be \"output\" or \"application\"");
  train.read("train_fraction", c.train_fraction);
  if (overrides.train_fraction) c.train_fraction = *overrides.train_fraction;
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) fail("[train] train_fraction must be in (0, 1)");
  train.read("time_budget_seconds", c.time_budget_seconds);
  std::vector<std::string> ids = model_ids();
  train.read("models", ids);
  ml::SearchSpace defaults;
  train.read("random_budget", defaults.random_budget);
  train.read("grid_points", defaults.grid_points);
  train.read("grid_span", defaults.grid_span);
  train.check_unused();

  for (const auto& id : ids) {
    if (std::count(ids.begin(), ids.end(), id) > 1) fail("[train] model '" + id + "' listed twice");
    ModelConfig m{id, ml::default_space(model_base(id))};
    m.space.random_budget = defaults.random_budget;
    m.space.grid_points = defaults.grid_points;
    m.space.grid_span = defaults.grid_span;
    c.models.push_back(std::move(m));
  }
  for (const auto& [name, sec] : doc.sections()) {
    if (name.rfind("model.", 0) != 0) continue;
    const std::string id = name.substr(6);
    (void)model_base(id);
    auto it = std::find_if(c.models.begin(), c.models.end(), [&](const auto& m) { return m.id == id; });
    if (it == c.models.end()) continue;  // configured but not selected
    SectionReader r(name, &sec);
    apply_model_section(*it, r);
    r.check_unused();
  }

  SectionReader curve = section("learning_curve");
  curve.read("model", c.curve_model);
  (void)model_base(c.curve_model);
  curve.read("sizes", c.curve_sizes);
  for (double f : c.curve_sizes) {
    if (!(f > 0.0 && f < 1.0)) fail("[learning_curve] sizes must be in (0, 1)");
  }
  curve.check_unused();

  for (const auto& [name, sec] : doc.sections()) {
    static const std::vector<std::string> known{"", "paths", "checker", "campaign", "cv", "train", "learning_curve"};
    if (std::find(known.begin(), known.end(), name) == known.end() && name.rfind("model.", 0) != 0) {
      fail("unknown section [" + name + "]", sec.empty() ? 0 : sec.begin()->second.line);
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) fail("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c;
  try {
    c = parse_run_config(ss.str(), path.parent_path(), overrides);
  } catch (const Error& e) {
    throw Error(Errc::Config, path.string() + ": " + e.detail(), e.line());
  }
  if (c.netlist.empty()) fail("[paths] netlist is required");
  if (c.stimulus.empty()) fail("[paths] stimulus is required");
  if (!std::filesystem::is_regular_file(c.netlist_path())) fail("netlist not found: " + c.netlist_path().string());
  if (!std::filesystem::is_regular_file(c.stimulus_path())) fail("stimulus not found: " + c.stimulus_path().string());
  return c;
}

// ---------------------------------------------------------------------------

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string string_array(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + quote(items[i]);
  return out + "]";
}

// Floats keep a decimal point or exponent so they read back as floats.
std::string real(double v) {
  std::string s = fmt::format("{}", v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void write_fixed(std::string& out, const ml::Hyperparams& hp, const std::string& name) {
  if (name == "k") out += fmt::format("k = {}\n", hp.k);
  else if (name == "metric") out += fmt::format("metric = {}\n", quote(std::string(ml::metric_name(hp.metric))));
  else if (name == "max_depth") out += fmt::format("max_depth = {}\n", hp.max_depth);
  else if (name == "max_leaf_nodes") out += fmt::format("max_leaf_nodes = {}\n", hp.max_leaf_nodes);
  else if (name == "min_samples_leaf") out += fmt::format("min_samples_leaf = {}\n", hp.min_samples_leaf);
  else if (name == "alpha") out += fmt::format("alpha = {}\n", real(hp.alpha));
  else if (name == "C") out += fmt::format("C = {}\n", real(hp.C));
  else if (name == "epsilon") out += fmt::format("epsilon = {}\n", real(hp.epsilon));
  else if (name == "gamma") out += fmt::format("gamma = {}\n", real(hp.kernel.gamma));
  else if (name == "degree") out += fmt::format("degree = {}\n", hp.kernel.degree);
  else if (name == "coef0") out += fmt::format("coef0 = {}\n", real(hp.kernel.coef0));
}

std::vector<std::string> used_params(const ml::Hyperparams& hp) {
  switch (hp.kind) {
    case ml::ModelKind::Ols: return {};
    case ml::ModelKind::Knn: return {"k", "metric"};
    case ml::ModelKind::Tree: return {"max_depth", "max_leaf_nodes", "min_samples_leaf"};
    case ml::ModelKind::KernelRidge:
    case ml::ModelKind::Svr: {
      std::vector<std::string> out;
      if (hp.kind == ml::ModelKind::KernelRidge) out = {"alpha"};
      else out = {"C", "epsilon"};
      if (hp.kernel.kind != ml::KernelKind::Linear) out.push_back("gamma");
      if (hp.kernel.kind == ml::KernelKind::Polynomial) out.push_back("degree");
      if (hp.kernel.kind == ml::KernelKind::Polynomial || hp.kernel.kind == ml::KernelKind::Sigmoid) {
        out.push_back("coef0");
      }
      return out;
    }
  }
  return {};
}

}  // namespace

std::string effective_config(const RunConfig& c) {
  std::string out;
  out += fmt::format("seed = {}\n\n", c.seed);
  out += fmt::format("[paths]\nnetlist = {}\nstimulus = {}\nout = {}\n\n", quote(c.netlist), quote(c.stimulus),
                     quote(c.out));
  out += fmt::format("[checker]\npayload = {}\nvalid = {}\n\n", string_array(c.payload), quote(c.valid));
  out += fmt::format("[campaign]\ninjections_per_ff = {}\nseed = {}\nflip_flops = {}\nthreads = {}\n\n",
                     c.injections_per_ff, c.campaign_seed, string_array(c.flip_flops), c.threads);
  out += fmt::format("[cv]\nfolds = {}\ntrain_fraction = {}\nseed = {}\n\n", c.cv.folds, real(c.cv.train_fraction),
                     c.cv.seed);
  std::vector<std::string> ids;
  for (const auto& m : c.models) ids.push_back(m.id);
  out += fmt::format("[train]\ntarget = {}\ntrain_fraction = {}\ntime_budget_seconds = {}\nmodels = {}\n\n",
                     quote(c.target == Target::Output ? "output" : "application"), real(c.train_fraction),
                     real(c.time_budget_seconds), string_array(ids));
  for (const auto& m : c.models) {
    out += fmt::format("[model.{}]\nrandom_budget = {}\ngrid_points = {}\ngrid_span = {}\n", m.id,
                       m.space.random_budget, m.space.grid_points, real(m.space.grid_span));
    for (const auto& name : used_params(m.space.base)) {
      auto it = std::find_if(m.space.params.begin(), m.space.params.end(),
                             [&](const auto& p) { return p.name == name; });
      if (it == m.space.params.end()) write_fixed(out, m.space.base, name);
      else if (it->dist.type == ml::Distribution::Type::Choice) out += name + " = " + string_array(it->dist.choices) + "\n";
      else out += name + " = " + quote(describe_distribution(it->dist)) + "\n";
    }
    out += "\n";
  }
  std::string sizes = "[";
  for (std::size_t i = 0; i < c.curve_sizes.size(); ++i) sizes += (i ? ", " : "") + real(c.curve_sizes[i]);
  out += fmt::format("[learning_curve]\nmodel = {}\nsizes = {}]\n", quote(c.curve_model), sizes);
  return out;
}

}  // namespace fdr
