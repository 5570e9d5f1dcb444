#include "odenet/config.hpp"

#include <set>

#include "odenet/error.hpp"

namespace odenet {

namespace fs = std::filesystem;

namespace {

/// Reads keys off one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const Json& doc, std::string where) : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) throw Error(ErrorCode::Config, where_ + " must be a JSON object");
  }

  bool has(const char* key) const { return doc_.contains(key); }

  template <class T>
  std::optional<T> get(const char* key) {
    seen_.insert(key);
    if (!doc_.contains(key)) return std::nullopt;
    try {
      return doc_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::Config, where_ + "." + key + " has the wrong type");
    }
  }

  template <class T>
  T get_or(const char* key, T fallback) {
    auto v = get<T>(key);
    return v ? *v : fallback;
  }

  template <class T>
  T require(const char* key) {
    if (!doc_.contains(key)) throw Error(ErrorCode::Config, where_ + " is missing '" + key + "'");
    return *get<T>(key);
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    return doc_.contains(key) ? &doc_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.count(key)) throw Error(ErrorCode::Config, "unknown key '" + key + "' in " + where_);
    }
  }

 private:
  const Json& doc_;
  std::string where_;
  std::set<std::string> seen_;
};

Schedule parse_schedule(const Json& doc, const std::string& where, Schedule base) {
  if (doc.is_number()) {
    const double v = doc.get<double>();
    return Schedule{v, v};
  }
  Section s(doc, where);
  base.start = s.get_or("start", base.start);
  base.end = s.get_or("end", base.end);
  s.finish();
  return base;
}

InitStrategy parse_init(const std::string& name) {
  if (name == "random") return InitStrategy::RandomSmall;
  if (name == "regression") return InitStrategy::RegressionWarmStart;
  if (name == "structure") return InitStrategy::FromStructure;
  throw Error(ErrorCode::Config, "init must be random, regression or structure, got '" + name + "'");
}

std::string to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::RandomSmall: return "random";
    case InitStrategy::RegressionWarmStart: return "regression";
    case InitStrategy::FromStructure: return "structure";
  }
  return "?";
}

StructureKind parse_structure(const std::string& name) {
  if (name == "full") return StructureKind::Full;
  if (name == "actin_data_driven") return StructureKind::ActinDataDriven;
  if (name == "actin_physical") return StructureKind::ActinPhysical;
  throw Error(ErrorCode::Config, "unknown structure '" + name + "'");
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

FitMode parse_fit_mode(const std::string& name) {
  if (name == "odenet") return FitMode::Odenet;
  if (name == "sindy") return FitMode::Sindy;
  throw Error(ErrorCode::Config, "mode must be odenet or sindy, got '" + name + "'");
}

std::string to_string(FitMode mode) { return mode == FitMode::Odenet ? "odenet" : "sindy"; }

IntegratorConfig parse_integrator_config(const Json& doc, IntegratorConfig base) {
  Section s(doc, "integrator");
  if (auto m = s.get<std::string>("method")) {
    if (*m == "rk4") {
      base.method = IntegratorMethod::Rk4;
    } else if (*m == "dopri5") {
      base.method = IntegratorMethod::Dopri5;
    } else {
      throw Error(ErrorCode::Config, "integrator.method must be rk4 or dopri5");
    }
  }
  base.rk4_substeps = s.get_or("rk4_substeps", base.rk4_substeps);
  base.atol = s.get_or("atol", base.atol);
  base.rtol = s.get_or("rtol", base.rtol);
  base.max_steps = s.get_or("max_steps", base.max_steps);
  base.min_step = s.get_or("min_step", base.min_step);
  s.finish();
  try {
    base.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  return base;
}

TrainConfig parse_train_config(const Json& doc, TrainConfig base) {
  Section s(doc, "train");
  base.batch_size = s.get_or("batch_size", base.batch_size);
  base.segment_length = s.get_or("segment_length", base.segment_length);
  base.iterations = s.get_or("iterations", base.iterations);
  base.loss_threshold = s.get_or("loss_threshold", base.loss_threshold);
  base.adam.learning_rate = s.get_or("learning_rate", base.adam.learning_rate);
  if (auto v = s.get<double>("learning_rate_end")) base.learning_rate_end = *v;
  base.adam.beta1 = s.get_or("beta1", base.adam.beta1);
  base.adam.beta2 = s.get_or("beta2", base.adam.beta2);
  base.adam.epsilon = s.get_or("adam_epsilon", base.adam.epsilon);
  if (const Json* mu = s.child("mu")) base.mu = parse_schedule(*mu, "train.mu", base.mu);
  if (const Json* g = s.child("gamma")) base.gamma = parse_schedule(*g, "train.gamma", base.gamma);
  base.threshold_period = s.get_or("threshold_period", base.threshold_period);
  if (auto init = s.get<std::string>("init")) base.init = parse_init(*init);
  base.learn_noise = s.get_or("learn_noise", base.learn_noise);
  base.noise_scale = s.get_or("noise_scale", base.noise_scale);
  base.noise_learning_rate = s.get_or("noise_learning_rate", base.noise_learning_rate);
  base.learn_hidden = s.get_or("learn_hidden", base.learn_hidden);
  base.elongation_guess = s.get_or("elongation_guess", base.elongation_guess);
  base.log_every = s.get_or("log_every", base.log_every);
  base.threads = s.get_or("threads", base.threads);
  if (const Json* integ = s.child("integrator")) {
    base.integrator = parse_integrator_config(*integ, base.integrator);
  }
  s.finish();
  try {
    base.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  return base;
}

Json train_config_to_json(const TrainConfig& c) {
  Json doc;
  doc["batch_size"] = c.batch_size;
  doc["segment_length"] = c.segment_length;
  doc["iterations"] = c.iterations;
  doc["loss_threshold"] = c.loss_threshold;
  doc["learning_rate"] = c.adam.learning_rate;
  if (c.learning_rate_end) doc["learning_rate_end"] = *c.learning_rate_end;
  doc["beta1"] = c.adam.beta1;
  doc["beta2"] = c.adam.beta2;
  doc["adam_epsilon"] = c.adam.epsilon;
  doc["mu"] = {{"start", c.mu.start}, {"end", c.mu.end}};
  doc["gamma"] = {{"start", c.gamma.start}, {"end", c.gamma.end}};
  doc["threshold_period"] = c.threshold_period;
  doc["init"] = to_string(c.init);
  doc["learn_noise"] = c.learn_noise;
  doc["noise_scale"] = c.noise_scale;
  doc["noise_learning_rate"] = c.noise_learning_rate;
  doc["learn_hidden"] = c.learn_hidden;
  doc["elongation_guess"] = c.elongation_guess;
  doc["log_every"] = c.log_every;
  doc["threads"] = c.threads;
  const IntegratorConfig& i = c.integrator;
  doc["integrator"] = {{"method", i.method == IntegratorMethod::Rk4 ? "rk4" : "dopri5"},
                       {"rk4_substeps", i.rk4_substeps},
                       {"atol", i.atol},
                       {"rtol", i.rtol},
                       {"max_steps", i.max_steps},
                       {"min_step", i.min_step}};
  return doc;
}

GeneratorSpec generator_from_json(const Json& doc) {
  Section s(doc, "generate");
  GeneratorSpec g;
  g.system = s.require<std::string>("system");
  if (g.system == "lv") {
    if (auto r = s.get<std::string>("regime")) {
      try {
        g.regime = parse_lv_regime(*r);
      } catch (const Error& e) {
        throw Error(ErrorCode::Config, e.what());
      }
    }
    if (auto c = s.get<std::vector<double>>("coefficients")) {
      if (c->size() != 6) throw Error(ErrorCode::Config, "generate.coefficients needs six LV values");
      std::array<double, 6> a{};
      std::copy(c->begin(), c->end(), a.begin());
      g.coefficients = a;
    }
  } else if (g.system == "actin") {
    try {
      g.actin_model = parse_actin_model(s.get_or<std::string>("model", "physical"));
      g.salt = parse_salt(s.get_or<std::string>("salt", "MgCl2"));
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, e.what());
    }
  } else if (g.system != "lorenz") {
    throw Error(ErrorCode::Config, "generate.system must be lv, lorenz or actin, got '" + g.system + "'");
  }
  g.initial_conditions = s.get_or("initial_conditions", g.initial_conditions);
  if (const Json* totals = s.child("conserved_totals")) {
    if (!totals->is_array()) throw Error(ErrorCode::Config, "generate.conserved_totals must be an array");
    for (const auto& t : *totals) {
      if (t.is_null()) {
        g.conserved_totals.emplace_back();
      } else if (t.is_number()) {
        g.conserved_totals.emplace_back(t.get<double>());
      } else {
        throw Error(ErrorCode::Config, "generate.conserved_totals entries must be numbers or null");
      }
    }
  }
  g.horizon = s.get_or("horizon", g.horizon);
  g.dt = s.get_or("dt", g.dt);
  g.noise = s.get_or("noise", g.noise);
  g.max_internal_step = s.get_or("max_internal_step", g.max_internal_step);
  s.finish();
  if (!(g.noise >= 0.0)) throw Error(ErrorCode::Config, "generate.noise must be >= 0");
  if (!g.conserved_totals.empty() && g.conserved_totals.size() != g.initial_conditions.size()) {
    throw Error(ErrorCode::Config, "generate.conserved_totals must match initial_conditions");
  }
  return g;
}

Json generator_to_json(const GeneratorSpec& g) {
  Json doc;
  doc["system"] = g.system;
  if (g.system == "lv") {
    if (g.coefficients) {
      doc["coefficients"] = std::vector<double>(g.coefficients->begin(), g.coefficients->end());
    } else {
      doc["regime"] = to_string(g.regime);
    }
  } else if (g.system == "actin") {
    doc["model"] = to_string(g.actin_model);
    doc["salt"] = to_string(g.salt);
  }
  if (!g.initial_conditions.empty()) doc["initial_conditions"] = g.initial_conditions;
  if (!g.conserved_totals.empty()) {
    Json totals = Json::array();
    for (const auto& t : g.conserved_totals) totals.push_back(t ? Json(*t) : Json(nullptr));
    doc["conserved_totals"] = totals;
  }
  if (g.horizon > 0.0) doc["horizon"] = g.horizon;
  if (g.dt > 0.0) doc["dt"] = g.dt;
  doc["noise"] = g.noise;
  if (g.max_internal_step > 0.0) doc["max_internal_step"] = g.max_internal_step;
  return doc;
}

ReferenceSystem make_system(const GeneratorSpec& spec) {
  if (spec.system == "lv") return spec.coefficients ? make_lv(*spec.coefficients) : make_lv(spec.regime);
  if (spec.system == "lorenz") return make_lorenz();
  if (spec.system == "actin") return make_actin(spec.actin_model, spec.salt);
  throw Error(ErrorCode::Config, "unknown system '" + spec.system + "'");
}

GenerateOptions make_generate_options(const GeneratorSpec& spec, std::uint64_t seed) {
  GenerateOptions o;
  for (const auto& ic : spec.initial_conditions) {
    o.initial_conditions.push_back(Eigen::Map<const Eigen::VectorXd>(ic.data(), static_cast<Eigen::Index>(ic.size())));
  }
  o.conserved_totals = spec.conserved_totals;
  o.conserved_totals.resize(o.initial_conditions.size());
  o.horizon = spec.horizon;
  o.dt = spec.dt;
  o.noise = spec.noise;
  o.seed = seed;
  o.max_internal_step = spec.max_internal_step;
  return o;
}

RunConfig parse_run_config(const Json& doc, const fs::path& base_dir) {
  Section s(doc, "config");
  RunConfig rc;
  rc.seed = s.get_or<std::uint64_t>("seed", 0);
  if (auto out = s.get<std::string>("output")) rc.output = resolve(base_dir, *out);
  if (auto mode = s.get<std::string>("mode")) rc.mode = parse_fit_mode(*mode);
  if (auto st = s.get<std::string>("structure")) rc.structure = parse_structure(*st);

  if (const Json* ds = s.child("dataset")) {
    if (ds->is_string()) {
      rc.dataset = resolve(base_dir, ds->get<std::string>());
    } else {
      Section d(*ds, "dataset");
      if (auto p = d.get<std::string>("path")) rc.dataset = resolve(base_dir, *p);
      if (const Json* g = d.child("generate")) rc.generate = generator_from_json(*g);
      d.finish();
      if (rc.dataset && rc.generate) {
        throw Error(ErrorCode::Config, "dataset takes either 'path' or 'generate', not both");
      }
    }
  }
  if (const Json* b = s.child("basis")) {
    Section bs(*b, "basis");
    if (auto d = bs.get<int>("dimension")) rc.basis_dimension = *d;
    rc.basis_order = bs.get_or("order", rc.basis_order);
    bs.finish();
    if (rc.basis_order < 0) throw Error(ErrorCode::Config, "basis.order must be >= 0");
    if (rc.basis_dimension && *rc.basis_dimension < 1) {
      throw Error(ErrorCode::Config, "basis.dimension must be >= 1");
    }
  }
  if (const Json* t = s.child("train")) rc.train = parse_train_config(*t, rc.train);
  if (const Json* i = s.child("integrator")) {
    rc.train.integrator = parse_integrator_config(*i, rc.train.integrator);
  }
  if (const Json* sd = s.child("sindy")) {
    Section ss(*sd, "sindy");
    rc.sindy.thresholds = ss.get_or("thresholds", rc.sindy.thresholds);
    rc.sindy.max_rounds = ss.get_or("max_rounds", rc.sindy.max_rounds);
    ss.finish();
    if (rc.sindy.thresholds.empty() || rc.sindy.max_rounds < 1) {
      throw Error(ErrorCode::Config, "sindy needs thresholds and max_rounds >= 1");
    }
    for (double t : rc.sindy.thresholds) {
      if (!(t >= 0.0)) throw Error(ErrorCode::Config, "sindy thresholds must be >= 0");
    }
  }
  if (const Json* sim = s.child("simulate")) {
    Section ss(*sim, "simulate");
    SimulateSpec spec;
    if (auto m = ss.get<std::string>("model")) spec.model = resolve(base_dir, *m);
    spec.x0 = ss.require<std::vector<double>>("x0");
    spec.start = ss.get_or("start", spec.start);
    spec.dt = ss.get_or("dt", spec.dt);
    spec.count = ss.get_or<std::size_t>("count", 0);
    spec.grid = ss.get_or("grid", spec.grid);
    ss.finish();
    if (spec.grid.empty() && (spec.count < 2 || !(spec.dt > 0.0))) {
      throw Error(ErrorCode::Config, "simulate needs a grid or count >= 2 with dt > 0");
    }
    rc.simulate = spec;
  }
  if (const Json* cmp = s.child("compare")) {
    Section cs(*cmp, "compare");
    CompareSpec spec;
    if (auto t = cs.get<std::string>("truth")) spec.truth = resolve(base_dir, *t);
    if (auto m = cs.get<std::string>("model")) spec.model = resolve(base_dir, *m);
    cs.finish();
    rc.compare = spec;
  }
  s.finish();
  rc.train.seed = rc.seed;
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

}  // namespace odenet
