#include <cmath>
#include <set>
#include <sstream>

#include "pie/data.hpp"
#include "pie/error.hpp"
#include "pie/experiment.hpp"

namespace pie {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::Config, "config key '" + key + "': " + what);
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) config_error(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) config_error(where.empty() ? key : where + "." + key, "unknown key");
  }
}

double get_number(const json& j, const std::string& key, const std::string& path) {
  const auto& v = j.at(key);
  if (!v.is_number()) config_error(path, "expected a number");
  const double out = v.get<double>();
  if (!std::isfinite(out)) config_error(path, "must be finite");
  return out;
}

std::size_t get_count(const json& j, const std::string& key, const std::string& path) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    config_error(path, "expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

Vector get_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) config_error(path, "expected a nonempty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) config_error(path, "expected numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

Matrix get_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) config_error(path, "expected an array of rows");
  Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const Vector row = get_vector(v[r], path);
    if (row.size() != out.cols()) config_error(path, "matrix must be square");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

Mode mode_from_string(const std::string& s) {
  for (auto m : {Mode::Pie, Mode::Consensus, Mode::Multidim, Mode::FullOracle}) {
    if (to_string(m) == s) return m;
  }
  config_error("mode", "expected one of pie, consensus, multidim, full-oracle");
}

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "exact") return SamplerKind::Exact;
  if (s == "metropolis") return SamplerKind::Metropolis;
  config_error("sampler", "expected exact or metropolis");
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::Pie: return "pie";
    case Mode::Consensus: return "consensus";
    case Mode::Multidim: return "multidim";
    case Mode::FullOracle: return "full-oracle";
  }
  return "unknown";
}

std::string_view to_string(SamplerKind kind) noexcept {
  return kind == SamplerKind::Exact ? "exact" : "metropolis";
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, "", {"model", "data", "n", "K", "sampler", "chain", "functionals", "alpha_levels",
                     "grid_size", "seeds", "mode", "gap_range", "rate_sizes", "output"});
  ExperimentConfig cfg;

  // data
  if (!j.contains("data")) config_error("data", "missing");
  const auto& data = j.at("data");
  check_keys(data, "data", {"source", "theta0", "p", "path"});
  const std::string source = data.value("source", std::string("simulate"));
  if (source == "simulate") {
    cfg.data.kind = DataSource::Kind::Simulate;
  } else if (source == "csv") {
    cfg.data.kind = DataSource::Kind::Csv;
    if (!data.contains("path") || !data.at("path").is_string()) config_error("data.path", "missing");
    cfg.data.path = data.at("path").get<std::string>();
  } else {
    config_error("data.source", "expected simulate or csv");
  }
  if (data.contains("theta0")) cfg.data.theta0 = get_number(data, "theta0", "data.theta0");
  if (data.contains("p")) cfg.data.p = get_count(data, "p", "data.p");

  // model
  if (!j.contains("model")) config_error("model", "missing");
  const auto& model = j.at("model");
  check_keys(model, "model", {"family", "a", "b", "mu", "omega", "omega_scale"});
  if (!model.contains("family") || !model.at("family").is_string()) config_error("model.family", "missing");
  const Family family = family_from_string(model.at("family").get<std::string>());
  if (family == Family::NormalLinearNig) {
    const double a = model.contains("a") ? get_number(model, "a", "model.a") : 5.0;
    const double b = model.contains("b") ? get_number(model, "b", "model.b") : 1.0;
    Vector mu;
    if (model.contains("mu")) {
      mu = get_vector(model.at("mu"), "model.mu");
    } else if (cfg.data.p > 0) {
      mu = Vector::Zero(static_cast<Eigen::Index>(cfg.data.p));
    } else {
      config_error("model.mu", "normal-linear-nig needs model.mu or data.p");
    }
    if (cfg.data.p == 0) cfg.data.p = static_cast<std::size_t>(mu.size());
    if (cfg.data.p != static_cast<std::size_t>(mu.size())) config_error("model.mu", "length must equal data.p");
    Matrix omega;
    if (model.contains("omega")) {
      omega = get_matrix(model.at("omega"), "model.omega");
    } else {
      const double scale = model.contains("omega_scale") ? get_number(model, "omega_scale", "model.omega_scale") : 100.0;
      omega = scale * Matrix::Identity(mu.size(), mu.size());
    }
    cfg.model = ModelSpec::normal_linear_nig(std::move(mu), std::move(omega), a, b);
  } else if (family == Family::Custom) {
    config_error("model.family", "custom-logdensity models are available through the library API only");
  } else {
    const double a = model.contains("a") ? get_number(model, "a", "model.a") : 1.0;
    const double b = model.contains("b") ? get_number(model, "b", "model.b") : 1.0;
    switch (family) {
      case Family::PoissonGamma: cfg.model = ModelSpec::poisson_gamma(a, b); break;
      case Family::ExponentialGamma: cfg.model = ModelSpec::exponential_gamma(a, b); break;
      default: cfg.model = ModelSpec::bernoulli_beta(a, b); break;
    }
    if (cfg.data.kind == DataSource::Kind::Simulate && !cfg.data.theta0) {
      config_error("data.theta0", "simulated scalar data needs the true parameter");
    }
  }

  // sizes
  if (j.contains("n")) cfg.n = get_count(j, "n", "n");
  if (cfg.data.kind == DataSource::Kind::Simulate && cfg.n == 0) config_error("n", "missing or zero");
  if (!j.contains("K")) config_error("K", "missing");
  cfg.K = get_count(j, "K", "K");
  if (cfg.K == 0) config_error("K", "must be at least 1");
  if (cfg.n != 0 && cfg.n < cfg.K) config_error("K", "must not exceed n");

  // sampler and chain
  if (j.contains("sampler")) cfg.sampler = sampler_from_string(j.at("sampler").get<std::string>());
  if (j.contains("chain")) {
    const auto& chain = j.at("chain");
    check_keys(chain, "chain", {"T_total", "burn_fraction", "thin", "proposal_scale"});
    if (chain.contains("T_total")) cfg.chain.total_iterations = get_count(chain, "T_total", "chain.T_total");
    if (chain.contains("burn_fraction")) cfg.chain.burn_fraction = get_number(chain, "burn_fraction", "chain.burn_fraction");
    if (chain.contains("thin")) cfg.chain.thin = get_count(chain, "thin", "chain.thin");
    if (chain.contains("proposal_scale")) {
      const auto& scale = chain.at("proposal_scale");
      if (scale.is_string() && scale.get<std::string>() == "auto") {
        cfg.chain.proposal_scale.reset();
      } else if (scale.is_number()) {
        cfg.chain.proposal_scale = scale.get<double>();
      } else {
        config_error("chain.proposal_scale", "expected a number or \"auto\"");
      }
    }
  }
  try {
    cfg.chain.validate();
  } catch (const Error& e) {
    config_error("chain", e.what());
  }

  // functionals
  const std::size_t d = cfg.model.parameter_dim();
  if (j.contains("functionals")) {
    const auto& list = j.at("functionals");
    if (!list.is_array() || list.empty()) config_error("functionals", "expected a nonempty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "functionals[" + std::to_string(i) + "]";
      check_keys(list[i], path, {"name", "a", "b"});
      if (!list[i].contains("a")) config_error(path + ".a", "missing");
      Vector a = get_vector(list[i].at("a"), path + ".a");
      if (static_cast<std::size_t>(a.size()) != d) {
        config_error(path + ".a", "length must equal the parameter dimension " + std::to_string(d));
      }
      const double b = list[i].contains("b") ? get_number(list[i], "b", path + ".b") : 0.0;
      const std::string name = list[i].value("name", "f" + std::to_string(i + 1));
      if (!names.insert(name).second) config_error(path + ".name", "duplicate functional name");
      try {
        cfg.functionals.push_back({name, LinearFunctional(std::move(a), b)});
      } catch (const Error& e) {
        config_error(path, e.what());
      }
    }
  } else if (family == Family::NormalLinearNig) {
    for (std::size_t k = 0; k + 1 < d; ++k) {
      cfg.functionals.push_back({"beta" + std::to_string(k + 1), LinearFunctional::coordinate(d, k)});
    }
    cfg.functionals.push_back({"sigma2", LinearFunctional::coordinate(d, d - 1)});
  } else {
    cfg.functionals.push_back({"theta", LinearFunctional::coordinate(d, 0)});
  }

  // levels, grid, seeds, mode
  if (j.contains("alpha_levels")) {
    const Vector levels = get_vector(j.at("alpha_levels"), "alpha_levels");
    for (double alpha : levels) {
      if (!(alpha > 0.0 && alpha < 1.0)) config_error("alpha_levels", "every alpha must lie in (0, 1)");
      cfg.alpha_levels.push_back(alpha);
    }
  } else {
    cfg.alpha_levels = {0.05};
  }
  if (j.contains("grid_size")) cfg.grid_size = get_count(j, "grid_size", "grid_size");
  if (cfg.grid_size < 2) config_error("grid_size", "must be at least 2");
  if (j.contains("seeds")) {
    const auto& seeds = j.at("seeds");
    if (!seeds.is_array() || seeds.empty()) config_error("seeds", "expected a nonempty array");
    std::set<std::uint64_t> unique;
    for (const auto& s : seeds) {
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
        config_error("seeds", "expected nonnegative integers");
      }
      if (!unique.insert(s.get<std::uint64_t>()).second) config_error("seeds", "duplicate seed");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  } else {
    cfg.seeds = {0};
  }
  if (j.contains("mode")) cfg.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("gap_range")) {
    const Vector range = get_vector(j.at("gap_range"), "gap_range");
    if (range.size() != 2 || !(range[0] > 0.0 && range[0] < range[1] && range[1] < 1.0)) {
      config_error("gap_range", "expected [u1, u2] with 0 < u1 < u2 < 1");
    }
    cfg.gap_lower = range[0];
    cfg.gap_upper = range[1];
  }
  if (j.contains("rate_sizes")) {
    const auto& sizes = j.at("rate_sizes");
    if (!sizes.is_array() || sizes.size() < 3) config_error("rate_sizes", "expected at least 3 sizes");
    if (cfg.data.kind != DataSource::Kind::Simulate) config_error("rate_sizes", "needs simulated data");
    for (const auto& s : sizes) {
      const bool integral = s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0);
      if (!integral || s.get<std::size_t>() < cfg.K) {
        config_error("rate_sizes", "sizes must be integers >= K");
      }
      cfg.rate_sizes.push_back(s.get<std::size_t>());
    }
  }
  return cfg;
}

json ExperimentConfig::to_json() const {
  json model_json = {{"family", std::string(to_string(model.family()))},
                     {"a", model.a()},
                     {"b", model.b()}};
  if (model.family() == Family::NormalLinearNig) {
    model_json["mu"] = vector_json(model.mu());
    json omega = json::array();
    for (Eigen::Index r = 0; r < model.omega().rows(); ++r) omega.push_back(vector_json(model.omega().row(r).transpose()));
    model_json["omega"] = omega;
  }
  json data_json;
  if (data.kind == DataSource::Kind::Simulate) {
    data_json = {{"source", "simulate"}};
    if (data.theta0) data_json["theta0"] = *data.theta0;
    if (data.p > 0) data_json["p"] = data.p;
  } else {
    data_json = {{"source", "csv"}, {"path", data.path.generic_string()}};
  }
  json chain_json = {{"T_total", chain.total_iterations},
                     {"burn_fraction", chain.burn_fraction},
                     {"thin", chain.thin}};
  if (chain.proposal_scale) {
    chain_json["proposal_scale"] = *chain.proposal_scale;
  } else {
    chain_json["proposal_scale"] = "auto";
  }
  json functionals_json = json::array();
  for (const auto& f : functionals) {
    functionals_json.push_back({{"name", f.name}, {"a", vector_json(f.functional.a)}, {"b", f.functional.b}});
  }
  json out = {{"model", model_json},
              {"data", data_json},
              {"n", n},
              {"K", K},
              {"sampler", std::string(to_string(sampler))},
              {"chain", chain_json},
              {"functionals", functionals_json},
              {"alpha_levels", alpha_levels},
              {"grid_size", grid_size},
              {"seeds", seeds},
              {"mode", std::string(to_string(mode))},
              {"gap_range", {gap_lower, gap_upper}}};
  if (!rate_sizes.empty()) out["rate_sizes"] = rate_sizes;
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

}  // namespace pie
